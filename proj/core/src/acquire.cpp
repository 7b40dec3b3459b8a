#include "confacq/acquire.hpp"

#include <algorithm>
#include <cmath>

#include "confacq/errors.hpp"
#include "confacq/gaussian_process.hpp"

namespace confacq {

double resolve_bandwidth(const KernelSpec& kernel, const Eigen::MatrixXd& reference_points) {
  if (kernel.bandwidth > 0.0) return kernel.bandwidth;
  return median_pairwise_distance(reference_points);
}

double rbf_kernel_value(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double bandwidth) {
  const double d2 = (u - v).squaredNorm();
  return std::exp(-d2 / (2.0 * bandwidth * bandwidth));
}

namespace {

double kernel_mean(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double h) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      acc += std::exp(-(a.row(i) - b.row(j)).squaredNorm() / (2.0 * h * h));
  return acc / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

}  // namespace

double mmd(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, double bandwidth) {
  if (u.rows() == 0 || v.rows() == 0) throw DataError("mmd: empty sample set");
  if (bandwidth <= 0.0) throw DataError("mmd: bandwidth must be positive");
  const double m2 = kernel_mean(u, u, bandwidth) + kernel_mean(v, v, bandwidth) -
                    2.0 * kernel_mean(u, v, bandwidth);
  return std::sqrt(std::max(0.0, m2));
}

double mmd(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, const KernelSpec& kernel) {
  if (u.rows() == 0 || v.rows() == 0) throw DataError("mmd: empty sample set");
  Eigen::MatrixXd stacked(u.rows() + v.rows(), u.cols());
  stacked.topRows(u.rows()) = u;
  stacked.bottomRows(v.rows()) = v;
  return mmd(u, v, resolve_bandwidth(kernel, stacked));
}

// ---------------------------------------------------------------------------
// MmdScorer
// ---------------------------------------------------------------------------

MmdScorer::MmdScorer(const Eigen::MatrixXd& treated, const Eigen::MatrixXd& control,
                     double bandwidth)
    : bandwidth_(bandwidth) {
  if (treated.rows() == 0 || control.rows() == 0)
    throw DataError("mmd scorer: both arms must be nonempty");
  if (bandwidth <= 0.0) throw DataError("mmd scorer: bandwidth must be positive");
  const Eigen::MatrixXd* mats[2] = {&control, &treated};
  for (int arm : {0, 1}) {
    Side& side = sides_[arm];
    const auto& m = *mats[arm];
    side.points.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      side.points.push_back(m.row(i).transpose());
      side.weights.push_back(1.0);
    }
    side.total_weight = static_cast<double>(m.rows());
    side.self_sum = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.rows(); ++j)
        side.self_sum += std::exp(-(m.row(i) - m.row(j)).squaredNorm() /
                                  (2.0 * bandwidth_ * bandwidth_));
  }
  cross_sum_ = 0.0;
  for (const auto& tp : sides_[1].points)
    cross_sum_ += cross_against(sides_[0], tp);
}

double MmdScorer::cross_against(const Side& side, const Eigen::VectorXd& point) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < side.points.size(); ++i)
    acc += side.weights[i] * rbf_kernel_value(side.points[i], point, bandwidth_);
  return acc;
}

double MmdScorer::current_mmd() const {
  const double wt = sides_[1].total_weight;
  const double wc = sides_[0].total_weight;
  const double m2 = sides_[1].self_sum / (wt * wt) + sides_[0].self_sum / (wc * wc) -
                    2.0 * cross_sum_ / (wt * wc);
  return std::sqrt(std::max(0.0, m2));
}

double MmdScorer::mmd_with_added(const Eigen::VectorXd& point, int arm) const {
  const Side& own = sides_[arm];
  const Side& other = sides_[1 - arm];
  const double self = own.self_sum + 2.0 * cross_against(own, point) + 1.0;  // k(p,p) = 1
  const double w_own = own.total_weight + 1.0;
  const double cross = cross_sum_ + cross_against(other, point);
  const double w_other = other.total_weight;
  const double m2 = self / (w_own * w_own) + other.self_sum / (w_other * w_other) -
                    2.0 * cross / (w_own * w_other);
  return std::sqrt(std::max(0.0, m2));
}

void MmdScorer::add_weighted(const Eigen::VectorXd& point, double weight, int arm) {
  if (weight < 0.0) throw DataError("mmd scorer: negative weight");
  if (weight == 0.0) return;
  Side& own = sides_[arm];
  own.self_sum += 2.0 * weight * cross_against(own, point) + weight * weight;
  cross_sum_ += weight * cross_against(sides_[1 - arm], point);
  own.points.push_back(point);
  own.weights.push_back(weight);
  own.total_weight += weight;
}

double expected_mmd_after_add(const Eigen::VectorXd& candidate_x, int candidate_t, double p_a1,
                              const Eigen::MatrixXd& treated, const Eigen::MatrixXd& control,
                              const KernelSpec& kernel) {
  if (p_a1 < 0.0 || p_a1 > 1.0) throw DataError("expected_mmd_after_add: p outside [0,1]");
  Eigen::MatrixXd stacked(treated.rows() + control.rows(), treated.cols());
  stacked.topRows(treated.rows()) = treated;
  stacked.bottomRows(control.rows()) = control;
  MmdScorer scorer(treated, control, resolve_bandwidth(kernel, stacked));
  Eigen::VectorXd with_a1(candidate_x.size() + 1), with_a0(candidate_x.size() + 1);
  with_a1 << candidate_x, 1.0;
  with_a0 << candidate_x, 0.0;
  return p_a1 * scorer.mmd_with_added(with_a1, candidate_t) +
         (1.0 - p_a1) * scorer.mmd_with_added(with_a0, candidate_t);
}

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kRandom: return "random";
    case StrategyKind::kUncertainty: return "uncertainty";
    case StrategyKind::kCb: return "cb";
    case StrategyKind::kOe: return "oe";
  }
  return "?";
}

StrategyKind strategy_kind_from_string(const std::string& s) {
  if (s == "random") return StrategyKind::kRandom;
  if (s == "uncertainty") return StrategyKind::kUncertainty;
  if (s == "cb") return StrategyKind::kCb;
  if (s == "oe") return StrategyKind::kOe;
  throw ConfigError("unknown strategy '" + s + "'");
}

ArmFeatures train_arm_features(const std::vector<Sample>& samples,
                               const std::vector<int>& train_idx) {
  std::vector<int> treated, control;
  for (int idx : train_idx)
    (samples[static_cast<std::size_t>(idx)].t() == 1 ? treated : control).push_back(idx);
  const auto p = samples.empty() ? 0 : samples.front().x().size();
  ArmFeatures out;
  out.treated.resize(static_cast<Eigen::Index>(treated.size()), p + 1);
  out.control.resize(static_cast<Eigen::Index>(control.size()), p + 1);
  auto fill = [&](const std::vector<int>& idxs, Eigen::MatrixXd& m) {
    for (std::size_t i = 0; i < idxs.size(); ++i) {
      const Sample& s = samples[static_cast<std::size_t>(idxs[i])];
      if (!s.a_observed().has_value())
        throw DataError("train sample '" + s.id() + "' has no acquired attribute value");
      m.row(static_cast<Eigen::Index>(i)).head(p) = s.x().transpose();
      m(static_cast<Eigen::Index>(i), p) = static_cast<double>(*s.a_observed());
    }
  };
  fill(treated, out.treated);
  fill(control, out.control);
  return out;
}

namespace {

struct ScoredCandidate {
  int index;
  double score;
  std::uint64_t tiebreak;
};

// Deterministic total order; lower score first.
void sort_ascending(std::vector<ScoredCandidate>& scored) {
  std::sort(scored.begin(), scored.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.tiebreak != b.tiebreak) return a.tiebreak < b.tiebreak;
    return a.index < b.index;
  });
}

int clamped_batch(const AcquisitionRequest& req, std::size_t pool_size) {
  if (req.batch_size < 1) throw ConfigError("batch size must be >= 1");
  return static_cast<int>(std::min<std::size_t>(pool_size, static_cast<std::size_t>(req.batch_size)));
}

struct PoolView {
  std::vector<int> indices;
  Eigen::MatrixXd x;
  Eigen::VectorXi t;
  Eigen::VectorXd y;
};

PoolView pool_view(const std::vector<Sample>& samples, const DataPartition& part) {
  PoolView view;
  view.indices = part.pool();
  const auto n = static_cast<Eigen::Index>(view.indices.size());
  const auto p = samples.empty() ? 0 : samples.front().x().size();
  view.x.resize(n, p);
  view.t.resize(n);
  view.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = samples[static_cast<std::size_t>(view.indices[static_cast<std::size_t>(i)])];
    view.x.row(i) = s.x().transpose();
    view.t[i] = s.t();
    view.y[i] = s.y_factual();
  }
  return view;
}

std::uint64_t candidate_tiebreak(const std::vector<Sample>& samples, int idx, SplitRng& rng) {
  return mix_key(rng.key(), samples[static_cast<std::size_t>(idx)].id());
}

}  // namespace

std::vector<int> select_random(const std::vector<Sample>& samples, const DataPartition& part,
                               const AcquisitionRequest& req, SplitRng rng) {
  (void)samples;
  std::vector<int> pool = part.pool();
  const int take = clamped_batch(req, pool.size());
  rng.shuffle(pool);
  pool.resize(static_cast<std::size_t>(take));
  return pool;
}

std::vector<int> select_uncertainty(const std::vector<Sample>& samples,
                                    const DataPartition& part, const AttributeModel& cl_a,
                                    const AcquisitionRequest& req, SplitRng rng) {
  const PoolView view = pool_view(samples, part);
  const int take = clamped_batch(req, view.indices.size());
  const Eigen::VectorXd p1 = cl_a.predict(view.x, view.t);
  std::vector<ScoredCandidate> scored;
  scored.reserve(view.indices.size());
  for (std::size_t i = 0; i < view.indices.size(); ++i) {
    // Most uncertain = probability closest to one half.
    const double score = std::abs(p1[static_cast<Eigen::Index>(i)] - 0.5);
    scored.push_back({view.indices[i], score, candidate_tiebreak(samples, view.indices[i], rng)});
  }
  sort_ascending(scored);
  std::vector<int> batch;
  batch.reserve(static_cast<std::size_t>(take));
  for (int k = 0; k < take; ++k) batch.push_back(scored[static_cast<std::size_t>(k)].index);
  return batch;
}

std::vector<int> select_cb(const std::vector<Sample>& samples, const DataPartition& part,
                           const AttributeModel& cl_a, const AcquisitionRequest& req,
                           SplitRng rng) {
  const ArmFeatures arms = train_arm_features(samples, part.train());
  if (arms.treated.rows() == 0 || arms.control.rows() == 0)
    throw FitError("cb: both treatment arms must be present in train");

  Eigen::MatrixXd stacked(arms.treated.rows() + arms.control.rows(), arms.treated.cols());
  stacked.topRows(arms.treated.rows()) = arms.treated;
  stacked.bottomRows(arms.control.rows()) = arms.control;
  const double bandwidth = resolve_bandwidth(req.kernel, stacked);
  MmdScorer scorer(arms.treated, arms.control, bandwidth);

  const PoolView view = pool_view(samples, part);
  const int take = clamped_batch(req, view.indices.size());
  const Eigen::VectorXd p1 = cl_a.predict(view.x, view.t);

  const auto p = view.x.cols();
  auto score_candidate = [&](Eigen::Index i) {
    Eigen::VectorXd with_a1(p + 1), with_a0(p + 1);
    with_a1 << view.x.row(i).transpose(), 1.0;
    with_a0 << view.x.row(i).transpose(), 0.0;
    const int arm = view.t[i];
    return p1[i] * scorer.mmd_with_added(with_a1, arm) +
           (1.0 - p1[i]) * scorer.mmd_with_added(with_a0, arm);
  };

  if (req.scoring_mode == CbScoringMode::kIndependent) {
    std::vector<ScoredCandidate> scored;
    scored.reserve(view.indices.size());
    for (std::size_t i = 0; i < view.indices.size(); ++i)
      scored.push_back({view.indices[i], score_candidate(static_cast<Eigen::Index>(i)),
                        candidate_tiebreak(samples, view.indices[i], rng)});
    sort_ascending(scored);
    std::vector<int> batch;
    for (int k = 0; k < take; ++k) batch.push_back(scored[static_cast<std::size_t>(k)].index);
    return batch;
  }

  // Greedy: after each pick the candidate joins the scorer as two weighted
  // attribute copies, then the remainder is rescored.
  std::vector<char> taken(view.indices.size(), 0);
  std::vector<int> batch;
  batch.reserve(static_cast<std::size_t>(take));
  for (int k = 0; k < take; ++k) {
    int best_slot = -1;
    ScoredCandidate best{-1, 0.0, 0};
    for (std::size_t i = 0; i < view.indices.size(); ++i) {
      if (taken[i]) continue;
      ScoredCandidate cand{view.indices[i], score_candidate(static_cast<Eigen::Index>(i)),
                           candidate_tiebreak(samples, view.indices[i], rng)};
      const bool better = best_slot < 0 || cand.score < best.score ||
                          (cand.score == best.score &&
                           (cand.tiebreak < best.tiebreak ||
                            (cand.tiebreak == best.tiebreak && cand.index < best.index)));
      if (better) {
        best = cand;
        best_slot = static_cast<int>(i);
      }
    }
    taken[static_cast<std::size_t>(best_slot)] = 1;
    batch.push_back(best.index);
    const auto i = static_cast<Eigen::Index>(best_slot);
    Eigen::VectorXd with_a1(p + 1), with_a0(p + 1);
    with_a1 << view.x.row(i).transpose(), 1.0;
    with_a0 << view.x.row(i).transpose(), 0.0;
    scorer.add_weighted(with_a1, p1[i], view.t[i]);
    scorer.add_weighted(with_a0, 1.0 - p1[i], view.t[i]);
  }
  return batch;
}

std::vector<int> select_oe(const std::vector<Sample>& samples, const DataPartition& part,
                           const AttributeModel& cl_a, const Estimator& cl_y,
                           const AcquisitionRequest& req, SplitRng rng) {
  if (!cl_y.predicts_factual_outcome())
    throw ConfigError("oe: estimator '" + cl_y.kind() + "' does not predict factual outcomes");
  const PoolView view = pool_view(samples, part);
  const int take = clamped_batch(req, view.indices.size());
  const Eigen::VectorXd p1 = cl_a.predict(view.x, view.t);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(view.x.rows());
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(view.x.rows());
  const Eigen::VectorXd yhat_a1 = cl_y.predict_factual(view.x, ones, view.t);
  const Eigen::VectorXd yhat_a0 = cl_y.predict_factual(view.x, zeros, view.t);
  std::vector<ScoredCandidate> scored;
  scored.reserve(view.indices.size());
  for (std::size_t i = 0; i < view.indices.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    // Largest error first: sort ascending on the negated score.
    const double score = -oe_score(p1[row], yhat_a1[row], yhat_a0[row], view.y[row]);
    scored.push_back({view.indices[i], score, candidate_tiebreak(samples, view.indices[i], rng)});
  }
  sort_ascending(scored);
  std::vector<int> batch;
  for (int k = 0; k < take; ++k) batch.push_back(scored[static_cast<std::size_t>(k)].index);
  return batch;
}

std::vector<int> select_batch(const std::vector<Sample>& samples, const DataPartition& part,
                              const AttributeModel& cl_a, const Estimator* cl_y,
                              const AcquisitionRequest& req, SplitRng rng) {
  switch (req.strategy) {
    case StrategyKind::kRandom:
      return select_random(samples, part, req, rng);
    case StrategyKind::kUncertainty:
      return select_uncertainty(samples, part, cl_a, req, rng);
    case StrategyKind::kCb:
      return select_cb(samples, part, cl_a, req, rng);
    case StrategyKind::kOe:
      if (cl_y == nullptr) throw ConfigError("oe: estimator required");
      return select_oe(samples, part, cl_a, *cl_y, req, rng);
  }
  throw ConfigError("unhandled strategy");
}

}  // namespace confacq
