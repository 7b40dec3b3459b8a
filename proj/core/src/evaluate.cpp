#include "confacq/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "confacq/csv.hpp"
#include "confacq/errors.hpp"
#include "confacq/log.hpp"

namespace confacq {

double eps_ate(const Eigen::VectorXd& predicted_effect, const Eigen::VectorXd& true_effect) {
  if (predicted_effect.size() == 0 || predicted_effect.size() != true_effect.size())
    throw DataError("eps_ate: effect vectors must be nonempty and aligned");
  return std::abs(predicted_effect.mean() - true_effect.mean());
}

double pehe(const Eigen::VectorXd& predicted_effect, const Eigen::VectorXd& true_effect) {
  if (predicted_effect.size() == 0 || predicted_effect.size() != true_effect.size())
    throw DataError("pehe: effect vectors must be nonempty and aligned");
  return (predicted_effect - true_effect).squaredNorm() /
         static_cast<double>(predicted_effect.size());
}

TestSet assemble_test(const std::vector<Sample>& samples, const std::vector<int>& test_idx) {
  TestSet test;
  const auto n = static_cast<Eigen::Index>(test_idx.size());
  if (n == 0) throw DataError("empty test set");
  const auto p = samples[static_cast<std::size_t>(test_idx[0])].x().size();
  test.x.resize(n, p);
  test.a_true.resize(n);
  test.true_effect.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = samples[static_cast<std::size_t>(test_idx[static_cast<std::size_t>(i)])];
    test.x.row(i) = s.x().transpose();
    test.a_true[i] = static_cast<double>(GroundTruth::a_true(s));
    test.true_effect[i] = GroundTruth::y1(s) - GroundTruth::y0(s);
  }
  return test;
}

TestMetrics evaluate_on_test(const Estimator& model, const TestSet& test) {
  const PotentialOutcomes po = model.predict_potential(test.x, test.a_true);
  TestMetrics m;
  m.eps_ate = eps_ate(po.y1 - po.y0, test.true_effect);
  m.pehe = pehe(po.y1 - po.y0, test.true_effect);
  m.sqrt_pehe = std::sqrt(m.pehe);
  return m;
}

OptimalReference optimal_reference(const std::vector<Sample>& samples,
                                   const DataPartition& part, const EstimatorConfig& cfg,
                                   SplitRng fit_rng) {
  // Train on train + pool with the attribute revealed everywhere (evaluator
  // privilege); the frozen test set stays held out.
  std::vector<int> idx = part.train();
  idx.insert(idx.end(), part.pool().begin(), part.pool().end());
  std::sort(idx.begin(), idx.end());
  TrainData data;
  const auto n = static_cast<Eigen::Index>(idx.size());
  const auto p = samples[static_cast<std::size_t>(idx[0])].x().size();
  data.x.resize(n, p);
  data.a.resize(n);
  data.t.resize(n);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = samples[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    data.x.row(i) = s.x().transpose();
    data.a[i] = static_cast<double>(GroundTruth::a_true(s));
    data.t[i] = s.t();
    data.y[i] = s.y_factual();
  }
  auto model = fit_estimator(cfg, data, fit_rng);
  const TestMetrics m = evaluate_on_test(*model, assemble_test(samples, part.test()));
  return {m.eps_ate, m.sqrt_pehe};
}

// ---------------------------------------------------------------------------
// Sample-efficiency statistics
// ---------------------------------------------------------------------------

namespace {

double metric_value(const MetricsRecord& r, MetricKind metric) {
  return metric == MetricKind::kEpsAte ? r.eps_ate : r.sqrt_pehe;
}

}  // namespace

std::optional<int> samples_to_within(const AcquisitionTrace& trace, double optimal,
                                     MetricKind metric, double pct) {
  if (trace.records.empty()) throw DataError("samples_to_within: empty trace");
  const double threshold = optimal > 1e-9 ? (1.0 + pct) * optimal : 1e-3;
  // First record at which the metric is within the threshold.
  for (const auto& record : trace.records)
    if (metric_value(record, metric) <= threshold) return record.n_acquired;
  return std::nullopt;
}

Summary summarize(const std::vector<AcquisitionTrace>& traces, double pct) {
  std::map<std::pair<std::string, std::string>, std::vector<const AcquisitionTrace*>> groups;
  for (const auto& t : traces) {
    if (t.failed) continue;
    groups[{t.strategy, t.estimator}].push_back(&t);
  }
  if (groups.empty()) throw DataError("summarize: no successful traces");
  for (const auto& [key, group] : groups)
    if (group.size() < 2)
      throw DataError("summarize: group (" + key.first + ", " + key.second +
                      ") has fewer than 2 traces");

  Summary summary;

  // Optimal references per estimator (Table 1a shape).
  std::map<std::string, std::vector<double>> opt_ate, opt_pehe;
  std::map<std::string, std::set<int>> seen_realizations;
  for (const auto& t : traces) {
    if (t.failed || !std::isfinite(t.optimal_eps_ate)) continue;
    // One entry per (realization, estimator): strategies share the reference.
    if (!seen_realizations[t.estimator].insert(t.realization).second) continue;
    opt_ate[t.estimator].push_back(t.optimal_eps_ate);
    opt_pehe[t.estimator].push_back(t.optimal_sqrt_pehe);
  }
  for (const auto& [estimator, values] : opt_ate) {
    OptimalSummary os;
    os.estimator = estimator;
    os.eps_ate = mean_ci(values);
    os.sqrt_pehe = mean_ci(opt_pehe[estimator]);
    summary.optimal.push_back(os);
  }

  // Efficiency per group.
  std::map<std::pair<std::string, std::string>, std::vector<double>> to_ate, to_pehe;
  for (const auto& [key, group] : groups) {
    EfficiencySummary eff;
    eff.strategy = key.first;
    eff.estimator = key.second;
    eff.n_traces = static_cast<int>(group.size());
    std::vector<double> ate_counts, pehe_counts;
    for (const auto* t : group) {
      if (auto c = samples_to_within(*t, t->optimal_eps_ate, MetricKind::kEpsAte, pct))
        ate_counts.push_back(static_cast<double>(*c));
      else
        ++eff.n_censored_eps_ate;
      if (auto c = samples_to_within(*t, t->optimal_sqrt_pehe, MetricKind::kSqrtPehe, pct))
        pehe_counts.push_back(static_cast<double>(*c));
      else
        ++eff.n_censored_sqrt_pehe;
    }
    if (!ate_counts.empty()) eff.samples_to_eps_ate = mean_ci(ate_counts);
    if (!pehe_counts.empty()) eff.samples_to_sqrt_pehe = mean_ci(pehe_counts);
    to_ate[key] = std::move(ate_counts);
    to_pehe[key] = std::move(pehe_counts);
    summary.efficiency.push_back(std::move(eff));
  }

  // Pairwise one-sided Welch tests within each estimator; the "bold" marker
  // requires beating every other strategy at alpha = 0.05.
  for (auto& eff : summary.efficiency) {
    bool best_ate = true, best_pehe = true;
    bool any_rival = false;
    for (const auto& [key, group] : groups) {
      (void)group;
      if (key.second != eff.estimator || key.first == eff.strategy) continue;
      any_rival = true;
      const auto mine = std::make_pair(eff.strategy, eff.estimator);
      for (auto [metric_name, table, flag] :
           {std::tuple{std::string("eps_ate"), &to_ate, &best_ate},
            std::tuple{std::string("sqrt_pehe"), &to_pehe, &best_pehe}}) {
        const auto& a = (*table)[mine];
        const auto& b = (*table)[key];
        double p = 1.0;
        if (a.size() >= 2 && b.size() >= 2) p = welch_t_test_p(a, b, Alternative::kLess);
        summary.pairwise_p.emplace_back(eff.estimator, metric_name, eff.strategy, key.first, p);
        if (p >= 0.05) *flag = false;
      }
    }
    eff.significantly_best_eps_ate = any_rival && best_ate;
    eff.significantly_best_sqrt_pehe = any_rival && best_pehe;
  }

  // Per-iteration mean curves.
  for (const auto& [key, group] : groups) {
    std::size_t max_len = 0;
    for (const auto* t : group) max_len = std::max(max_len, t->records.size());
    std::vector<CurvePoint> curve;
    for (std::size_t r = 0; r < max_len; ++r) {
      std::vector<double> ate, sp;
      int iteration = 0, n_acquired = 0;
      for (const auto* t : group) {
        if (r >= t->records.size()) continue;
        const auto& rec = t->records[r];
        iteration = rec.iteration;
        n_acquired = rec.n_acquired;
        ate.push_back(rec.eps_ate);
        sp.push_back(rec.sqrt_pehe);
      }
      if (ate.size() < 2) continue;
      CurvePoint pt;
      pt.iteration = iteration;
      pt.n_acquired = n_acquired;
      pt.eps_ate = mean_ci(ate);
      pt.sqrt_pehe = mean_ci(sp);
      curve.push_back(pt);
    }
    summary.curves[key] = std::move(curve);
  }

  return summary;
}

// ---------------------------------------------------------------------------
// PCA export
// ---------------------------------------------------------------------------

PcaProjection pca_project(const std::vector<Sample>& samples, const std::vector<int>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  if (n < 3) throw DataError("pca requires at least 3 samples");
  const auto p = samples[static_cast<std::size_t>(idx[0])].x().size() + 1;
  if (p < 2) throw DataError("pca requires at least 2 features");
  Eigen::MatrixXd features(n, p);
  PcaProjection out;
  out.ids.reserve(static_cast<std::size_t>(n));
  out.arm.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = samples[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    if (!s.a_observed().has_value())
      throw DataError("pca over samples without an acquired attribute");
    features.row(i).head(p - 1) = s.x().transpose();
    features(i, p - 1) = static_cast<double>(*s.a_observed());
    out.ids.push_back(s.id());
    out.arm.push_back(s.t());
  }
  const Eigen::RowVectorXd mean = features.colwise().mean();
  features.rowwise() -= mean;
  const Eigen::MatrixXd cov =
      features.transpose() * features / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DataError("pca eigendecomposition failed");
  // Eigen returns ascending eigenvalues; take the last two.
  const auto last = cov.rows() - 1;
  Eigen::VectorXd pc1 = solver.eigenvectors().col(last);
  Eigen::VectorXd pc2 = solver.eigenvectors().col(last - 1);
  double lambda1 = std::max(0.0, solver.eigenvalues()[last]);
  double lambda2 = std::max(0.0, solver.eigenvalues()[last - 1]);
  auto fix_sign = [](Eigen::VectorXd& v) {
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
  };
  fix_sign(pc1);
  fix_sign(pc2);
  out.coords.resize(n, 2);
  out.coords.col(0) = features * pc1;
  if (lambda2 <= 1e-12 * std::max(lambda1, 1e-300)) {
    out.rank_deficient = true;
    out.coords.col(1).setZero();
    lambda2 = 0.0;
    log::warn("pca: feature rank < 2; second component zeroed");
  } else {
    out.coords.col(1) = features * pc2;
  }
  out.explained << lambda1, lambda2;
  return out;
}

std::vector<std::pair<int, int>> arm_counts(const AcquisitionTrace& trace) {
  std::vector<std::pair<int, int>> counts;
  counts.reserve(trace.records.size());
  for (const auto& r : trace.records)
    counts.emplace_back(r.n_treated_acquired, r.n_control_acquired);
  return counts;
}

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

void write_traces_csv(const std::filesystem::path& path,
                      const std::vector<AcquisitionTrace>& traces) {
  AtomicCsvWriter writer(path, {"realization", "strategy", "estimator", "iteration",
                                "n_acquired", "eps_ate", "pehe", "sqrt_pehe", "n_treated",
                                "n_control"});
  for (const auto& t : traces) {
    if (t.failed) continue;
    for (const auto& r : t.records)
      writer.write_row({std::to_string(t.realization), t.strategy, t.estimator,
                        std::to_string(r.iteration), std::to_string(r.n_acquired),
                        format_double(r.eps_ate), format_double(r.pehe),
                        format_double(r.sqrt_pehe), std::to_string(r.n_treated_acquired),
                        std::to_string(r.n_control_acquired)});
  }
  writer.close();
}

std::vector<AcquisitionTrace> read_traces_csv(const std::filesystem::path& path) {
  const CsvTable csv = read_csv(path);
  const std::vector<std::string> expected = {"realization", "strategy",  "estimator",
                                             "iteration",   "n_acquired", "eps_ate",
                                             "pehe",        "sqrt_pehe",  "n_treated",
                                             "n_control"};
  if (csv.header != expected) throw DataError(path.string() + ": unexpected trace header");
  std::map<std::tuple<int, std::string, std::string>, AcquisitionTrace> by_key;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& row = csv.rows[i];
    const int realization = static_cast<int>(parse_cell(row[0], i + 2, "realization"));
    auto key = std::make_tuple(realization, row[1], row[2]);
    auto& trace = by_key[key];
    trace.realization = realization;
    trace.strategy = row[1];
    trace.estimator = row[2];
    MetricsRecord rec;
    rec.iteration = static_cast<int>(parse_cell(row[3], i + 2, "iteration"));
    rec.n_acquired = static_cast<int>(parse_cell(row[4], i + 2, "n_acquired"));
    rec.eps_ate = parse_cell(row[5], i + 2, "eps_ate");
    rec.pehe = parse_cell(row[6], i + 2, "pehe");
    rec.sqrt_pehe = parse_cell(row[7], i + 2, "sqrt_pehe");
    rec.n_treated_acquired = static_cast<int>(parse_cell(row[8], i + 2, "n_treated"));
    rec.n_control_acquired = static_cast<int>(parse_cell(row[9], i + 2, "n_control"));
    trace.records.push_back(rec);
  }
  std::vector<AcquisitionTrace> traces;
  traces.reserve(by_key.size());
  for (auto& [key, trace] : by_key) {
    (void)key;
    std::sort(trace.records.begin(), trace.records.end(),
              [](const MetricsRecord& a, const MetricsRecord& b) {
                return a.iteration < b.iteration;
              });
    traces.push_back(std::move(trace));
  }
  return traces;
}

void write_optimal_csv(const std::filesystem::path& path,
                       const std::vector<AcquisitionTrace>& traces) {
  AtomicCsvWriter writer(path, {"realization", "estimator", "opt_eps_ate", "opt_sqrt_pehe"});
  std::set<std::pair<int, std::string>> written;
  for (const auto& t : traces) {
    if (t.failed || !std::isfinite(t.optimal_eps_ate)) continue;
    if (!written.insert({t.realization, t.estimator}).second) continue;
    writer.write_row({std::to_string(t.realization), t.estimator,
                      format_double(t.optimal_eps_ate), format_double(t.optimal_sqrt_pehe)});
  }
  writer.close();
}

void read_optimal_csv(const std::filesystem::path& path,
                      std::vector<AcquisitionTrace>& traces) {
  const CsvTable csv = read_csv(path);
  const std::vector<std::string> expected = {"realization", "estimator", "opt_eps_ate",
                                             "opt_sqrt_pehe"};
  if (csv.header != expected) throw DataError(path.string() + ": unexpected optimal header");
  std::map<std::pair<int, std::string>, std::pair<double, double>> values;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& row = csv.rows[i];
    values[{static_cast<int>(parse_cell(row[0], i + 2, "realization")), row[1]}] = {
        parse_cell(row[2], i + 2, "opt_eps_ate"), parse_cell(row[3], i + 2, "opt_sqrt_pehe")};
  }
  for (auto& t : traces) {
    auto it = values.find({t.realization, t.estimator});
    if (it == values.end())
      throw DataError("no optimal reference for realization " + std::to_string(t.realization) +
                      ", estimator " + t.estimator);
    t.optimal_eps_ate = it->second.first;
    t.optimal_sqrt_pehe = it->second.second;
  }
}

void write_summary_csvs(const std::filesystem::path& dir, const Summary& summary) {
  {
    AtomicCsvWriter writer(dir / "summary_optimal.csv",
                           {"estimator", "opt_eps_ate_mean", "opt_eps_ate_ci95",
                            "opt_sqrt_pehe_mean", "opt_sqrt_pehe_ci95", "n_realizations"});
    for (const auto& os : summary.optimal)
      writer.write_row({os.estimator, format_double(os.eps_ate.mean),
                        format_double(os.eps_ate.half_width), format_double(os.sqrt_pehe.mean),
                        format_double(os.sqrt_pehe.half_width), std::to_string(os.eps_ate.n)});
    writer.close();
  }
  {
    AtomicCsvWriter writer(
        dir / "summary_samples_to_optimal.csv",
        {"estimator", "strategy", "n_traces", "metric", "mean_samples", "ci95", "n_censored",
         "significantly_best"});
    for (const auto& eff : summary.efficiency) {
      writer.write_row({eff.estimator, eff.strategy, std::to_string(eff.n_traces), "eps_ate",
                        format_double(eff.samples_to_eps_ate.mean),
                        format_double(eff.samples_to_eps_ate.half_width),
                        std::to_string(eff.n_censored_eps_ate),
                        eff.significantly_best_eps_ate ? "1" : "0"});
      writer.write_row({eff.estimator, eff.strategy, std::to_string(eff.n_traces), "sqrt_pehe",
                        format_double(eff.samples_to_sqrt_pehe.mean),
                        format_double(eff.samples_to_sqrt_pehe.half_width),
                        std::to_string(eff.n_censored_sqrt_pehe),
                        eff.significantly_best_sqrt_pehe ? "1" : "0"});
    }
    writer.close();
  }
  {
    AtomicCsvWriter writer(dir / "summary_curves.csv",
                           {"strategy", "estimator", "iteration", "n_acquired", "eps_ate_mean",
                            "eps_ate_ci95", "sqrt_pehe_mean", "sqrt_pehe_ci95", "n_traces"});
    for (const auto& [key, curve] : summary.curves)
      for (const auto& pt : curve)
        writer.write_row({key.first, key.second, std::to_string(pt.iteration),
                          std::to_string(pt.n_acquired), format_double(pt.eps_ate.mean),
                          format_double(pt.eps_ate.half_width),
                          format_double(pt.sqrt_pehe.mean),
                          format_double(pt.sqrt_pehe.half_width),
                          std::to_string(pt.eps_ate.n)});
    writer.close();
  }
  {
    AtomicCsvWriter writer(dir / "summary_tests.csv",
                           {"estimator", "metric", "strategy_a", "strategy_b",
                            "p_one_sided_a_less_b"});
    for (const auto& [estimator, metric, sa, sb, p] : summary.pairwise_p)
      writer.write_row({estimator, metric, sa, sb, format_double(p)});
    writer.close();
  }
}

}  // namespace confacq
