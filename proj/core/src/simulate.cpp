#include "confacq/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "confacq/csv.hpp"
#include "confacq/errors.hpp"

namespace confacq {

TreatmentParams resolve_treatment_params(const CovariateTable& table,
                                         const TreatmentConfig& cfg, SplitRng rng) {
  TreatmentParams params;
  params.clip_lo = cfg.clip_lo;
  params.clip_hi = cfg.clip_hi;
  if (!(params.clip_lo > 0.0 && params.clip_lo < params.clip_hi && params.clip_hi < 1.0))
    throw ConfigError("treatment clip bounds must satisfy 0 < lo < hi < 1");
  if (cfg.columns.empty()) {
    for (const auto& c : table.columns()) params.subset_columns.push_back(c.name);
  } else {
    for (const auto& name : cfg.columns) {
      table.require_column(name);
      params.subset_columns.push_back(name);
    }
  }
  const auto p = static_cast<Eigen::Index>(params.subset_columns.size());
  params.xi.resize(p);
  if (cfg.xi.has_value()) {
    if (static_cast<Eigen::Index>(cfg.xi->size()) != p)
      throw ConfigError("treatment xi length does not match subset column count");
    for (Eigen::Index j = 0; j < p; ++j) params.xi[j] = (*cfg.xi)[static_cast<std::size_t>(j)];
  } else {
    SplitRng xi_rng = rng.split("xi");
    for (Eigen::Index j = 0; j < p; ++j) params.xi[j] = xi_rng.uniform(cfg.xi_lo, cfg.xi_hi);
  }
  return params;
}

Eigen::VectorXd treatment_probabilities(const CovariateTable& table,
                                        const TreatmentParams& params) {
  if (params.xi.size() != static_cast<Eigen::Index>(params.subset_columns.size()))
    throw ConfigError("treatment xi length does not match subset column count");
  Eigen::MatrixXd sub(table.n_samples(), params.xi.size());
  for (std::size_t j = 0; j < params.subset_columns.size(); ++j)
    sub.col(static_cast<Eigen::Index>(j)) =
        table.values().col(table.require_column(params.subset_columns[j]));
  Eigen::VectorXd p = sub * params.xi;
  return p.array().min(params.clip_hi).max(params.clip_lo);
}

Eigen::VectorXi generate_treatments(const CovariateTable& table, const TreatmentParams& params,
                                    SplitRng rng) {
  const Eigen::VectorXd p = treatment_probabilities(table, params);
  Eigen::VectorXi t(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) t[i] = rng.bernoulli(p[i]) ? 1 : 0;
  return t;
}

const std::map<std::string, double>& default_named_beta() {
  static const std::map<std::string, double> kDefault = {
      {"b.marr", 0.4}, {"mom.scoll", 0.4}, {"work.dur", 0.4},
      {"momwhite", 0.4}, {"cig", 0.4}, {"drugs", 0.4},
  };
  return kDefault;
}

namespace {

double draw_coefficient(SplitRng& rng, bool continuous) {
  static const double kValues[] = {0.0, 0.1, 0.2, 0.3, 0.4};
  const double p_zero = continuous ? 0.5 : 0.6;
  const double p_rest = (1.0 - p_zero) / 4.0;
  double u = rng.uniform();
  if (u < p_zero) return kValues[0];
  u -= p_zero;
  const auto bin = std::min<std::size_t>(3, static_cast<std::size_t>(u / p_rest));
  return kValues[bin + 1];
}

}  // namespace

OutcomeSurface sample_outcome_surface(const CovariateTable& table,
                                      const std::map<std::string, double>& named_beta,
                                      double noise_sd, SplitRng rng) {
  if (noise_sd < 0.0) throw ConfigError("outcome noise_sd must be nonnegative");
  for (const auto& [name, value] : named_beta) {
    (void)value;
    if (table.column_index(name) < 0)
      throw ConfigError("named outcome feature '" + name +
                        "' is not a column (supply a remap in the outcome config)");
  }
  OutcomeSurface surface;
  surface.named_beta = named_beta;
  surface.noise_sd = noise_sd;
  const auto p = table.n_columns();
  surface.beta.resize(p);
  surface.w_offset.resize(p);
  SplitRng beta_rng = rng.split("beta");
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& col = table.columns()[static_cast<std::size_t>(j)];
    auto it = named_beta.find(col.name);
    if (it != named_beta.end()) {
      surface.beta[j] = it->second;
      surface.w_offset[j] = 0.0;
    } else {
      surface.beta[j] = draw_coefficient(beta_rng, col.kind == ColumnKind::kContinuous);
      surface.w_offset[j] = 0.5;
    }
  }
  return surface;
}

Outcomes generate_outcomes(const CovariateTable& table, const Eigen::VectorXi& t,
                           const OutcomeSurface& surface, SplitRng rng) {
  if (surface.beta.size() != table.n_columns() || surface.w_offset.size() != table.n_columns())
    throw DataError("outcome surface dimension does not match table");
  if (t.size() != table.n_samples()) throw DataError("treatment vector length mismatch");
  Outcomes out;
  const Eigen::VectorXd mu =
      (table.values().rowwise() + surface.w_offset.transpose()) * surface.beta;
  out.y1_true = mu;
  out.y0_true = mu.array().exp();
  out.y_factual.resize(mu.size());
  SplitRng noise_rng = rng.split("outcome_noise");
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    // Both arms' noise is drawn so the stream does not depend on t.
    const double e0 = noise_rng.normal();
    const double e1 = noise_rng.normal();
    out.y_factual[i] = t[i] == 1 ? out.y1_true[i] + surface.noise_sd * e1
                                 : out.y0_true[i] + surface.noise_sd * e0;
  }
  return out;
}

Eigen::VectorXd mnar_scores(const Eigen::VectorXi& a_true, SplitRng rng, bool with_noise) {
  Eigen::VectorXd scores(a_true.size());
  for (Eigen::Index i = 0; i < a_true.size(); ++i) {
    const double u = with_noise ? rng.normal() : 0.0;
    scores[i] = (2.0 - a_true[i]) * 0.2 + u * 0.5;
  }
  return scores;
}

std::vector<int> apply_mnar_mask(const Eigen::VectorXi& a_true, double mask_fraction,
                                 SplitRng rng, bool with_noise) {
  if (mask_fraction < 0.0 || mask_fraction >= 1.0)
    throw ConfigError("mask_fraction must lie in [0, 1)");
  const auto n = a_true.size();
  const auto n_mask = static_cast<Eigen::Index>(
      std::ceil(mask_fraction * static_cast<double>(n)));
  if (n_mask == 0) return {};
  const Eigen::VectorXd scores = mnar_scores(a_true, rng.split("mnar_noise"), with_noise);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  order.resize(static_cast<std::size_t>(n_mask));
  std::sort(order.begin(), order.end());
  return order;
}

std::string to_string(AVariantMode mode) {
  switch (mode) {
    case AVariantMode::kIndependentPermuted: return "independent_permuted";
    case AVariantMode::kOriginalFraction: return "original_fraction";
    case AVariantMode::kBivariateGaussian: return "bivariate_gaussian";
  }
  return "?";
}

AVariantMode a_variant_mode_from_string(const std::string& s) {
  if (s == "independent_permuted") return AVariantMode::kIndependentPermuted;
  if (s == "original_fraction") return AVariantMode::kOriginalFraction;
  if (s == "bivariate_gaussian") return AVariantMode::kBivariateGaussian;
  throw ConfigError("unknown a_variant mode '" + s + "'");
}

AVariantResult apply_a_variant(const Eigen::VectorXi& a_original,
                               const CovariateTable& raw_table, const AVariantConfig& cfg,
                               SplitRng rng) {
  const auto n = a_original.size();
  if (n == 0) throw DataError("empty attribute vector");
  const double p_hat = a_original.cast<double>().mean();
  AVariantResult result;

  switch (cfg.mode) {
    case AVariantMode::kIndependentPermuted: {
      std::vector<int> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 0);
      SplitRng perm_rng = rng.split("a_permutation");
      perm_rng.shuffle(perm);
      result.a.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) result.a[i] = a_original[perm[static_cast<std::size_t>(i)]];
      return result;
    }
    case AVariantMode::kOriginalFraction: {
      if (cfg.retain_fraction < 0.0 || cfg.retain_fraction > 1.0)
        throw ConfigError("retain_fraction must lie in [0,1]");
      result.a = a_original;
      const auto n_replace = static_cast<Eigen::Index>(
          std::llround((1.0 - cfg.retain_fraction) * static_cast<double>(n)));
      if (n_replace == 0) return result;
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      SplitRng pick_rng = rng.split("a_replace_subset");
      pick_rng.shuffle(order);
      SplitRng draw_rng = rng.split("a_replace_draws");
      for (Eigen::Index k = 0; k < n_replace; ++k)
        result.a[order[static_cast<std::size_t>(k)]] = draw_rng.bernoulli(p_hat) ? 1 : 0;
      return result;
    }
    case AVariantMode::kBivariateGaussian: {
      if (cfg.rho < 0.0 || cfg.rho > 1.0) throw ConfigError("rho must lie in [0,1]");
      const int bw_col = raw_table.require_column(cfg.birthweight_column);
      const auto bw = raw_table.values().col(bw_col);
      const double bw_mean = bw.mean();
      const double bw_var =
          (bw.array() - bw_mean).square().sum() / static_cast<double>(bw.size() - 1);
      const double bw_sd = std::sqrt(std::max(bw_var, 0.0));
      SplitRng z_rng = rng.split("a_latent");
      Eigen::VectorXd z(n), b(n);
      const double ortho = std::sqrt(std::max(0.0, 1.0 - cfg.rho * cfg.rho));
      for (Eigen::Index i = 0; i < n; ++i) {
        const double zi = z_rng.normal();
        const double wi = z_rng.normal();
        z[i] = zi;
        b[i] = bw_mean + bw_sd * (cfg.rho * zi + ortho * wi);
      }
      // Empirical-quantile threshold keeps the A=1 proportion within 1/n of
      // the original.
      const auto n_ones = static_cast<Eigen::Index>(
          std::llround(p_hat * static_cast<double>(n)));
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int i, int j) { return z[i] > z[j]; });
      result.a = Eigen::VectorXi::Zero(n);
      for (Eigen::Index k = 0; k < n_ones; ++k) result.a[order[static_cast<std::size_t>(k)]] = 1;
      result.replaced_covariate = std::move(b);
      result.latent = std::move(z);
      return result;
    }
  }
  throw ConfigError("unhandled a_variant mode");
}

World build_world(const CovariateTable& raw_table, const std::string& attribute_column,
                  const SimulationConfig& cfg, SplitRng rng) {
  const int a_col = raw_table.require_column(attribute_column);
  if (raw_table.columns()[static_cast<std::size_t>(a_col)].kind != ColumnKind::kBinary)
    throw ConfigError("attribute column '" + attribute_column + "' must be binary");

  Eigen::VectorXi a_original(raw_table.n_samples());
  for (Eigen::Index i = 0; i < raw_table.n_samples(); ++i)
    a_original[i] = static_cast<int>(raw_table.values()(i, a_col));

  AVariantResult variant = apply_a_variant(a_original, raw_table, cfg.a_variant, rng.split("a_variant"));
  CovariateTable working = raw_table;
  if (variant.replaced_covariate.has_value())
    working = working.with_column_replaced(cfg.a_variant.birthweight_column,
                                           *variant.replaced_covariate);

  NormalizedTable normalized = normalize(working.without_column(attribute_column));

  // Full feature table: normalized covariates with the attribute appended.
  std::vector<Column> feature_columns = normalized.table.columns();
  feature_columns.push_back({attribute_column, ColumnKind::kBinary});
  Eigen::MatrixXd feature_values(normalized.table.n_samples(), normalized.table.n_columns() + 1);
  feature_values.leftCols(normalized.table.n_columns()) = normalized.table.values();
  feature_values.col(normalized.table.n_columns()) = variant.a.cast<double>();
  CovariateTable features(normalized.table.ids(), feature_columns, std::move(feature_values));

  World world;
  world.attribute_name = attribute_column;
  world.norm = std::move(normalized.stats);
  for (const auto& c : features.columns()) {
    world.feature_names.push_back(c.name);
    world.feature_kinds.push_back(c.kind);
  }
  world.treatment = resolve_treatment_params(features, cfg.treatment, rng.split("treatment"));
  const Eigen::VectorXi t =
      generate_treatments(features, world.treatment, rng.split("treatment_draws"));
  const auto& named = cfg.outcome.named_beta.empty() ? default_named_beta() : cfg.outcome.named_beta;
  world.surface =
      sample_outcome_surface(features, named, cfg.outcome.noise_sd, rng.split("surface"));
  const Outcomes outcomes = generate_outcomes(features, t, world.surface, rng.split("outcomes"));

  const auto n = features.n_samples();
  world.samples.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    world.samples.emplace_back(features.ids()[static_cast<std::size_t>(i)],
                               normalized.table.values().row(i).transpose().eval(),
                               variant.a[i], t[i], outcomes.y_factual[i], outcomes.y0_true[i],
                               outcomes.y1_true[i]);
  }
  return world;
}

void write_world_csvs(const World& world, const DataPartition& part,
                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::vector<std::string> header = {"id"};
    for (std::size_t j = 0; j + 1 < world.feature_names.size(); ++j)
      header.push_back(world.feature_names[j]);
    header.insert(header.end(),
                  {"a_true", "a_observed", "t", "y_factual", "y0_true", "y1_true"});
    AtomicCsvWriter writer(dir / "samples.csv", header);
    for (const auto& s : world.samples) {
      std::vector<std::string> row = {s.id()};
      for (Eigen::Index j = 0; j < s.x().size(); ++j) row.push_back(format_double(s.x()[j]));
      row.push_back(std::to_string(GroundTruth::a_true(s)));
      row.push_back(s.a_observed().has_value() ? std::to_string(*s.a_observed()) : "");
      row.push_back(std::to_string(s.t()));
      row.push_back(format_double(s.y_factual()));
      row.push_back(format_double(GroundTruth::y0(s)));
      row.push_back(format_double(GroundTruth::y1(s)));
      writer.write_row(row);
    }
    writer.close();
  }
  {
    AtomicCsvWriter writer(dir / "partition.csv", {"id", "split", "a_observed_present"});
    auto dump = [&](const std::vector<int>& idxs, const char* split) {
      for (int idx : idxs) {
        const Sample& s = world.samples[static_cast<std::size_t>(idx)];
        writer.write_row({s.id(), split, s.a_observed().has_value() ? "1" : "0"});
      }
    };
    dump(part.train(), "train");
    dump(part.pool(), "pool");
    dump(part.test(), "test");
    writer.close();
  }
}

DataPartition mnar_partition(std::vector<Sample>& samples, double mask_fraction,
                             double test_fraction, SplitRng rng) {
  const int n = static_cast<int>(samples.size());
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    throw ConfigError("test_fraction must lie in (0,1)");
  const int n_test = static_cast<int>(std::llround(test_fraction * n));
  if (n_test < 1 || n - n_test < 2)
    throw ConfigError("test_fraction produces an empty split");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  SplitRng test_rng = rng.split("test_split");
  test_rng.shuffle(order);
  std::vector<int> test(order.begin(), order.begin() + n_test);
  std::vector<int> nontest(order.begin() + n_test, order.end());
  std::sort(nontest.begin(), nontest.end());

  Eigen::VectorXi a_true(static_cast<Eigen::Index>(nontest.size()));
  for (std::size_t i = 0; i < nontest.size(); ++i)
    a_true[static_cast<Eigen::Index>(i)] =
        GroundTruth::a_true(samples[static_cast<std::size_t>(nontest[i])]);
  const std::vector<int> masked = apply_mnar_mask(a_true, mask_fraction, rng.split("mnar"));

  std::vector<char> is_masked(nontest.size(), 0);
  for (int k : masked) is_masked[static_cast<std::size_t>(k)] = 1;
  std::vector<int> train, pool;
  for (std::size_t i = 0; i < nontest.size(); ++i)
    (is_masked[i] ? pool : train).push_back(nontest[i]);
  if (train.empty() || pool.empty())
    throw ConfigError("mask_fraction produces an empty train or pool set");
  return make_partition(samples, std::move(train), std::move(pool), std::move(test));
}

std::vector<std::pair<std::string, int>> Oracle::reveal(const std::vector<int>& indices) {
  std::vector<std::pair<std::string, int>> revealed;
  revealed.reserve(indices.size());
  // Validate the whole batch first so a bad request mutates nothing.
  partition_.acquire(indices);
  for (int idx : indices) {
    Sample& s = samples_[static_cast<std::size_t>(idx)];
    GroundTruth::reveal(s);
    revealed.emplace_back(s.id(), GroundTruth::a_true(s));
  }
  return revealed;
}

}  // namespace confacq
