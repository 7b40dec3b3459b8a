#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "confacq/rng.hpp"
#include "confacq/sample.hpp"
#include "confacq/table.hpp"

namespace confacq {

// ---------------------------------------------------------------------------
// Treatment assignment: p_i = clip(x_sub,i . xi, clip_lo, clip_hi), t_i ~
// Bernoulli(p_i).
// ---------------------------------------------------------------------------

struct TreatmentParams {
  std::vector<std::string> subset_columns;
  Eigen::VectorXd xi;  // aligned with subset_columns
  double clip_lo = 0.005;
  double clip_hi = 0.995;
};

struct TreatmentConfig {
  std::vector<std::string> columns;  // empty = all table columns
  std::optional<std::vector<double>> xi;  // absent = drawn uniform per column
  double xi_lo = 0.0;
  double xi_hi = 0.2;
  double clip_lo = 0.005;
  double clip_hi = 0.995;
};

TreatmentParams resolve_treatment_params(const CovariateTable& table,
                                         const TreatmentConfig& cfg, SplitRng rng);

Eigen::VectorXd treatment_probabilities(const CovariateTable& table,
                                        const TreatmentParams& params);

Eigen::VectorXi generate_treatments(const CovariateTable& table, const TreatmentParams& params,
                                    SplitRng rng);

// ---------------------------------------------------------------------------
// Outcome surface: y0 ~ N(exp((F+W).beta), noise), y1 ~ N((F+W).beta, noise),
// where F are the table columns (covariates plus the attribute). Columns in
// named_beta get their configured coefficient and W = 0; every other column
// draws beta from {0,.1,.2,.3,.4} (probabilities depend on column kind) and
// gets W = 0.5.
// ---------------------------------------------------------------------------

struct OutcomeSurface {
  Eigen::VectorXd beta;
  Eigen::VectorXd w_offset;
  std::map<std::string, double> named_beta;
  double noise_sd = 1.0;
};

struct OutcomeConfig {
  std::map<std::string, double> named_beta;  // empty = default six features at 0.4
  double noise_sd = 1.0;
};

// The six features with externally specified coefficients. Their published
// values are not known; 0.4 each is this artifact's default and is overridable
// in configuration.
const std::map<std::string, double>& default_named_beta();

OutcomeSurface sample_outcome_surface(const CovariateTable& table,
                                      const std::map<std::string, double>& named_beta,
                                      double noise_sd, SplitRng rng);

struct Outcomes {
  Eigen::VectorXd y0_true;   // noiseless control mean, exp((F+W).beta)
  Eigen::VectorXd y1_true;   // noiseless treated mean, (F+W).beta
  Eigen::VectorXd y_factual; // noisy outcome of the assigned arm
};

Outcomes generate_outcomes(const CovariateTable& table, const Eigen::VectorXi& t,
                           const OutcomeSurface& surface, SplitRng rng);

// ---------------------------------------------------------------------------
// MNAR masking: u_i ~ N(0,1), score_i = (2 - A_i)*0.2 + u_i*0.5; the top
// ceil(fraction*n) scores are masked. A=0 units score higher on average, so
// the initially observed set over-represents A=1.
// ---------------------------------------------------------------------------

Eigen::VectorXd mnar_scores(const Eigen::VectorXi& a_true, SplitRng rng, bool with_noise);

std::vector<int> apply_mnar_mask(const Eigen::VectorXi& a_true, double mask_fraction,
                                 SplitRng rng, bool with_noise = true);

// ---------------------------------------------------------------------------
// Attribute dependence variants.
// ---------------------------------------------------------------------------

enum class AVariantMode {
  kIndependentPermuted,  // permute A, severing its link to X
  kOriginalFraction,     // keep a fraction of original values, redraw the rest
  kBivariateGaussian,    // latent logit jointly Gaussian with a covariate
};

std::string to_string(AVariantMode mode);
AVariantMode a_variant_mode_from_string(const std::string& s);

struct AVariantConfig {
  AVariantMode mode = AVariantMode::kIndependentPermuted;
  double retain_fraction = 0.0;          // original_fraction mode
  double rho = 0.0;                      // bivariate mode
  std::string birthweight_column = "bw"; // bivariate mode
};

struct AVariantResult {
  Eigen::VectorXi a;
  std::optional<Eigen::VectorXd> replaced_covariate;  // bivariate mode only
  std::optional<Eigen::VectorXd> latent;              // bivariate latent, for diagnostics
};

AVariantResult apply_a_variant(const Eigen::VectorXi& a_original,
                               const CovariateTable& raw_table, const AVariantConfig& cfg,
                               SplitRng rng);

// ---------------------------------------------------------------------------
// World assembly: everything one realization needs, ground truth included.
// ---------------------------------------------------------------------------

struct SimulationConfig {
  double mask_fraction = 0.95;
  AVariantConfig a_variant;
  TreatmentConfig treatment;
  OutcomeConfig outcome;
};

struct World {
  std::vector<Sample> samples;            // x = normalized covariates, attribute excluded
  std::vector<std::string> feature_names; // covariate names, attribute appended last
  std::vector<ColumnKind> feature_kinds;
  std::string attribute_name;
  TreatmentParams treatment;
  OutcomeSurface surface;
  NormalizationStats norm;
};

// Applies the A variant on raw values, normalizes covariates, then draws
// treatments and outcomes. One rng stream fixes the whole realization,
// including the xi and beta draws.
World build_world(const CovariateTable& raw_table, const std::string& attribute_column,
                  const SimulationConfig& cfg, SplitRng rng);

// Simulator-side dump of one realization: samples.csv carries full ground
// truth (this is the simulator's own output), partition.csv the initial
// split.
void write_world_csvs(const World& world, const DataPartition& part,
                      const std::filesystem::path& dir);

// Initial split for a simulated realization: a uniform test set of
// round(test_fraction*n), then the MNAR rule of apply_mnar_mask over the
// remaining samples decides which attribute values start hidden (pool) vs
// observed (train).
DataPartition mnar_partition(std::vector<Sample>& samples, double mask_fraction,
                             double test_fraction, SplitRng rng);

// ---------------------------------------------------------------------------
// Acquisition oracle: reveals true attribute values for pool samples and
// moves them into train. Revealing a non-pool sample is a hard error.
// ---------------------------------------------------------------------------

class Oracle {
 public:
  Oracle(std::vector<Sample>& samples, DataPartition& partition)
      : samples_(samples), partition_(partition) {}

  // Returns (id, a_true) pairs in request order.
  std::vector<std::pair<std::string, int>> reveal(const std::vector<int>& indices);

 private:
  std::vector<Sample>& samples_;
  DataPartition& partition_;
};

}  // namespace confacq
