#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "confacq/acquire.hpp"
#include "confacq/estimators.hpp"
#include "confacq/simulate.hpp"
#include "confacq/table.hpp"

namespace confacq {

struct DataConfig {
  enum class Source { kFile, kSynthetic };
  Source source = Source::kSynthetic;
  // file source
  std::filesystem::path path;
  std::string id_column = "id";
  std::map<std::string, ColumnKind> kinds;
  // synthetic source
  Eigen::Index n_samples = 600;
  std::vector<ColumnSpec> columns;  // empty = built-in birth-cohort-like schema
  // both
  std::string attribute_column = "momwhite";
};

// Built-in synthetic schema: 25 columns (6 continuous, 19 binary) matching the
// column kinds of the public birth-cohort covariate file, with all six
// specified-coefficient features present.
std::vector<ColumnSpec> default_synthetic_columns();

struct StrategySpec {
  StrategyKind kind = StrategyKind::kRandom;
  KernelSpec kernel;                                         // cb
  CbScoringMode scoring_mode = CbScoringMode::kIndependent;  // cb
  std::optional<int> batch_size;            // overrides the experiment batch size
  std::optional<std::uint64_t> seed;        // fixed selection stream
};

struct ExperimentConfig {
  DataConfig data;
  SimulationConfig simulation;
  double test_fraction = 0.25;
  std::vector<EstimatorConfig> estimators;
  std::vector<StrategySpec> strategies;
  RandomForestConfig attribute_model;
  int batch_size = 10;
  int max_iterations = -1;  // < 0: run to pool exhaustion
  std::optional<double> sigma_ate_sq;  // evaluator-side early stop, off by default
  int n_realizations = 1;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  int workers = 0;  // 0: CONFACQ_WORKERS env var, else hardware concurrency
  bool export_pca = false;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides = {});
ExperimentConfig parse_experiment_config_json(const std::string& json_text);

// Resolved snapshot used for the manifest; parsing it back yields the same
// configuration.
std::string experiment_config_to_json(const ExperimentConfig& cfg);

// Fails fast on invalid settings, including strategy/estimator capability
// mismatches (outcome-error needs factual-outcome prediction).
void validate_config(const ExperimentConfig& cfg);

}  // namespace confacq
