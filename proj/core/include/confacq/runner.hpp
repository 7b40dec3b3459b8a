#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "confacq/config.hpp"
#include "confacq/evaluate.hpp"

namespace confacq {

inline constexpr const char* kVersion = "0.1.0";

struct PcaExportRow {
  std::string strategy;
  std::string estimator;
  int iteration = 0;
  std::string id;
  double pc1 = 0.0;
  double pc2 = 0.0;
  int arm = 0;
};

struct RealizationOutput {
  std::vector<AcquisitionTrace> traces;
  std::vector<PcaExportRow> pca_rows;  // realization 0 only, when enabled
};

// One independent world: simulate, partition, then run the acquisition loop
// for every (strategy, estimator) pair against the shared partition. The file
// table is required for file-sourced data and ignored otherwise.
RealizationOutput run_realization(const ExperimentConfig& cfg, const CovariateTable* file_table,
                                  int realization_index);

struct ExperimentResult {
  std::vector<AcquisitionTrace> traces;
  std::optional<Summary> summary;
  std::filesystem::path output_dir;
  int n_failed_traces = 0;
};

// Runs every realization (in parallel up to the worker count), writes the
// trace/optimal/summary CSVs and the manifest, and returns the aggregate.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Emits one simulated realization: samples.csv with full ground truth and
// partition.csv with the initial split.
void write_simulated_realization(const ExperimentConfig& cfg, const CovariateTable* file_table,
                                 int realization_index, const std::filesystem::path& dir);

// One-shot batch selection over an externally supplied partial dataset (no
// oracle involved): fits the attribute model (and the estimator, when the
// strategy needs one) on the observed rows and ranks the pool.
struct ScoreRequest {
  StrategySpec strategy;
  int batch_size = 10;
  EstimatorConfig estimator;
  RandomForestConfig attribute_model;
  std::uint64_t seed = 0;
};

std::vector<std::string> score_batch(const std::vector<Sample>& samples,
                                     const DataPartition& part, const ScoreRequest& req);

int resolve_workers(const ExperimentConfig& cfg);

}  // namespace confacq
