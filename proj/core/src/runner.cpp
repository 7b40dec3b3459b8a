#include "confacq/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

#include "confacq/acquire.hpp"
#include "confacq/csv.hpp"
#include "confacq/errors.hpp"
#include "confacq/log.hpp"
#include "confacq/simulate.hpp"

#include <json.hpp>

namespace confacq {

namespace {

struct PairContext {
  const ExperimentConfig* cfg;
  const World* world;
  const DataPartition* initial_partition;
  const TestSet* test;
  SplitRng realization_rng{0};
  int realization = 0;
};

double window_variance(const std::vector<MetricsRecord>& records, std::size_t window) {
  std::vector<double> tail;
  for (std::size_t i = records.size() - window; i < records.size(); ++i)
    tail.push_back(records[i].eps_ate);
  const double m = mean_of(tail);
  double acc = 0.0;
  for (double v : tail) acc += (v - m) * (v - m);
  return acc / static_cast<double>(window - 1);
}

AcquisitionTrace run_pair(const PairContext& ctx, const EstimatorConfig& estimator_cfg,
                          const StrategySpec& strategy, std::vector<PcaExportRow>* pca_rows) {
  const ExperimentConfig& cfg = *ctx.cfg;
  AcquisitionTrace trace;
  trace.realization = ctx.realization;
  trace.strategy = to_string(strategy.kind);
  trace.estimator = to_string(estimator_cfg.kind);

  std::vector<Sample> samples = ctx.world->samples;  // pair-local observed state
  DataPartition part = *ctx.initial_partition;
  Oracle oracle(samples, part);
  AttributeModel cl_a(cfg.attribute_model);

  const SplitRng fit_rng = estimator_cfg.seed.has_value()
                               ? SplitRng(*estimator_cfg.seed)
                               : ctx.realization_rng.split("fit_cl_y").split(trace.estimator);
  const SplitRng cla_rng = ctx.realization_rng.split("fit_cl_a");
  const SplitRng sel_rng = strategy.seed.has_value()
                               ? SplitRng(*strategy.seed)
                               : ctx.realization_rng.split("select").split(trace.strategy);

  const int n_train0 = static_cast<int>(part.train().size());
  int treated_acquired = 0, control_acquired = 0;
  constexpr std::size_t kEarlyStopWindow = 5;

  try {
    for (int iteration = 0;; ++iteration) {
      const TrainData train = assemble_train(samples, part.train());
      const auto model = fit_estimator(estimator_cfg, train, fit_rng);
      cl_a.fit(train, cla_rng);

      const TestMetrics metrics = evaluate_on_test(*model, *ctx.test);
      MetricsRecord record;
      record.iteration = iteration;
      record.n_acquired = static_cast<int>(part.train().size()) - n_train0;
      record.eps_ate = metrics.eps_ate;
      record.pehe = metrics.pehe;
      record.sqrt_pehe = metrics.sqrt_pehe;
      record.n_treated_acquired = treated_acquired;
      record.n_control_acquired = control_acquired;
      trace.records.push_back(record);

      if (pca_rows != nullptr) {
        const PcaProjection proj = pca_project(samples, part.train());
        for (std::size_t i = 0; i < proj.ids.size(); ++i)
          pca_rows->push_back({trace.strategy, trace.estimator, iteration, proj.ids[i],
                               proj.coords(static_cast<Eigen::Index>(i), 0),
                               proj.coords(static_cast<Eigen::Index>(i), 1), proj.arm[i]});
      }

      if (part.pool().empty()) break;
      if (cfg.max_iterations >= 0 && iteration >= cfg.max_iterations) break;
      if (cfg.sigma_ate_sq.has_value() && trace.records.size() >= kEarlyStopWindow &&
          window_variance(trace.records, kEarlyStopWindow) <= *cfg.sigma_ate_sq)
        break;

      AcquisitionRequest request;
      request.strategy = strategy.kind;
      request.batch_size = strategy.batch_size.value_or(cfg.batch_size);
      request.kernel = strategy.kernel;
      request.scoring_mode = strategy.scoring_mode;
      const std::vector<int> batch = select_batch(
          samples, part, cl_a, model.get(), request,
          sel_rng.split(static_cast<std::uint64_t>(iteration)));

      for (int idx : batch) {
        const int arm = samples[static_cast<std::size_t>(idx)].t();
        (arm == 1 ? treated_acquired : control_acquired) += 1;
        trace.acquired_arms.push_back(arm);
      }
      const auto revealed = oracle.reveal(batch);
      for (const auto& [id, a_value] : revealed) {
        (void)a_value;
        trace.acquired_ids.push_back(id);
      }
    }
  } catch (const std::exception& e) {
    trace.failed = true;
    trace.failure = e.what();
    log::warn("trace (" + trace.strategy + ", " + trace.estimator + ", realization " +
              std::to_string(ctx.realization) + ") failed: " + trace.failure);
  }
  return trace;
}

CovariateTable realization_table(const ExperimentConfig& cfg, const CovariateTable* file_table,
                                 SplitRng rng) {
  if (cfg.data.source == DataConfig::Source::kFile) {
    if (file_table == nullptr) throw ConfigError("file-sourced data requires a loaded table");
    return *file_table;
  }
  const auto& columns =
      cfg.data.columns.empty() ? default_synthetic_columns() : cfg.data.columns;
  return synthesize_covariates(cfg.data.n_samples, columns, rng.split("covariates"));
}

}  // namespace

RealizationOutput run_realization(const ExperimentConfig& cfg, const CovariateTable* file_table,
                                  int realization_index) {
  RealizationOutput output;
  const SplitRng realization_rng =
      SplitRng(cfg.seed).split("realization").split(static_cast<std::uint64_t>(realization_index));

  const CovariateTable raw = realization_table(cfg, file_table, realization_rng);
  World world = build_world(raw, cfg.data.attribute_column, cfg.simulation,
                            realization_rng.split("world"));
  const DataPartition initial_partition =
      mnar_partition(world.samples, cfg.simulation.mask_fraction, cfg.test_fraction,
                     realization_rng.split("partition"));
  const TestSet test = assemble_test(world.samples, initial_partition.test());

  PairContext ctx;
  ctx.cfg = &cfg;
  ctx.world = &world;
  ctx.initial_partition = &initial_partition;
  ctx.test = &test;
  ctx.realization_rng = realization_rng;
  ctx.realization = realization_index;

  const bool export_pca = cfg.export_pca && realization_index == 0;
  for (const auto& estimator_cfg : cfg.estimators) {
    const std::string estimator_name = to_string(estimator_cfg.kind);
    OptimalReference optimal;
    bool optimal_ok = true;
    std::string optimal_failure;
    try {
      const SplitRng optimal_rng =
          estimator_cfg.seed.has_value()
              ? SplitRng(*estimator_cfg.seed)
              : realization_rng.split("fit_cl_y").split(estimator_name);
      optimal = optimal_reference(world.samples, initial_partition, estimator_cfg, optimal_rng);
    } catch (const std::exception& e) {
      optimal_ok = false;
      optimal_failure = e.what();
      log::warn("optimal reference failed for estimator " + estimator_name + ": " +
                optimal_failure);
    }
    for (const auto& strategy : cfg.strategies) {
      AcquisitionTrace trace =
          run_pair(ctx, estimator_cfg, strategy, export_pca ? &output.pca_rows : nullptr);
      if (optimal_ok) {
        trace.optimal_eps_ate = optimal.eps_ate;
        trace.optimal_sqrt_pehe = optimal.sqrt_pehe;
      } else if (!trace.failed) {
        trace.failed = true;
        trace.failure = "optimal reference failed: " + optimal_failure;
      }
      output.traces.push_back(std::move(trace));
    }
  }
  return output;
}

int resolve_workers(const ExperimentConfig& cfg) {
  if (cfg.workers > 0) return cfg.workers;
  if (const char* env = std::getenv("CONFACQ_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto t_start = std::chrono::steady_clock::now();

  std::optional<CovariateTable> file_table;
  if (cfg.data.source == DataConfig::Source::kFile) {
    file_table = load_covariates(cfg.data.path, cfg.data.kinds, cfg.data.id_column);
    file_table->require_column(cfg.data.attribute_column);
  }

  std::filesystem::create_directories(cfg.output_dir);

  const int n = cfg.n_realizations;
  std::vector<RealizationOutput> outputs(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  const int workers = std::min(resolve_workers(cfg), n);
  std::atomic<int> next{0};
  auto worker_loop = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        outputs[static_cast<std::size_t>(i)] =
            run_realization(cfg, file_table ? &*file_table : nullptr, i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker_loop();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker_loop);
    for (auto& t : threads) t.join();
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  const auto t_realizations = std::chrono::steady_clock::now();

  ExperimentResult result;
  result.output_dir = cfg.output_dir;
  for (auto& out : outputs)
    for (auto& trace : out.traces) {
      if (trace.failed) ++result.n_failed_traces;
      result.traces.push_back(std::move(trace));
    }

  write_traces_csv(cfg.output_dir / "traces.csv", result.traces);
  write_optimal_csv(cfg.output_dir / "optimal.csv", result.traces);

  if (cfg.export_pca && !outputs.empty() && !outputs[0].pca_rows.empty()) {
    std::map<std::pair<std::string, std::string>, std::vector<const PcaExportRow*>> by_pair;
    for (const auto& row : outputs[0].pca_rows) by_pair[{row.strategy, row.estimator}].push_back(&row);
    for (const auto& [key, rows] : by_pair) {
      AtomicCsvWriter writer(cfg.output_dir / ("pca_" + key.first + "_" + key.second + ".csv"),
                             {"iteration", "id", "pc1", "pc2", "arm"});
      for (const auto* row : rows)
        writer.write_row({std::to_string(row->iteration), row->id, format_double(row->pc1),
                          format_double(row->pc2), std::to_string(row->arm)});
      writer.close();
    }
  }

  if (cfg.n_realizations >= 2) {
    try {
      result.summary = summarize(result.traces);
      write_summary_csvs(cfg.output_dir, *result.summary);
    } catch (const DataError& e) {
      log::warn(std::string("summary skipped: ") + e.what());
    }
  } else {
    log::info("summary skipped: needs at least 2 realizations");
  }

  const auto t_end = std::chrono::steady_clock::now();
  const auto secs = [](auto a, auto b) {
    return std::chrono::duration<double>(b - a).count();
  };

  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = nlohmann::json::parse(experiment_config_to_json(cfg));
  nlohmann::json seeds = nlohmann::json::array();
  for (int i = 0; i < n; ++i)
    seeds.push_back(SplitRng(cfg.seed)
                        .split("realization")
                        .split(static_cast<std::uint64_t>(i))
                        .key());
  manifest["realization_streams"] = seeds;
  manifest["workers"] = workers;
  manifest["n_failed_traces"] = result.n_failed_traces;
  manifest["wall_clock_sec"] = {{"realizations", secs(t_start, t_realizations)},
                                {"aggregation", secs(t_realizations, t_end)},
                                {"total", secs(t_start, t_end)}};
  write_text_atomic(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");

  return result;
}

void write_simulated_realization(const ExperimentConfig& cfg, const CovariateTable* file_table,
                                 int realization_index, const std::filesystem::path& dir) {
  const SplitRng realization_rng =
      SplitRng(cfg.seed).split("realization").split(static_cast<std::uint64_t>(realization_index));
  const CovariateTable raw = realization_table(cfg, file_table, realization_rng);
  World world = build_world(raw, cfg.data.attribute_column, cfg.simulation,
                            realization_rng.split("world"));
  const DataPartition part =
      mnar_partition(world.samples, cfg.simulation.mask_fraction, cfg.test_fraction,
                     realization_rng.split("partition"));
  write_world_csvs(world, part, dir);
}

std::vector<std::string> score_batch(const std::vector<Sample>& samples,
                                     const DataPartition& part, const ScoreRequest& req) {
  if (part.train().empty()) throw ConfigError("score: no observed rows to fit on");
  if (part.pool().empty()) throw ConfigError("score: no unobserved rows to rank");
  const SplitRng rng(req.seed);
  const TrainData train = assemble_train(samples, part.train());
  AttributeModel cl_a(req.attribute_model);
  cl_a.fit(train, rng.split("fit_cl_a"));
  std::unique_ptr<Estimator> model;
  if (req.strategy.kind == StrategyKind::kOe)
    model = fit_estimator(req.estimator, train, rng.split("fit_cl_y"));

  AcquisitionRequest request;
  request.strategy = req.strategy.kind;
  request.batch_size = req.batch_size;
  request.kernel = req.strategy.kernel;
  request.scoring_mode = req.strategy.scoring_mode;
  const std::vector<int> batch =
      select_batch(samples, part, cl_a, model.get(), request, rng.split("select"));
  std::vector<std::string> ids;
  ids.reserve(batch.size());
  for (int idx : batch) ids.push_back(samples[static_cast<std::size_t>(idx)].id());
  return ids;
}

}  // namespace confacq
