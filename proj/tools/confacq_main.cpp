// confacq: confounding-feature acquisition benchmark for treatment effect
// estimation.
//
// Subcommands:
//   run       full experiment from a JSON config (traces, summaries, manifest)
//   simulate  emit one simulated realization as CSVs
//   score     one-shot batch selection on an externally supplied dataset
//   report    re-aggregate existing trace CSVs into summary tables / SVG plots

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "confacq/acquire.hpp"
#include "confacq/config.hpp"
#include "confacq/csv.hpp"
#include "confacq/errors.hpp"
#include "confacq/evaluate.hpp"
#include "confacq/log.hpp"
#include "confacq/runner.hpp"
#include "confacq/stats.hpp"
#include "confacq/svg_plot.hpp"

namespace {

using namespace confacq;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonConfigFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  // Direct flags mirror the most common overrides; anything else goes
  // through --set path.to.key=value.
  std::optional<std::uint64_t> seed;
  std::optional<int> n_realizations;
  std::optional<int> batch_size;
  std::optional<int> workers;
  std::optional<std::string> output_dir;
};

ExperimentConfig load_config(const CommonConfigFlags& flags) {
  std::vector<std::string> overrides = flags.overrides;
  if (flags.seed) overrides.push_back("seed=" + std::to_string(*flags.seed));
  if (flags.n_realizations)
    overrides.push_back("n_realizations=" + std::to_string(*flags.n_realizations));
  if (flags.batch_size) overrides.push_back("batch_size=" + std::to_string(*flags.batch_size));
  if (flags.workers) overrides.push_back("workers=" + std::to_string(*flags.workers));
  if (flags.output_dir) overrides.push_back("output_dir=" + *flags.output_dir);
  return load_experiment_config(flags.config_path, overrides);
}

void add_common_flags(CLI::App* cmd, CommonConfigFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON experiment config")->required();
  cmd->add_option("--set", flags.overrides,
                  "Override any config field, e.g. --set simulation.mask_fraction=0.9");
  cmd->add_option("--seed", flags.seed, "Base seed override");
  cmd->add_option("--realizations", flags.n_realizations, "n_realizations override");
  cmd->add_option("--batch-size", flags.batch_size, "Acquisition batch size override");
  cmd->add_option("--workers", flags.workers, "Worker thread count override");
  cmd->add_option("--output-dir", flags.output_dir, "Output directory override");
}

// --- score subcommand -------------------------------------------------------

struct ScoreFlags {
  std::string data_path;
  std::string strategy = "random";
  std::string estimator = "dr";
  int batch_size = 10;
  std::uint64_t seed = 0;
  std::string id_col = "id";
  std::string a_col = "a";
  std::string t_col = "t";
  std::string y_col = "y";
  std::vector<std::string> continuous;
  double bandwidth = 0.0;
  std::string scoring_mode = "independent";
  std::string out_path;
};

int run_score(const ScoreFlags& flags) {
  const CsvTable csv = read_csv(flags.data_path);
  const std::set<std::string> special = {flags.id_col, flags.a_col, flags.t_col, flags.y_col};
  for (const auto& name : special)
    if (csv.column_index(name) < 0)
      throw DataError(flags.data_path + ": missing column '" + name + "'");
  const std::set<std::string> continuous(flags.continuous.begin(), flags.continuous.end());

  std::vector<int> feature_cols;
  for (std::size_t j = 0; j < csv.header.size(); ++j)
    if (!special.contains(csv.header[j])) feature_cols.push_back(static_cast<int>(j));

  const int id_idx = csv.column_index(flags.id_col);
  const int a_idx = csv.column_index(flags.a_col);
  const int t_idx = csv.column_index(flags.t_col);
  const int y_idx = csv.column_index(flags.y_col);

  std::vector<Sample> samples;
  std::vector<int> train_idx, pool_idx;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& row = csv.rows[i];
    Eigen::VectorXd x(static_cast<Eigen::Index>(feature_cols.size()));
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const auto& col_name = csv.header[static_cast<std::size_t>(feature_cols[j])];
      const double v =
          parse_cell(row[static_cast<std::size_t>(feature_cols[j])], i + 2, col_name);
      if (!continuous.contains(col_name) && v != 0.0 && v != 1.0)
        throw DataError("binary column '" + col_name + "' has out-of-range value at row " +
                        std::to_string(i + 2) + " (declare it with --continuous?)");
      x[static_cast<Eigen::Index>(j)] = v;
    }
    const double t = parse_cell(row[static_cast<std::size_t>(t_idx)], i + 2, flags.t_col);
    const double y = parse_cell(row[static_cast<std::size_t>(y_idx)], i + 2, flags.y_col);
    const std::string& a_cell = row[static_cast<std::size_t>(a_idx)];
    const bool observed = !a_cell.empty() && a_cell != "NA" && a_cell != "nan";
    int a_value = 0;
    if (observed) {
      const double a = parse_cell(a_cell, i + 2, flags.a_col);
      if (a != 0.0 && a != 1.0)
        throw DataError("attribute column must be binary at row " + std::to_string(i + 2));
      a_value = static_cast<int>(a);
    }
    // External data carries no ground truth; potential-outcome fields are
    // never read on this path.
    samples.emplace_back(row[static_cast<std::size_t>(id_idx)], std::move(x), a_value,
                         static_cast<int>(t), y, 0.0, 0.0);
    (observed ? train_idx : pool_idx).push_back(static_cast<int>(i));
  }
  DataPartition part = make_partition(samples, train_idx, pool_idx, {});

  ScoreRequest request;
  request.strategy.kind = strategy_kind_from_string(flags.strategy);
  request.strategy.kernel.bandwidth = flags.bandwidth;
  request.strategy.scoring_mode = flags.scoring_mode == "greedy_sequential"
                                      ? CbScoringMode::kGreedySequential
                                      : CbScoringMode::kIndependent;
  request.batch_size = flags.batch_size;
  request.estimator.kind = estimator_kind_from_string(flags.estimator);
  request.seed = flags.seed;

  const std::vector<std::string> ids = score_batch(samples, part, request);
  if (flags.out_path.empty()) {
    for (std::size_t rank = 0; rank < ids.size(); ++rank)
      std::cout << rank + 1 << "," << ids[rank] << "\n";
  } else {
    AtomicCsvWriter writer(flags.out_path, {"rank", "id"});
    for (std::size_t rank = 0; rank < ids.size(); ++rank)
      writer.write_row({std::to_string(rank + 1), ids[rank]});
    writer.close();
  }
  return kExitOk;
}

// --- report subcommand ------------------------------------------------------

struct ReportFlags {
  std::string traces_path;
  std::string optimal_path;
  std::string out_dir = ".";
  bool svg = false;
  std::string pca_path;   // optional pca_*.csv for a scatter render
  int pca_iteration = -1; // -1 = last iteration in the file
};

int run_report(const ReportFlags& flags) {
  std::vector<AcquisitionTrace> traces = read_traces_csv(flags.traces_path);
  std::filesystem::path optimal_path = flags.optimal_path;
  if (optimal_path.empty())
    optimal_path = std::filesystem::path(flags.traces_path).parent_path() / "optimal.csv";
  read_optimal_csv(optimal_path, traces);
  const Summary summary = summarize(traces);
  std::filesystem::create_directories(flags.out_dir);
  write_summary_csvs(flags.out_dir, summary);
  if (flags.svg) {
    std::map<std::string, std::vector<SvgSeries>> ate_series, pehe_series;
    for (const auto& [key, curve] : summary.curves) {
      SvgSeries ate{key.first, {}, {}, {}, {}};
      SvgSeries pehe{key.first, {}, {}, {}, {}};
      for (const auto& pt : curve) {
        ate.x.push_back(pt.n_acquired);
        ate.y.push_back(pt.eps_ate.mean);
        ate.y_lo.push_back(pt.eps_ate.mean - pt.eps_ate.half_width);
        ate.y_hi.push_back(pt.eps_ate.mean + pt.eps_ate.half_width);
        pehe.x.push_back(pt.n_acquired);
        pehe.y.push_back(pt.sqrt_pehe.mean);
        pehe.y_lo.push_back(pt.sqrt_pehe.mean - pt.sqrt_pehe.half_width);
        pehe.y_hi.push_back(pt.sqrt_pehe.mean + pt.sqrt_pehe.half_width);
      }
      ate_series[key.second].push_back(std::move(ate));
      pehe_series[key.second].push_back(std::move(pehe));
    }
    for (const auto& [estimator, series] : ate_series)
      write_line_svg(std::filesystem::path(flags.out_dir) / ("curve_eps_ate_" + estimator + ".svg"),
                     "Error in ATE (" + estimator + ")", "samples acquired", "eps_ATE", series);
    for (const auto& [estimator, series] : pehe_series)
      write_line_svg(
          std::filesystem::path(flags.out_dir) / ("curve_sqrt_pehe_" + estimator + ".svg"),
          "sqrt PEHE (" + estimator + ")", "samples acquired", "sqrt PEHE", series);

    // cumulative treated/control acquisition counts per strategy
    std::map<std::string, std::vector<SvgSeries>> arm_series;
    {
      std::map<std::pair<std::string, std::string>,
               std::map<int, std::pair<std::vector<double>, std::vector<double>>>>
          acc;
      for (const auto& t : traces)
        for (const auto& r : t.records) {
          auto& slot = acc[{t.strategy, t.estimator}][r.n_acquired];
          slot.first.push_back(r.n_treated_acquired);
          slot.second.push_back(r.n_control_acquired);
        }
      for (const auto& [key, by_n] : acc) {
        SvgSeries treated{key.first + " treated", {}, {}, {}, {}};
        SvgSeries control{key.first + " control", {}, {}, {}, {}};
        for (const auto& [n, counts] : by_n) {
          treated.x.push_back(n);
          treated.y.push_back(mean_of(counts.first));
          control.x.push_back(n);
          control.y.push_back(mean_of(counts.second));
        }
        arm_series[key.second].push_back(std::move(treated));
        arm_series[key.second].push_back(std::move(control));
      }
      for (const auto& [estimator, series] : arm_series)
        write_line_svg(std::filesystem::path(flags.out_dir) / ("arm_counts_" + estimator + ".svg"),
                       "Acquired treated vs control (" + estimator + ")", "samples acquired",
                       "cumulative count", series);
    }
  }
  if (!flags.pca_path.empty()) {
    const CsvTable pca = read_csv(flags.pca_path);
    const int it_col = pca.column_index("iteration");
    const int pc1_col = pca.column_index("pc1");
    const int pc2_col = pca.column_index("pc2");
    const int arm_col = pca.column_index("arm");
    if (it_col < 0 || pc1_col < 0 || pc2_col < 0 || arm_col < 0)
      throw DataError(flags.pca_path + ": not a pca export");
    int target = flags.pca_iteration;
    if (target < 0)
      for (std::size_t i = 0; i < pca.rows.size(); ++i)
        target = std::max(target, static_cast<int>(parse_cell(
                                      pca.rows[i][static_cast<std::size_t>(it_col)], i + 2,
                                      "iteration")));
    SvgScatterGroup treated{"treated", {}, {}}, control{"control", {}, {}};
    for (std::size_t i = 0; i < pca.rows.size(); ++i) {
      const auto& row = pca.rows[i];
      if (static_cast<int>(parse_cell(row[static_cast<std::size_t>(it_col)], i + 2,
                                      "iteration")) != target)
        continue;
      auto& group =
          parse_cell(row[static_cast<std::size_t>(arm_col)], i + 2, "arm") == 1.0 ? treated
                                                                                  : control;
      group.x.push_back(parse_cell(row[static_cast<std::size_t>(pc1_col)], i + 2, "pc1"));
      group.y.push_back(parse_cell(row[static_cast<std::size_t>(pc2_col)], i + 2, "pc2"));
    }
    write_scatter_svg(std::filesystem::path(flags.out_dir) /
                          ("pca_iteration_" + std::to_string(target) + ".svg"),
                      "Training set, iteration " + std::to_string(target), "pc1", "pc2",
                      {treated, control});
  }
  std::cout << "summary written to " << flags.out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confounding-feature acquisition benchmark for causal effect estimation"};
  app.require_subcommand(1);

  CommonConfigFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "Run a full experiment from a config file");
  add_common_flags(run_cmd, run_flags);
  bool quiet = false;
  run_cmd->add_flag("--quiet", quiet, "Suppress progress logging");

  CommonConfigFlags sim_flags;
  int sim_realization = 0;
  std::string sim_out = "simulated";
  auto* sim_cmd = app.add_subcommand("simulate", "Emit one simulated realization as CSVs");
  add_common_flags(sim_cmd, sim_flags);
  sim_cmd->add_option("--realization", sim_realization, "Realization index to emit");
  sim_cmd->add_option("--out", sim_out, "Destination directory");

  ScoreFlags score_flags;
  auto* score_cmd =
      app.add_subcommand("score", "One-shot batch selection on a partial dataset");
  score_cmd->add_option("--data", score_flags.data_path, "CSV with id, covariates, a, t, y")
      ->required();
  score_cmd->add_option("--strategy", score_flags.strategy, "random|uncertainty|cb|oe");
  score_cmd->add_option("--estimator", score_flags.estimator, "dr|gp_multi|mlp_multi (oe)");
  score_cmd->add_option("--batch-size", score_flags.batch_size, "Batch size");
  score_cmd->add_option("--seed", score_flags.seed, "Seed");
  score_cmd->add_option("--id-col", score_flags.id_col, "Id column name");
  score_cmd->add_option("--a-col", score_flags.a_col, "Attribute column (empty cell = missing)");
  score_cmd->add_option("--t-col", score_flags.t_col, "Treatment column name");
  score_cmd->add_option("--y-col", score_flags.y_col, "Outcome column name");
  score_cmd->add_option("--continuous", score_flags.continuous,
                        "Covariate columns to treat as continuous (others binary)");
  score_cmd->add_option("--bandwidth", score_flags.bandwidth,
                        "RBF bandwidth for cb (0 = median heuristic)");
  score_cmd->add_option("--scoring-mode", score_flags.scoring_mode,
                        "cb scoring: independent|greedy_sequential");
  score_cmd->add_option("--out", score_flags.out_path, "Write ranked ids to CSV instead of stdout");

  ReportFlags report_flags;
  auto* report_cmd = app.add_subcommand("report", "Re-aggregate trace CSVs into summaries");
  report_cmd->add_option("--traces", report_flags.traces_path, "traces.csv from a run")
      ->required();
  report_cmd->add_option("--optimal", report_flags.optimal_path,
                         "optimal.csv (default: next to traces)");
  report_cmd->add_option("--out", report_flags.out_dir, "Output directory");
  report_cmd->add_flag("--svg", report_flags.svg, "Also render SVG curve plots");
  report_cmd->add_option("--pca", report_flags.pca_path,
                         "pca_*.csv from a run; renders a 2-d scatter");
  report_cmd->add_option("--pca-iteration", report_flags.pca_iteration,
                         "Iteration to render (-1 = last)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      confacq::log::quiet() = quiet;
      const ExperimentConfig cfg = load_config(run_flags);
      const ExperimentResult result = run_experiment(cfg);
      std::cout << "wrote " << (result.output_dir / "traces.csv").string() << " ("
                << result.traces.size() << " traces, " << result.n_failed_traces
                << " failed)\n";
      return kExitOk;
    }
    if (sim_cmd->parsed()) {
      const ExperimentConfig cfg = load_config(sim_flags);
      std::optional<CovariateTable> table;
      if (cfg.data.source == DataConfig::Source::kFile)
        table = load_covariates(cfg.data.path, cfg.data.kinds, cfg.data.id_column);
      write_simulated_realization(cfg, table ? &*table : nullptr, sim_realization, sim_out);
      std::cout << "wrote " << sim_out << "/samples.csv and partition.csv\n";
      return kExitOk;
    }
    if (score_cmd->parsed()) return run_score(score_flags);
    if (report_cmd->parsed()) return run_report(report_flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
