// Integration checks that drive the installed CLI binary end to end. The
// binary path arrives as argv[1] from ctest.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

int g_failures = 0;

#define CHECK_MSG(cond, msg)                                             \
  do {                                                                   \
    if (!(cond)) {                                                       \
      std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << msg \
                << "\n";                                                 \
      ++g_failures;                                                      \
    }                                                                    \
  } while (0)

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& command) {
  const std::string full = command + " 2>&1";
  FILE* pipe = popen(full.c_str(), "r");
  if (pipe == nullptr) return {};
  RunResult result;
  char buffer[4096];
  while (std::fgets(buffer, sizeof(buffer), pipe) != nullptr) result.output += buffer;
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: confacq_cli_tests <path-to-confacq>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const auto dir = std::filesystem::temp_directory_path() / "confacq_cli_tests";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  const auto config_path = dir / "toy.json";
  {
    std::ofstream out(config_path);
    out << R"({
      "data": {"source": "synthetic", "n_samples": 48, "attribute_column": "momwhite",
               "columns": [
                 {"name": "x1", "kind": "continuous", "mean": 0, "sd": 1},
                 {"name": "bw", "kind": "continuous", "mean": 2500, "sd": 800},
                 {"name": "flag", "kind": "binary", "p": 0.4},
                 {"name": "momwhite", "kind": "binary", "p": 0.55}
               ]},
      "simulation": {"mask_fraction": 0.75,
                     "treatment": {"columns": ["flag", "momwhite"], "xi": [0.45, 0.45]},
                     "outcome": {"named_beta": {"momwhite": 0.4}}},
      "partition": {"test_fraction": 0.25},
      "estimators": [{"kind": "gp_multi"}],
      "strategies": [{"name": "random"}, {"name": "oe"}],
      "attribute_model": {"n_trees": 25, "max_depth": 5},
      "batch_size": 6,
      "n_realizations": 2,
      "seed": 7,
      "workers": 1
    })";
  }

  // --- run twice: byte-identical trace CSVs -------------------------------
  const auto out1 = dir / "out1";
  const auto out2 = dir / "out2";
  RunResult r1 = run(cli + " run --config " + config_path.string() + " --output-dir " +
                     out1.string() + " --quiet");
  CHECK_MSG(r1.exit_code == 0, "run #1 exited " << r1.exit_code << ": " << r1.output);
  RunResult r2 = run(cli + " run --config " + config_path.string() + " --output-dir " +
                     out2.string() + " --quiet");
  CHECK_MSG(r2.exit_code == 0, "run #2 exited " << r2.exit_code);
  CHECK_MSG(std::filesystem::exists(out1 / "traces.csv"), "traces.csv missing");
  CHECK_MSG(!slurp(out1 / "traces.csv").empty(), "traces.csv empty");
  CHECK_MSG(slurp(out1 / "traces.csv") == slurp(out2 / "traces.csv"),
            "identical config+seed must give byte-identical traces");
  CHECK_MSG(slurp(out1 / "optimal.csv") == slurp(out2 / "optimal.csv"),
            "identical config+seed must give byte-identical optimal refs");

  // seed override changes the output
  const auto out3 = dir / "out3";
  RunResult r3 = run(cli + " run --config " + config_path.string() + " --output-dir " +
                     out3.string() + " --seed 99 --quiet");
  CHECK_MSG(r3.exit_code == 0, "run #3 exited " << r3.exit_code);
  CHECK_MSG(slurp(out1 / "traces.csv") != slurp(out3 / "traces.csv"),
            "different seeds must change traces");

  // --- report over the run's traces reproduces the summary shape ----------
  const auto rep = dir / "rep";
  RunResult r4 = run(cli + " report --traces " + (out1 / "traces.csv").string() + " --out " +
                     rep.string() + " --svg");
  CHECK_MSG(r4.exit_code == 0, "report exited " << r4.exit_code << ": " << r4.output);
  CHECK_MSG(std::filesystem::exists(rep / "summary_samples_to_optimal.csv"),
            "report must write the table-style summary");
  {
    const std::string summary = slurp(rep / "summary_samples_to_optimal.csv");
    CHECK_MSG(count_lines(summary) == 5, "2 strategies x 2 metrics + header, got\n" << summary);
    CHECK_MSG(summary.find("random") != std::string::npos, "summary names strategies");
    CHECK_MSG(summary.find("oe") != std::string::npos, "summary names strategies");
    // re-aggregation reproduces the run's own summary byte for byte
    CHECK_MSG(slurp(rep / "summary_samples_to_optimal.csv") ==
                  slurp(out1 / "summary_samples_to_optimal.csv"),
              "report must reproduce the run summary");
    CHECK_MSG(std::filesystem::exists(rep / "curve_eps_ate_gp_multi.svg"),
              "svg curves requested");
  }

  // --- simulate emits a world dump ----------------------------------------
  const auto sim = dir / "sim";
  RunResult r5 =
      run(cli + " simulate --config " + config_path.string() + " --out " + sim.string());
  CHECK_MSG(r5.exit_code == 0, "simulate exited " << r5.exit_code << ": " << r5.output);
  const std::string samples_csv = slurp(sim / "samples.csv");
  CHECK_MSG(count_lines(samples_csv) == 49, "48 samples + header");
  CHECK_MSG(count_lines(slurp(sim / "partition.csv")) == 49, "partition covers all samples");

  // --- score: obvious outcome-error outlier ranks first -------------------
  const auto score_csv = dir / "score_data.csv";
  {
    std::ofstream out(score_csv);
    out << "id,x1,a,t,y\n";
    for (int i = 0; i < 20; ++i)
      out << "obs" << i << "," << (i % 5) * 0.2 << "," << i % 2 << "," << i % 2 << ",5.0\n";
    out << "plain,0.3,,1,5.0\n";
    out << "outlier,0.5,,1,500.0\n";
  }
  RunResult r6 = run(cli + " score --data " + score_csv.string() +
                     " --strategy oe --estimator gp_multi --continuous x1 --batch-size 2");
  CHECK_MSG(r6.exit_code == 0, "score exited " << r6.exit_code << ": " << r6.output);
  CHECK_MSG(r6.output.find("1,outlier") != std::string::npos,
            "outlier must rank first, got: " << r6.output);
  CHECK_MSG(r6.output.find("obs1") == std::string::npos, "score must only return pool rows");
  RunResult r6b = run(cli + " score --data " + score_csv.string() +
                      " --strategy oe --estimator gp_multi --continuous x1 --batch-size 2");
  CHECK_MSG(r6.output == r6b.output, "score must be deterministic");

  // --- exit codes ----------------------------------------------------------
  RunResult bad_cfg = run(cli + " run --config /nonexistent.json");
  CHECK_MSG(bad_cfg.exit_code == 2, "missing config file is a config error (2), got "
                                        << bad_cfg.exit_code);
  RunResult bad_strategy = run(cli + " score --data " + score_csv.string() +
                               " --strategy galaxy --continuous x1");
  CHECK_MSG(bad_strategy.exit_code == 2, "unknown strategy is a config error (2), got "
                                             << bad_strategy.exit_code);
  RunResult bad_data = run(cli + " score --data /nonexistent.csv --strategy random");
  CHECK_MSG(bad_data.exit_code == 3, "missing data file is a runtime failure (3), got "
                                         << bad_data.exit_code);
  RunResult bad_override = run(cli + " run --config " + config_path.string() +
                               " --set batch_size=0 --output-dir " + (dir / "x").string());
  CHECK_MSG(bad_override.exit_code == 2, "invalid override is a config error (2), got "
                                             << bad_override.exit_code);

  if (g_failures == 0) {
    std::cout << "cli checks passed\n";
    return 0;
  }
  std::cerr << g_failures << " cli check(s) failed\n";
  return 1;
}
