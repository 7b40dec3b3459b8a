#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "confacq/csv.hpp"
#include "confacq/errors.hpp"
#include "confacq/sample.hpp"
#include "confacq/table.hpp"
#include "testutil.hpp"

using namespace confacq;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_SUITE("data_model") {

TEST_CASE("load_covariates parses a small file") {
  const auto path = write_temp("confacq_cov.csv",
                               "id,bw,momwhite\n"
                               "r1,2500,1\n"
                               "r2,1800,0\n"
                               "r3,3100,1\n");
  const std::map<std::string, ColumnKind> schema = {
      {"bw", ColumnKind::kContinuous}, {"momwhite", ColumnKind::kBinary}};
  const CovariateTable table = load_covariates(path, schema);
  CHECK(table.n_samples() == 3);
  CHECK(table.n_columns() == 2);
  CHECK(table.column("bw")[1] == doctest::Approx(1800.0));
}

TEST_CASE("load_covariates rejects a binary column containing 2") {
  const auto path = write_temp("confacq_badbin.csv",
                               "id,flag\n"
                               "r1,0\n"
                               "r2,2\n");
  const std::map<std::string, ColumnKind> schema = {{"flag", ColumnKind::kBinary}};
  CHECK_THROWS_WITH_AS(load_covariates(path, schema),
                       doctest::Contains("binary column 'flag'"), DataError);
}

TEST_CASE("load_covariates names the cell on a non-numeric entry") {
  const auto path = write_temp("confacq_badnum.csv",
                               "id,bw\n"
                               "r1,oops\n");
  const std::map<std::string, ColumnKind> schema = {{"bw", ColumnKind::kContinuous}};
  CHECK_THROWS_WITH_AS(load_covariates(path, schema), doctest::Contains("row 2"), DataError);
  CHECK_THROWS_WITH_AS(load_covariates(path, schema), doctest::Contains("'bw'"), DataError);
}

TEST_CASE("load_covariates requires schema coverage") {
  const auto path = write_temp("confacq_extra.csv",
                               "id,bw,extra\n"
                               "r1,1,1\n");
  const std::map<std::string, ColumnKind> schema = {{"bw", ColumnKind::kContinuous}};
  CHECK_THROWS_AS(load_covariates(path, schema), DataError);
}

TEST_CASE("synthesize_covariates honors degenerate Bernoulli and determinism") {
  std::vector<ColumnSpec> spec = {{"ones", ColumnKind::kBinary, 0, 1, 1.0}};
  const CovariateTable t1 = synthesize_covariates(100, spec, SplitRng(5));
  CHECK(t1.values().col(0).minCoeff() == 1.0);

  spec.push_back({"z", ColumnKind::kContinuous, 0.0, 1.0, 0.0});
  const CovariateTable big = synthesize_covariates(10000, spec, SplitRng(6));
  CHECK(std::abs(big.column("z").mean()) < 0.05);

  const CovariateTable a = synthesize_covariates(50, spec, SplitRng(7));
  const CovariateTable b = synthesize_covariates(50, spec, SplitRng(7));
  CHECK(a.values() == b.values());
}

TEST_CASE("synthesize_covariates validates parameters") {
  CHECK_THROWS_AS(
      synthesize_covariates(10, {{"p", ColumnKind::kBinary, 0, 1, 1.5}}, SplitRng(0)),
      ConfigError);
  CHECK_THROWS_AS(
      synthesize_covariates(10, {{"s", ColumnKind::kContinuous, 0, 0.0, 0}}, SplitRng(0)),
      ConfigError);
}

TEST_CASE("normalize z-scores continuous and leaves binary untouched") {
  Eigen::MatrixXd values(3, 2);
  values << 1, 0, 2, 1, 3, 1;
  const CovariateTable table({"a", "b", "c"},
                             {{"x", ColumnKind::kContinuous}, {"f", ColumnKind::kBinary}},
                             values);
  const NormalizedTable norm = normalize(table);
  const auto col = norm.table.column("x");
  CHECK(col.mean() == doctest::Approx(0.0).epsilon(1e-12));
  const double sd = std::sqrt((col.array() - col.mean()).square().sum() / 2.0);
  CHECK(sd == doctest::Approx(1.0));
  CHECK(norm.table.column("f") == table.column("f"));

  // Stored stats reproduce the same affine map on held-out rows.
  Eigen::MatrixXd held(2, 2);
  held << 4, 0, 5, 1;
  const CovariateTable held_table({"h1", "h2"}, table.columns(), held);
  const CovariateTable mapped = apply_normalization(held_table, norm.stats);
  CHECK(mapped.values()(0, 0) == doctest::Approx((4.0 - 2.0) / 1.0));
  CHECK(mapped.values()(1, 0) == doctest::Approx((5.0 - 2.0) / 1.0));
  CHECK(mapped.values()(0, 1) == 0.0);
}

TEST_CASE("normalize rejects a zero-variance continuous column") {
  Eigen::MatrixXd values(3, 1);
  values << 2, 2, 2;
  const CovariateTable table({"a", "b", "c"}, {{"flat", ColumnKind::kContinuous}}, values);
  CHECK_THROWS_WITH_AS(normalize(table), doctest::Contains("'flat'"), DataError);
}

TEST_CASE("partition splits 100 samples into 5/20/75") {
  std::vector<Sample> samples;
  for (int i = 0; i < 100; ++i)
    samples.push_back(testutil::make_sample("s" + std::to_string(i), {0.0}, i % 2, i % 2, 0.0));
  DataPartition part = partition(samples, 0.05, 0.20, 99);
  CHECK(part.train().size() == 5);
  CHECK(part.test().size() == 20);
  CHECK(part.pool().size() == 75);

  // pool and test lose a_observed, train keeps it
  for (int idx : part.pool()) CHECK_FALSE(samples[idx].a_observed().has_value());
  for (int idx : part.test()) CHECK_FALSE(samples[idx].a_observed().has_value());
  for (int idx : part.train()) CHECK(samples[idx].a_observed().has_value());

  // determinism
  std::vector<Sample> again;
  for (int i = 0; i < 100; ++i)
    again.push_back(testutil::make_sample("s" + std::to_string(i), {0.0}, i % 2, i % 2, 0.0));
  DataPartition part2 = partition(again, 0.05, 0.20, 99);
  CHECK(part.train() == part2.train());
  CHECK(part.pool() == part2.pool());
  CHECK(part.test() == part2.test());
}

TEST_CASE("partition rejects empty splits") {
  std::vector<Sample> samples;
  for (int i = 0; i < 10; ++i)
    samples.push_back(testutil::make_sample("s" + std::to_string(i), {0.0}, 0, 0, 0.0));
  CHECK_THROWS_AS(partition(samples, 0.01, 0.2, 1), ConfigError);  // empty train
  CHECK_THROWS_AS(partition(samples, 0.5, 0.5, 1), ConfigError);   // sums to 1
}

TEST_CASE("acquire preserves conservation and rejects double acquisition") {
  std::vector<Sample> samples;
  for (int i = 0; i < 10; ++i)
    samples.push_back(testutil::make_sample("s" + std::to_string(i), {0.0}, 0, 0, 0.0));
  DataPartition part = partition(samples, 0.2, 0.2, 3);
  const auto total = part.train().size() + part.pool().size() + part.test().size();
  const int moved = part.pool()[0];
  part.acquire({moved});
  CHECK(part.train().size() + part.pool().size() + part.test().size() == total);
  CHECK_FALSE(part.in_pool(moved));
  CHECK_THROWS_AS(part.acquire({moved}), DataError);
  CHECK_THROWS_AS(part.acquire({part.pool()[0], part.pool()[0]}), DataError);
}

TEST_CASE("csv writer publishes atomically") {
  const auto path = std::filesystem::temp_directory_path() / "confacq_atomic.csv";
  std::filesystem::remove(path);
  {
    AtomicCsvWriter writer(path, {"a", "b"});
    writer.write_row({"1", "2"});
    CHECK_FALSE(std::filesystem::exists(path));
    writer.close();
  }
  CHECK(std::filesystem::exists(path));
  const CsvTable parsed = read_csv(path);
  CHECK(parsed.rows.size() == 1);
  CHECK(parsed.rows[0][1] == "2");
}

}  // TEST_SUITE
