#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "confacq/rng.hpp"

namespace confacq {

enum class ColumnKind { kContinuous, kBinary };

std::string to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& s);

struct Column {
  std::string name;
  ColumnKind kind;
};

// Immutable covariate matrix plus per-row id tokens. Binary columns must hold
// only {0,1}; there are never missing entries here (missingness applies to
// the acquired attribute, not to covariates).
class CovariateTable {
 public:
  CovariateTable(std::vector<std::string> ids, std::vector<Column> columns,
                 Eigen::MatrixXd values);

  Eigen::Index n_samples() const { return values_.rows(); }
  Eigen::Index n_columns() const { return values_.cols(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<Column>& columns() const { return columns_; }
  const Eigen::MatrixXd& values() const { return values_; }

  int column_index(const std::string& name) const;      // -1 when absent
  int require_column(const std::string& name) const;    // throws DataError
  Eigen::VectorXd column(const std::string& name) const;

  // Value-semantic edits used by the simulator; each returns a new table.
  CovariateTable with_column_replaced(const std::string& name, const Eigen::VectorXd& v) const;
  CovariateTable without_column(const std::string& name) const;

 private:
  std::vector<std::string> ids_;
  std::vector<Column> columns_;
  Eigen::MatrixXd values_;
};

// Per-column affine transform recorded by normalize(); binary columns carry
// the identity (shift 0, scale 1).
struct NormalizationStats {
  std::vector<double> shift;
  std::vector<double> scale;
};

struct NormalizedTable {
  CovariateTable table;
  NormalizationStats stats;
};

// Z-scores continuous columns (sample standard deviation); binary columns are
// left as {0,1}. Throws on a zero-variance continuous column, naming it.
NormalizedTable normalize(const CovariateTable& table);

// Applies previously computed stats, e.g. to held-out rows.
CovariateTable apply_normalization(const CovariateTable& table, const NormalizationStats& stats);

// Loads a covariate CSV. The file must have a header and an `id` column (name
// configurable); every other column must appear in `schema`, which fixes its
// kind. Kinds are never inferred.
CovariateTable load_covariates(const std::filesystem::path& path,
                               const std::map<std::string, ColumnKind>& schema,
                               const std::string& id_column = "id");

// Synthetic covariates for hermetic runs: per column either Normal(mean, sd)
// or Bernoulli(p).
struct ColumnSpec {
  std::string name;
  ColumnKind kind;
  double mean = 0.0;  // continuous
  double sd = 1.0;    // continuous, must be > 0
  double p = 0.5;     // binary, must be in [0,1]
};

CovariateTable synthesize_covariates(Eigen::Index n, const std::vector<ColumnSpec>& spec,
                                     SplitRng rng);

}  // namespace confacq
