#include "confacq/table.hpp"

#include <cmath>
#include <set>

#include "confacq/csv.hpp"
#include "confacq/errors.hpp"

namespace confacq {

std::string to_string(ColumnKind kind) {
  return kind == ColumnKind::kContinuous ? "continuous" : "binary";
}

ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "continuous") return ColumnKind::kContinuous;
  if (s == "binary") return ColumnKind::kBinary;
  throw ConfigError("unknown column kind '" + s + "'");
}

CovariateTable::CovariateTable(std::vector<std::string> ids, std::vector<Column> columns,
                               Eigen::MatrixXd values)
    : ids_(std::move(ids)), columns_(std::move(columns)), values_(std::move(values)) {
  if (static_cast<Eigen::Index>(ids_.size()) != values_.rows())
    throw DataError("id count does not match row count");
  if (static_cast<Eigen::Index>(columns_.size()) != values_.cols())
    throw DataError("column metadata does not match value matrix width");
  std::set<std::string> seen_ids(ids_.begin(), ids_.end());
  if (seen_ids.size() != ids_.size()) throw DataError("row ids are not unique");
  std::set<std::string> seen_cols;
  for (const auto& c : columns_)
    if (!seen_cols.insert(c.name).second)
      throw DataError("duplicate column name '" + c.name + "'");
  if (!values_.allFinite()) throw DataError("covariate matrix contains non-finite entries");
  for (Eigen::Index j = 0; j < values_.cols(); ++j) {
    if (columns_[j].kind != ColumnKind::kBinary) continue;
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      double v = values_(i, j);
      if (v != 0.0 && v != 1.0)
        throw DataError("binary column '" + columns_[j].name + "' has value " +
                        format_double(v) + " at row " + std::to_string(i + 1));
    }
  }
}

int CovariateTable::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].name == name) return static_cast<int>(j);
  return -1;
}

int CovariateTable::require_column(const std::string& name) const {
  int j = column_index(name);
  if (j < 0) throw DataError("missing column '" + name + "'");
  return j;
}

Eigen::VectorXd CovariateTable::column(const std::string& name) const {
  return values_.col(require_column(name));
}

CovariateTable CovariateTable::with_column_replaced(const std::string& name,
                                                    const Eigen::VectorXd& v) const {
  int j = require_column(name);
  if (v.size() != values_.rows()) throw DataError("replacement column has wrong length");
  Eigen::MatrixXd values = values_;
  values.col(j) = v;
  return CovariateTable(ids_, columns_, std::move(values));
}

CovariateTable CovariateTable::without_column(const std::string& name) const {
  int j = require_column(name);
  std::vector<Column> columns;
  columns.reserve(columns_.size() - 1);
  Eigen::MatrixXd values(values_.rows(), values_.cols() - 1);
  Eigen::Index out = 0;
  for (Eigen::Index k = 0; k < values_.cols(); ++k) {
    if (k == j) continue;
    columns.push_back(columns_[k]);
    values.col(out++) = values_.col(k);
  }
  return CovariateTable(ids_, std::move(columns), std::move(values));
}

NormalizedTable normalize(const CovariateTable& table) {
  if (table.n_samples() < 2) throw DataError("normalize requires at least 2 samples");
  const auto& cols = table.columns();
  NormalizationStats stats;
  stats.shift.assign(cols.size(), 0.0);
  stats.scale.assign(cols.size(), 1.0);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].kind != ColumnKind::kContinuous) continue;
    const auto col = table.values().col(static_cast<Eigen::Index>(j));
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(col.size() - 1);
    if (var <= 0.0)
      throw DataError("zero-variance continuous column '" + cols[j].name + "'");
    stats.shift[j] = mean;
    stats.scale[j] = std::sqrt(var);
  }
  return NormalizedTable{apply_normalization(table, stats), std::move(stats)};
}

CovariateTable apply_normalization(const CovariateTable& table, const NormalizationStats& stats) {
  if (stats.shift.size() != static_cast<std::size_t>(table.n_columns()) ||
      stats.scale.size() != static_cast<std::size_t>(table.n_columns()))
    throw DataError("normalization stats do not match table width");
  Eigen::MatrixXd values = table.values();
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const double scale = stats.scale[j];
    if (scale <= 0.0) throw DataError("non-positive scale in normalization stats");
    values.col(j) = (values.col(j).array() - stats.shift[j]) / scale;
  }
  return CovariateTable(table.ids(), table.columns(), std::move(values));
}

CovariateTable load_covariates(const std::filesystem::path& path,
                               const std::map<std::string, ColumnKind>& schema,
                               const std::string& id_column) {
  CsvTable csv = read_csv(path);
  int id_idx = csv.column_index(id_column);
  if (id_idx < 0) throw DataError(path.string() + ": missing column '" + id_column + "'");

  std::vector<Column> columns;
  std::vector<int> source_index;
  for (std::size_t j = 0; j < csv.header.size(); ++j) {
    if (static_cast<int>(j) == id_idx) continue;
    auto it = schema.find(csv.header[j]);
    if (it == schema.end())
      throw DataError(path.string() + ": column '" + csv.header[j] +
                      "' not present in the supplied schema");
    columns.push_back({csv.header[j], it->second});
    source_index.push_back(static_cast<int>(j));
  }
  for (const auto& [name, kind] : schema) {
    (void)kind;
    if (csv.column_index(name) < 0)
      throw DataError(path.string() + ": missing column '" + name + "'");
  }

  const std::size_t n = csv.rows.size();
  std::vector<std::string> ids(n);
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = csv.rows[i][static_cast<std::size_t>(id_idx)];
    for (std::size_t j = 0; j < columns.size(); ++j) {
      double v = parse_cell(csv.rows[i][static_cast<std::size_t>(source_index[j])], i + 2,
                            columns[j].name);
      if (columns[j].kind == ColumnKind::kBinary && v != 0.0 && v != 1.0)
        throw DataError(path.string() + ": binary column '" + columns[j].name +
                        "' has out-of-range value " + format_double(v) + " at row " +
                        std::to_string(i + 2));
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return CovariateTable(std::move(ids), std::move(columns), std::move(values));
}

CovariateTable synthesize_covariates(Eigen::Index n, const std::vector<ColumnSpec>& spec,
                                     SplitRng rng) {
  if (n <= 0) throw ConfigError("synthesize_covariates: n must be positive");
  std::vector<Column> columns;
  columns.reserve(spec.size());
  for (const auto& s : spec) {
    if (s.kind == ColumnKind::kBinary && (s.p < 0.0 || s.p > 1.0))
      throw ConfigError("column '" + s.name + "': p outside [0,1]");
    if (s.kind == ColumnKind::kContinuous && s.sd <= 0.0)
      throw ConfigError("column '" + s.name + "': sd must be > 0");
    columns.push_back({s.name, s.kind});
  }
  Eigen::MatrixXd values(n, static_cast<Eigen::Index>(spec.size()));
  std::vector<std::string> ids(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = "s" + std::to_string(i);
  // One child stream per column, so adding a column never reshuffles others.
  for (std::size_t j = 0; j < spec.size(); ++j) {
    SplitRng col_rng = rng.split(spec[j].name);
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = spec[j].kind == ColumnKind::kContinuous
                     ? spec[j].mean + spec[j].sd * col_rng.normal()
                     : (col_rng.bernoulli(spec[j].p) ? 1.0 : 0.0);
      values(i, static_cast<Eigen::Index>(j)) = v;
    }
  }
  return CovariateTable(std::move(ids), std::move(columns), std::move(values));
}

}  // namespace confacq
