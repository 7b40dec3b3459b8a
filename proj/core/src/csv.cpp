#include "confacq/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "confacq/errors.hpp"

namespace confacq {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path.string());
  table.header = split_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size())
      throw DataError(path.string() + ": line " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(table.header.size()));
    table.rows.push_back(std::move(cells));
  }
  return table;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw DataError("non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                    ", column '" + column + "'");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

AtomicCsvWriter::AtomicCsvWriter(std::filesystem::path path,
                                 const std::vector<std::string>& header)
    : path_(std::move(path)), n_columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buffer_ << ',';
    buffer_ << header[i];
  }
  buffer_ << '\n';
}

AtomicCsvWriter::~AtomicCsvWriter() {
  if (!closed_) {
    try {
      close();
    } catch (...) {
      // destructor must not throw; the temp file simply never lands
    }
  }
}

void AtomicCsvWriter::write_row(const std::vector<std::string>& cells) {
  if (cells.size() != n_columns_)
    throw std::logic_error("csv row width mismatch for " + path_.string());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buffer_ << ',';
    buffer_ << cells[i];
  }
  buffer_ << '\n';
}

void AtomicCsvWriter::close() {
  if (closed_) return;
  closed_ = true;
  write_text_atomic(path_, buffer_.str());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace confacq
