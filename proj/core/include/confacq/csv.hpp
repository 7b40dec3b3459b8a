#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace confacq {

// Minimal delimited-text support: comma separated, first line is the header,
// no quoting. Cells are kept as strings; numeric conversion happens at the
// point of use so errors can name the row and column.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::filesystem::path& path);

// Parses a cell, raising DataError with 1-based row / column name context.
double parse_cell(const std::string& cell, std::size_t row, const std::string& column);

std::string format_double(double v);  // round-trippable, locale-free

// Buffers everything and publishes with temp-file + rename on close(), so a
// killed run never leaves a truncated output behind.
class AtomicCsvWriter {
 public:
  AtomicCsvWriter(std::filesystem::path path, const std::vector<std::string>& header);
  ~AtomicCsvWriter();

  void write_row(const std::vector<std::string>& cells);
  void close();

 private:
  std::filesystem::path path_;
  std::ostringstream buffer_;
  std::size_t n_columns_;
  bool closed_ = false;
};

void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace confacq
