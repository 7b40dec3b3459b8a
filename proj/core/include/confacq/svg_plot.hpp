#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace confacq {

// Minimal static SVG renders for the curve and scatter views. Not a plotting
// library; just enough to eyeball runs without leaving the terminal's reach.

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_lo;  // optional band, empty = none
  std::vector<double> y_hi;
};

void write_line_svg(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series);

struct SvgScatterGroup {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

void write_scatter_svg(const std::filesystem::path& path, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::vector<SvgScatterGroup>& groups);

}  // namespace confacq
