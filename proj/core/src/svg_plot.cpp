#include "confacq/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "confacq/csv.hpp"
#include "confacq/errors.hpp"

namespace confacq {

namespace {

constexpr int kWidth = 760;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void update(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi <= lo) hi = lo + 1.0;
    const double span = hi - lo;
    lo -= 0.05 * span;
    hi += 0.05 * span;
  }
};

struct Mapper {
  Range xr, yr;
  double x(double v) const {
    return kMarginLeft + (v - xr.lo) / (xr.hi - xr.lo) * (kWidth - kMarginLeft - kMarginRight);
  }
  double y(double v) const {
    return kHeight - kMarginBottom -
           (v - yr.lo) / (yr.hi - yr.lo) * (kHeight - kMarginTop - kMarginBottom);
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

void open_svg(std::ostringstream& out, const std::string& title, const std::string& x_label,
              const std::string& y_label, const Mapper& map) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";
  // Axes.
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kHeight - kMarginBottom << "\" x2=\""
      << kWidth - kMarginRight << "\" y2=\"" << kHeight - kMarginBottom
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
      << "\" y2=\"" << kHeight - kMarginBottom << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kHeight / 2 << ")\">" << y_label << "</text>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = map.xr.lo + (map.xr.hi - map.xr.lo) * k / 5.0;
    const double yv = map.yr.lo + (map.yr.hi - map.yr.lo) * k / 5.0;
    out << "<text x=\"" << map.x(xv) << "\" y=\"" << kHeight - kMarginBottom + 16
        << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt(xv) << "</text>\n";
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << map.y(yv) + 4
        << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(yv) << "</text>\n";
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << map.y(yv) << "\" x2=\""
        << kWidth - kMarginRight << "\" y2=\"" << map.y(yv)
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
  }
}

void legend_entry(std::ostringstream& out, int slot, const std::string& label,
                  const char* color) {
  const int x = kMarginLeft + 10;
  const int y = kMarginTop + 8 + 16 * slot;
  out << "<rect x=\"" << x << "\" y=\"" << y - 8 << "\" width=\"10\" height=\"10\" fill=\""
      << color << "\"/>\n";
  out << "<text x=\"" << x + 16 << "\" y=\"" << y + 1 << "\">" << label << "</text>\n";
}

}  // namespace

void write_line_svg(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series) {
  if (series.empty()) throw DataError("svg: no series");
  Mapper map;
  for (const auto& s : series) {
    for (double v : s.x) map.xr.update(v);
    for (double v : s.y) map.yr.update(v);
    for (double v : s.y_lo) map.yr.update(v);
    for (double v : s.y_hi) map.yr.update(v);
  }
  map.xr.pad();
  map.yr.pad();
  std::ostringstream out;
  open_svg(out, title, x_label, y_label, map);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (s.y_lo.size() == s.x.size() && s.y_hi.size() == s.x.size() && !s.x.empty()) {
      out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out << map.x(s.x[i]) << ',' << map.y(s.y_lo[i]) << ' ';
      for (std::size_t i = s.x.size(); i-- > 0;)
        out << map.x(s.x[i]) << ',' << map.y(s.y_hi[i]) << ' ';
      out << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << map.x(s.x[i]) << ',' << map.y(s.y[i]) << ' ';
    out << "\"/>\n";
    legend_entry(out, static_cast<int>(si), s.label, color);
  }
  out << "</svg>\n";
  write_text_atomic(path, out.str());
}

void write_scatter_svg(const std::filesystem::path& path, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::vector<SvgScatterGroup>& groups) {
  if (groups.empty()) throw DataError("svg: no groups");
  Mapper map;
  for (const auto& g : groups) {
    for (double v : g.x) map.xr.update(v);
    for (double v : g.y) map.yr.update(v);
  }
  map.xr.pad();
  map.yr.pad();
  std::ostringstream out;
  open_svg(out, title, x_label, y_label, map);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    const char* color = kPalette[gi % (sizeof(kPalette) / sizeof(kPalette[0]))];
    for (std::size_t i = 0; i < g.x.size(); ++i)
      out << "<circle cx=\"" << map.x(g.x[i]) << "\" cy=\"" << map.y(g.y[i])
          << "\" r=\"2.5\" fill=\"" << color << "\" fill-opacity=\"0.7\"/>\n";
    legend_entry(out, static_cast<int>(gi), g.label, color);
  }
  out << "</svg>\n";
  write_text_atomic(path, out.str());
}

}  // namespace confacq
