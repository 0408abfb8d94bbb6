#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "gaitforge/ad/array.hpp"

namespace gf::io {

// Static SVG emission: line charts and heat maps. No interactive viewer.
struct SvgSeries {
  std::string label;
  std::string color = "#d62728";
  std::vector<double> x, y;
};

inline void write_line_svg(const std::string& path, const std::string& title,
                           const std::vector<SvgSeries>& series, int w = 720, int h = 420) {
  std::ofstream f(path);
  gf::ad::check(f.good(), "svg: cannot open " + path);
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) ymax = ymin + 1;
  const int ml = 60, mb = 40, mt = 30, mr = 15;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mb - mt); };
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  f << "<rect width='100%' height='100%' fill='white'/>\n";
  f << "<text x='" << w / 2 << "' y='18' text-anchor='middle' font-size='14'>" << title
    << "</text>\n";
  f << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
    << "' stroke='black'/>\n";
  f << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
    << "' stroke='black'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = ymin + (ymax - ymin) * i / 4;
    f << "<text x='" << ml - 6 << "' y='" << py(yv) + 4
      << "' text-anchor='end' font-size='10'>" << yv << "</text>\n";
    const double xv = xmin + (xmax - xmin) * i / 4;
    f << "<text x='" << px(xv) << "' y='" << h - mb + 14
      << "' text-anchor='middle' font-size='10'>" << xv << "</text>\n";
  }
  int li = 0;
  for (const auto& s : series) {
    f << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
    for (size_t i = 0; i < s.x.size(); ++i) f << px(s.x[i]) << "," << py(s.y[i]) << " ";
    f << "'/>\n";
    f << "<text x='" << w - mr - 120 << "' y='" << mt + 14 * li << "' font-size='11' fill='"
      << s.color << "'>" << s.label << "</text>\n";
    ++li;
  }
  f << "</svg>\n";
}

// values row-major [rows x cols]; rows on the y axis
inline void write_heatmap_svg(const std::string& path, const std::string& title,
                              const std::vector<double>& values, int rows, int cols,
                              int cell = 4) {
  std::ofstream f(path);
  gf::ad::check(f.good(), "svg: cannot open " + path);
  gf::ad::check(static_cast<long>(values.size()) == static_cast<long>(rows) * cols,
                "svg heatmap: size mismatch");
  double lo = 1e300, hi = -1e300;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) hi = lo + 1;
  const int mt = 26;
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << cols * cell << "' height='"
    << rows * cell + mt << "'>\n";
  f << "<text x='" << cols * cell / 2 << "' y='16' text-anchor='middle' font-size='12'>"
    << title << "</text>\n";
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double t = (values[static_cast<size_t>(r) * cols + c] - lo) / (hi - lo);
      const int red = static_cast<int>(255 * t);
      const int blue = static_cast<int>(255 * (1 - t));
      f << "<rect x='" << c * cell << "' y='" << r * cell + mt << "' width='" << cell
        << "' height='" << cell << "' fill='rgb(" << red << ",60," << blue << ")'/>\n";
    }
  f << "</svg>\n";
}

}  // namespace gf::io
