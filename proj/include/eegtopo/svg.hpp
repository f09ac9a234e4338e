#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "eegtopo/types.hpp"

namespace eegtopo {

struct SvgSeries {
  std::string label;
  std::string color{"#1f77b4"};
  std::vector<double> x, y;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

// Small deterministic line chart; enough for accuracy-versus-parameter plots.
inline void write_line_chart(const std::string& path, const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<SvgSeries>& series,
                             int width = 860, int height = 520) {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  bool any = false;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size())
      throw ConfigError("svg: series '" + s.label + "' has mismatched x/y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        any = true;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (x_max <= x_min) x_max = x_min + 1.0;
  if (y_max <= y_min) y_max = y_min + 1.0;
  const double pad_y = 0.05 * (y_max - y_min);
  y_min -= pad_y;
  y_max += pad_y;

  const double ml = 64, mr = 24, mt = 40, mb = 48;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto px = [&](double x) { return ml + pw * (x - x_min) / (x_max - x_min); };
  auto py = [&](double y) { return mt + ph * (1.0 - (y - y_min) / (y_max - y_min)); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::svg_num(width / 2.0) +
         "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + title +
         "</text>\n";

  const int n_ticks = 5;
  for (int i = 0; i <= n_ticks; ++i) {
    const double fx = x_min + (x_max - x_min) * i / n_ticks;
    const double fy = y_min + (y_max - y_min) * i / n_ticks;
    out += "<line x1=\"" + detail::svg_num(px(fx)) + "\" y1=\"" +
           detail::svg_num(mt) + "\" x2=\"" + detail::svg_num(px(fx)) +
           "\" y2=\"" + detail::svg_num(mt + ph) +
           "\" stroke=\"#dddddd\"/>\n";
    out += "<line x1=\"" + detail::svg_num(ml) + "\" y1=\"" +
           detail::svg_num(py(fy)) + "\" x2=\"" + detail::svg_num(ml + pw) +
           "\" y2=\"" + detail::svg_num(py(fy)) +
           "\" stroke=\"#dddddd\"/>\n";
    out += "<text x=\"" + detail::svg_num(px(fx)) + "\" y=\"" +
           detail::svg_num(mt + ph + 16) + "\" text-anchor=\"middle\">" +
           detail::svg_num(fx) + "</text>\n";
    out += "<text x=\"" + detail::svg_num(ml - 6) + "\" y=\"" +
           detail::svg_num(py(fy) + 4) + "\" text-anchor=\"end\">" +
           detail::svg_num(fy) + "</text>\n";
  }
  out += "<rect x=\"" + detail::svg_num(ml) + "\" y=\"" + detail::svg_num(mt) +
         "\" width=\"" + detail::svg_num(pw) + "\" height=\"" +
         detail::svg_num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  out += "<text x=\"" + detail::svg_num(ml + pw / 2.0) + "\" y=\"" +
         detail::svg_num(height - 10.0) + "\" text-anchor=\"middle\">" +
         x_label + "</text>\n";
  out += "<text x=\"16\" y=\"" + detail::svg_num(mt + ph / 2.0) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         detail::svg_num(mt + ph / 2.0) + ")\">" + y_label + "</text>\n";

  double legend_y = mt + 14;
  for (const auto& s : series) {
    if (!s.x.empty()) {
      out += "<polyline fill=\"none\" stroke=\"" + s.color +
             "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (i) out += ' ';
        out += detail::svg_num(px(s.x[i])) + "," + detail::svg_num(py(s.y[i]));
      }
      out += "\"/>\n";
    }
    out += "<line x1=\"" + detail::svg_num(ml + pw - 130) + "\" y1=\"" +
           detail::svg_num(legend_y - 4) + "\" x2=\"" +
           detail::svg_num(ml + pw - 110) + "\" y2=\"" +
           detail::svg_num(legend_y - 4) + "\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\"/>\n";
    out += "<text x=\"" + detail::svg_num(ml + pw - 104) + "\" y=\"" +
           detail::svg_num(legend_y) + "\">" + s.label + "</text>\n";
    legend_y += 16;
  }
  out += "</svg>\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("svg: cannot open " + path + " for writing");
  f << out;
  if (!f) throw DataError("svg: write failed for " + path);
}

}  // namespace eegtopo
