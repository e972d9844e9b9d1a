#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "deme/util.hpp"

namespace deme::svg {

struct Series {
  std::string name;
  std::string color;
  std::vector<std::optional<double>> values;  // x = 1..n; gaps break the line
};

struct Panel {
  std::string title;
  std::vector<Series> series;
};

// Panels stacked vertically, one line chart each. Output depends only on the
// input values.
inline std::string line_charts(const std::vector<Panel>& panels, double width = 720.0, double panel_height = 200.0) {
  const double ml = 60, mr = 120, mt = 30, mb = 30;
  const double plot_w = width - ml - mr;
  const double plot_h = panel_height - mt - mb;
  std::ostringstream os;
  auto f = [](double v) { return util::fixed(v, 2); };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f(width) << "\" height=\""
     << f(panel_height * static_cast<double>(panels.size())) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    const double y0 = panel_height * static_cast<double>(p);
    double lo = 0.0, hi = 0.0;
    std::size_t n = 0;
    bool any = false;
    for (const auto& s : panel.series) {
      n = std::max(n, s.values.size());
      for (const auto& v : s.values) {
        if (!v) continue;
        if (!any) lo = hi = *v;
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
        any = true;
      }
    }
    if (hi - lo < 1e-12) {
      hi += 1.0;
      lo -= 1.0;
    }
    auto sx = [&](std::size_t i) { return ml + (n <= 1 ? plot_w / 2 : plot_w * static_cast<double>(i) / static_cast<double>(n - 1)); };
    auto sy = [&](double v) { return y0 + mt + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    os << "<g>\n<text x=\"" << f(ml) << "\" y=\"" << f(y0 + 18) << "\" font-size=\"13\">" << panel.title << "</text>\n";
    os << "<rect x=\"" << f(ml) << "\" y=\"" << f(y0 + mt) << "\" width=\"" << f(plot_w) << "\" height=\"" << f(plot_h)
       << "\" fill=\"none\" stroke=\"#999\"/>\n";
    os << "<text x=\"" << f(ml - 6) << "\" y=\"" << f(y0 + mt + 4) << "\" text-anchor=\"end\">" << util::compact(hi)
       << "</text>\n";
    os << "<text x=\"" << f(ml - 6) << "\" y=\"" << f(y0 + mt + plot_h) << "\" text-anchor=\"end\">"
       << util::compact(lo) << "</text>\n";
    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const auto& s = panel.series[si];
      std::string points;
      auto flush = [&] {
        if (!points.empty())
          os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"" << points
             << "\"/>\n";
        points.clear();
      };
      for (std::size_t i = 0; i < s.values.size(); ++i) {
        if (!s.values[i]) {
          flush();
          continue;
        }
        if (!points.empty()) points += ' ';
        points += f(sx(i)) + "," + f(sy(*s.values[i]));
      }
      flush();
      const double ly = y0 + mt + 14.0 * static_cast<double>(si + 1);
      os << "<line x1=\"" << f(ml + plot_w + 10) << "\" y1=\"" << f(ly - 4) << "\" x2=\"" << f(ml + plot_w + 30)
         << "\" y2=\"" << f(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
      os << "<text x=\"" << f(ml + plot_w + 34) << "\" y=\"" << f(ly) << "\">" << s.name << "</text>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace deme::svg
