#include "opo/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace opo::svg {

namespace {

struct Range {
  double lo{std::numeric_limits<double>::infinity()};
  double hi{-std::numeric_limits<double>::infinity()};
  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (lo > hi) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_figure(const std::string& path, const std::vector<Panel>& panels,
                  int width, int panel_height) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open figure file: " + path);

  const int margin_l = 70, margin_r = 15, margin_t = 30, margin_b = 45;
  const int total_h = panel_height * static_cast<int>(panels.size());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << total_h << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const Panel& panel = panels[pi];
    const double y_off = static_cast<double>(pi) * panel_height;
    const double plot_w = width - margin_l - margin_r;
    const double plot_h = panel_height - margin_t - margin_b;

    Range xr, yr;
    for (const auto& s : panel.series) {
      for (double v : s.x) xr.include(v);
      for (std::size_t i = 0; i < s.y.size(); ++i) {
        const double e = i < s.yerr.size() ? s.yerr[i] : 0.0;
        yr.include(s.y[i] - e);
        yr.include(s.y[i] + e);
      }
    }
    xr.pad();
    yr.pad();
    auto sx = [&](double v) {
      return margin_l + (v - xr.lo) / (xr.hi - xr.lo) * plot_w;
    };
    auto sy = [&](double v) {
      return y_off + margin_t + plot_h -
             (v - yr.lo) / (yr.hi - yr.lo) * plot_h;
    };

    out << "<rect x=\"" << margin_l << "\" y=\"" << y_off + margin_t
        << "\" width=\"" << plot_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << margin_l << "\" y=\"" << y_off + margin_t - 8
        << "\" font-size=\"13\">" << panel.title << "</text>\n";
    out << "<text x=\"" << margin_l + plot_w / 2 << "\" y=\""
        << y_off + panel_height - 10
        << "\" font-size=\"12\" text-anchor=\"middle\">" << panel.xlabel
        << "</text>\n";
    out << "<text x=\"14\" y=\"" << y_off + margin_t + plot_h / 2
        << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << y_off + margin_t + plot_h / 2 << ")\">" << panel.ylabel
        << "</text>\n";

    // Axis tick labels at the range extremes.
    for (double v : {xr.lo, 0.5 * (xr.lo + xr.hi), xr.hi}) {
      out << "<text x=\"" << sx(v) << "\" y=\""
          << y_off + margin_t + plot_h + 16
          << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt(v)
          << "</text>\n";
    }
    for (double v : {yr.lo, 0.5 * (yr.lo + yr.hi), yr.hi}) {
      out << "<text x=\"" << margin_l - 6 << "\" y=\"" << sy(v) + 3
          << "\" font-size=\"10\" text-anchor=\"end\">" << fmt(v)
          << "</text>\n";
    }

    double legend_x = margin_l + 10;
    for (const auto& s : panel.series) {
      if (s.x.empty()) continue;
      out << "<polyline fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"1.2\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        out << fmt(sx(s.x[i])) << "," << fmt(sy(s.y[i])) << " ";
      }
      out << "\"/>\n";
      if (!s.yerr.empty()) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          const double e = s.yerr[i];
          if (!std::isfinite(e) || e <= 0.0) continue;
          out << "<line stroke=\"" << s.color << "\" x1=\"" << fmt(sx(s.x[i]))
              << "\" x2=\"" << fmt(sx(s.x[i])) << "\" y1=\""
              << fmt(sy(s.y[i] - e)) << "\" y2=\"" << fmt(sy(s.y[i] + e))
              << "\"/>\n";
        }
      }
      out << "<text x=\"" << legend_x << "\" y=\"" << y_off + margin_t + 14
          << "\" font-size=\"11\" fill=\"" << s.color << "\">" << s.label
          << "</text>\n";
      legend_x += 14.0 + 7.0 * static_cast<double>(s.label.size());
    }
  }
  out << "</svg>\n";
}

}  // namespace opo::svg
