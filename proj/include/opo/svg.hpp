#pragma once

#include <string>
#include <vector>

namespace opo::svg {

struct Series {
  std::string label;
  std::string color{"#000000"};
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> yerr;  // optional; error bars when non-empty
};

struct Panel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;
};

/// Minimal static line chart: panels stacked vertically, shared width.
void write_figure(const std::string& path, const std::vector<Panel>& panels,
                  int width = 880, int panel_height = 260);

}  // namespace opo::svg
