#pragma once

#include <string>
#include <vector>

namespace risdet {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Standalone SVG document: axes with ticks, one polyline per series and a
/// legend. Output depends only on the input.
std::string render_svg(const LineChart& chart);

std::string xml_escape(const std::string& s);

}  // namespace risdet
