#pragma once

#include <string>
#include <vector>

namespace alignlab::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 640;
  int height = 420;
};

/// Polyline plot of each series on shared axes. Points that cannot be shown
/// (non-finite, or non-positive on a log axis) are dropped.
std::string line_plot(const PlotSpec& spec, const std::vector<Series>& series);

}  // namespace alignlab::svg
