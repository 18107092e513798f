#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ksfno::app::svg {

/// One polyline. Points with non-finite y (or y <= 0 on a log axis) split the
/// line into separate segments.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct LinePanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
  std::optional<double> reference_y;  // dashed horizontal guide
};

struct HeatPanel {
  std::string title;
  std::size_t n = 0;
  std::vector<double> values;  // row-major, row 0 drawn at the top
};

/// Panels side by side. Output depends only on the inputs.
std::string line_figure(const std::string& title, const std::vector<LinePanel>& panels);
/// Each panel gets its own color scale, annotated with its min and max.
std::string heatmap_figure(const std::string& title, const std::vector<HeatPanel>& panels);

}  // namespace ksfno::app::svg
