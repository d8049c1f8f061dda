#pragma once

#include <span>
#include <string>
#include <vector>

namespace fedteach {

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 420;
};

/// Mean curve with a shaded [lower, upper] band.
struct LineSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct ScatterSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Curves are drawn in data coordinates under a single affine transform, so
/// path data carries the plotted values themselves (8 significant digits).
/// Output depends only on the inputs.
std::string render_line_chart(std::span<const LineSeries> series, const ChartOptions& options);

/// Log-log scatter; each marker carries its raw values as data attributes.
/// Non-positive values are pinned to the lower axis limit.
std::string render_scatter_chart(std::span<const ScatterSeries> series, const ChartOptions& options);

/// Tick positions at 1/2/5 x 10^n covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target_count = 6);

}  // namespace fedteach
