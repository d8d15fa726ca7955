#pragma once

#include <string>
#include <vector>

namespace stcut::cli {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;  ///< reference lines are drawn dashed without markers
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = true;
  bool log_y = true;
  std::vector<PlotSeries> series;
};

/// Line through (x_anchor, y_anchor) with the given log-log slope, sampled at
/// the ends of `x`.
PlotSeries reference_slope(const std::vector<double>& x, double x_anchor, double y_anchor, double slope,
                           const std::string& label);

/// Standalone SVG document. Non-positive values are skipped on log axes.
std::string render_svg(const PlotSpec& spec);

}  // namespace stcut::cli
