#include "stcut/cli/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace stcut::cli {

namespace {

constexpr double kWidth = 640.0, kHeight = 480.0;
constexpr double kLeft = 80.0, kRight = 170.0, kTop = 40.0, kBottom = 60.0;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  bool log = true;
  double lo = 0.0, hi = 1.0;

  double map(double v) const { return log ? std::log10(v) : v; }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
  double frac(double v) const { return (map(v) - lo) / (hi - lo); }

  void fit(const std::vector<PlotSeries>& series, bool use_x) {
    double a = std::numeric_limits<double>::infinity(), b = -a;
    for (const auto& s : series)
      for (double v : use_x ? s.x : s.y)
        if (usable(v)) {
          a = std::min(a, map(v));
          b = std::max(b, map(v));
        }
    if (!std::isfinite(a)) a = 0.0, b = 1.0;
    if (b - a < 1e-12) a -= 0.5, b += 0.5;
    if (log) {
      lo = std::floor(a);
      hi = std::ceil(b);
      if (hi - lo < 1.0) hi = lo + 1.0;
    } else {
      const double pad = 0.05 * (b - a);
      lo = a - pad;
      hi = b + pad;
    }
  }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const int step = std::max(1, static_cast<int>(std::ceil((hi - lo) / 8.0)));
      for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += step) out.push_back(std::pow(10.0, e));
    } else {
      for (int i = 0; i <= 5; ++i) out.push_back(lo + (hi - lo) * i / 5.0);
    }
    return out;
  }
};

}  // namespace

PlotSeries reference_slope(const std::vector<double>& x, double x_anchor, double y_anchor, double slope,
                           const std::string& label) {
  PlotSeries s;
  s.label = label;
  s.dashed = true;
  if (x.empty()) return s;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  for (double v : {*lo, *hi}) {
    s.x.push_back(v);
    s.y.push_back(y_anchor * std::pow(v / x_anchor, slope));
  }
  return s;
}

std::string render_svg(const PlotSpec& spec) {
  Axis ax{spec.log_x}, ay{spec.log_y};
  ax.fit(spec.series, true);
  ay.fit(spec.series, false);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.frac(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ay.frac(v)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(spec.title) << "</text>\n";

  for (double t : ax.ticks()) {
    const double x = px(t);
    svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(x) << "\" y2=\"" << num(kTop + ph)
        << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + ph + 16) << "\" text-anchor=\"middle\">"
        << tick_label(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double y = py(t);
    svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\"" << num(y)
        << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << tick_label(t)
        << "</text>\n";
  }
  svg << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 16) << "\" text-anchor=\"middle\">"
      << escape(spec.x_label) << "</text>\n";
  svg << "<text transform=\"translate(20," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(spec.y_label) << "</text>\n";

  int idx = 0;
  for (const auto& s : spec.series) {
    const char* color = kColors[idx % 6];
    std::ostringstream pts;
    std::vector<std::pair<double, double>> marks;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) continue;
      pts << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
      marks.emplace_back(px(s.x[i]), py(s.y[i]));
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (s.dashed) svg << " stroke-dasharray=\"6,4\"";
    svg << " points=\"" << pts.str() << "\"/>\n";
    if (!s.dashed)
      for (const auto& [x, y] : marks)
        svg << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = kTop + 14 + 18 * idx;
    svg << "<line x1=\"" << num(kLeft + pw + 10) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(kLeft + pw + 34)
        << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
        << "/>\n";
    svg << "<text x=\"" << num(kLeft + pw + 40) << "\" y=\"" << num(ly) << "\">" << escape(s.label) << "</text>\n";
    ++idx;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace stcut::cli
