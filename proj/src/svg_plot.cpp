#include "fedteach/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fedteach/format.hpp"

namespace fedteach {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr int kMarginLeft = 78;
constexpr int kMarginRight = 170;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 52;

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) { return format_sig(v, 8); }
std::string px(double v) { return format_sig(std::round(v * 100.0) / 100.0, 8); }

struct Frame {
  double x0, y0, width, height;  // plot area in pixels
};

Frame frame_for(const ChartOptions& o) {
  return {double(kMarginLeft), double(kMarginTop), double(o.width - kMarginLeft - kMarginRight),
          double(o.height - kMarginTop - kMarginBottom)};
}

void open_svg(std::ostringstream& os, const ChartOptions& o) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\"" << o.height
     << "\" viewBox=\"0 0 " << o.width << ' ' << o.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!o.title.empty())
    os << "<text x=\"" << o.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << escape(o.title) << "</text>\n";
}

void axis_labels(std::ostringstream& os, const ChartOptions& o, const Frame& f) {
  os << "<rect x=\"" << px(f.x0) << "\" y=\"" << px(f.y0) << "\" width=\"" << px(f.width) << "\" height=\""
     << px(f.height) << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << px(f.x0 + f.width / 2) << "\" y=\"" << o.height - 12
     << "\" text-anchor=\"middle\">" << escape(o.x_label) << "</text>\n";
  os << "<text transform=\"translate(16 " << px(f.y0 + f.height / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(o.y_label) << "</text>\n";
}

void legend(std::ostringstream& os, const Frame& f, const std::vector<std::string>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = f.y0 + 10 + 20.0 * static_cast<double>(i);
    const double x = f.x0 + f.width + 14;
    os << "<rect x=\"" << px(x) << "\" y=\"" << px(y - 8) << "\" width=\"14\" height=\"10\" fill=\""
       << color(i) << "\"/>\n";
    os << "<text x=\"" << px(x + 20) << "\" y=\"" << px(y + 1) << "\">" << escape(labels[i]) << "</text>\n";
  }
}

std::string tick_text(double v) {
  if (v == 0.0) return "0";
  return format_sig(v, 6);
}

}  // namespace

std::vector<double> nice_ticks(double lo, double hi, int target_count) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / std::max(1, target_count - 1);
  const double magnitude = std::pow(10.0, std::floor(std::log10(raw)));
  double step = magnitude;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * magnitude;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  const double first = std::ceil(lo / step - 1e-9) * step;
  for (double v = first; v <= hi + step * 1e-9; v += step) ticks.push_back(std::abs(v) < step * 1e-12 ? 0.0 : v);
  return ticks;
}

std::string render_line_chart(std::span<const LineSeries> series, const ChartOptions& options) {
  if (series.empty()) throw std::invalid_argument("line chart needs at least one series");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = 0.0, ymax = -std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    if (s.x.empty() || s.mean.size() != s.x.size() || s.lower.size() != s.x.size() || s.upper.size() != s.x.size())
      throw std::invalid_argument("line series '" + s.label + "' has mismatched lengths");
    xmin = std::min(xmin, *std::min_element(s.x.begin(), s.x.end()));
    xmax = std::max(xmax, *std::max_element(s.x.begin(), s.x.end()));
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      ymin = std::min({ymin, s.lower[i], s.mean[i]});
      ymax = std::max({ymax, s.upper[i], s.mean[i]});
    }
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  const auto yticks = nice_ticks(ymin, ymax);
  const double ystep = yticks.size() > 1 ? yticks[1] - yticks[0] : 1.0;
  ymax = std::max(ymax, std::ceil(ymax / ystep - 1e-9) * ystep);

  const Frame f = frame_for(options);
  const double sx = f.width / (xmax - xmin);
  const double sy = f.height / (ymax - ymin);
  auto to_px_x = [&](double x) { return f.x0 + (x - xmin) * sx; };
  auto to_px_y = [&](double y) { return f.y0 + f.height - (y - ymin) * sy; };

  std::ostringstream os;
  open_svg(os, options);
  for (double v : yticks) {
    os << "<line x1=\"" << px(f.x0) << "\" x2=\"" << px(f.x0 + f.width) << "\" y1=\"" << px(to_px_y(v))
       << "\" y2=\"" << px(to_px_y(v)) << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << px(f.x0 - 6) << "\" y=\"" << px(to_px_y(v) + 4) << "\" text-anchor=\"end\">"
       << tick_text(v) << "</text>\n";
  }
  for (double v : nice_ticks(xmin, xmax)) {
    os << "<text x=\"" << px(to_px_x(v)) << "\" y=\"" << px(f.y0 + f.height + 18)
       << "\" text-anchor=\"middle\">" << tick_text(v) << "</text>\n";
  }
  axis_labels(os, options, f);

  os << "<g transform=\"matrix(" << num(sx) << " 0 0 " << num(-sy) << ' ' << num(f.x0 - xmin * sx) << ' '
     << num(f.y0 + f.height + ymin * sy) << ")\">\n";
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    labels.push_back(s.label);
    os << "<path class=\"band\" fill=\"" << color(i) << "\" fill-opacity=\"0.2\" stroke=\"none\" d=\"M";
    for (std::size_t j = 0; j < s.x.size(); ++j) os << (j ? " L" : "") << num(s.x[j]) << ',' << num(s.lower[j]);
    for (std::size_t j = s.x.size(); j-- > 0;) os << " L" << num(s.x[j]) << ',' << num(s.upper[j]);
    os << " Z\"/>\n";
    os << "<path class=\"mean\" fill=\"none\" stroke=\"" << color(i)
       << "\" stroke-width=\"2\" vector-effect=\"non-scaling-stroke\" d=\"M";
    for (std::size_t j = 0; j < s.x.size(); ++j) os << (j ? " L" : "") << num(s.x[j]) << ',' << num(s.mean[j]);
    os << "\"/>\n";
  }
  os << "</g>\n";
  legend(os, f, labels);
  os << "</svg>\n";
  return os.str();
}

std::string render_scatter_chart(std::span<const ScatterSeries> series, const ChartOptions& options) {
  if (series.empty()) throw std::invalid_argument("scatter chart needs at least one series");
  double min_pos = std::numeric_limits<double>::infinity();
  double max_val = 0.0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("scatter series '" + s.label + "' has mismatched lengths");
    for (double v : s.x) {
      if (v > 0.0) min_pos = std::min(min_pos, v);
      max_val = std::max(max_val, v);
    }
    for (double v : s.y) {
      if (v > 0.0) min_pos = std::min(min_pos, v);
      max_val = std::max(max_val, v);
    }
  }
  if (!std::isfinite(min_pos)) min_pos = 1.0;
  if (!(max_val > 0.0)) max_val = 10.0;
  // Shared decade range on both axes; zeros sit on the lower edge.
  const double lo = std::floor(std::log10(min_pos)) - 1.0;
  double hi = std::ceil(std::log10(max_val));
  if (!(hi > lo)) hi = lo + 1.0;

  const Frame f = frame_for(options);
  auto log_pos = [&](double v) { return v > 0.0 ? std::max(lo, std::log10(v)) : lo; };
  auto to_px_x = [&](double v) { return f.x0 + (log_pos(v) - lo) / (hi - lo) * f.width; };
  auto to_px_y = [&](double v) { return f.y0 + f.height - (log_pos(v) - lo) / (hi - lo) * f.height; };

  std::ostringstream os;
  open_svg(os, options);
  for (int d = static_cast<int>(lo); d <= static_cast<int>(hi); ++d) {
    const double v = std::pow(10.0, d);
    const std::string label = "1e" + std::to_string(d);
    os << "<line x1=\"" << px(to_px_x(v)) << "\" x2=\"" << px(to_px_x(v)) << "\" y1=\"" << px(f.y0)
       << "\" y2=\"" << px(f.y0 + f.height) << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<line x1=\"" << px(f.x0) << "\" x2=\"" << px(f.x0 + f.width) << "\" y1=\"" << px(to_px_y(v))
       << "\" y2=\"" << px(to_px_y(v)) << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << px(to_px_x(v)) << "\" y=\"" << px(f.y0 + f.height + 18)
       << "\" text-anchor=\"middle\">" << label << "</text>\n";
    os << "<text x=\"" << px(f.x0 - 6) << "\" y=\"" << px(to_px_y(v) + 4) << "\" text-anchor=\"end\">" << label
       << "</text>\n";
  }
  axis_labels(os, options, f);

  std::vector<std::string> labels;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    labels.push_back(s.label);
    os << "<g class=\"series\" fill=\"" << color(i) << "\" fill-opacity=\"0.75\">\n";
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      os << "<circle cx=\"" << px(to_px_x(s.x[j])) << "\" cy=\"" << px(to_px_y(s.y[j])) << "\" r=\"3\" data-x=\""
         << format_number(s.x[j]) << "\" data-y=\"" << format_number(s.y[j]) << "\"/>\n";
    }
    os << "</g>\n";
  }
  legend(os, f, labels);
  os << "</svg>\n";
  return os.str();
}

}  // namespace fedteach
