#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace qgs::cli {

namespace {

constexpr double kWidth = 800.0;
constexpr double kPanelHeight = 220.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 20.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 40.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<PlotPanel>& panels, const std::string& x_label) {
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  for (const auto& p : panels) {
    for (const auto& s : p.series) {
      if (s.spectrum == nullptr || s.spectrum->size() == 0) continue;
      x_lo = std::min(x_lo, s.spectrum->lambda_nm.front());
      x_hi = std::max(x_hi, s.spectrum->lambda_nm.back());
    }
  }
  if (!(x_hi > x_lo)) {
    x_lo = 0.0;
    x_hi = 1.0;
  }
  const double cell = kTop + kPanelHeight + kBottom;
  const double height = cell * static_cast<double>(panels.size());
  const double plot_w = kWidth - kLeft - kRight;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
                    "\" height=\"" + num(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t k = 0; k < panels.size(); ++k) {
    const auto& panel = panels[k];
    const double y0 = cell * static_cast<double>(k) + kTop;
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -y_lo;
    for (const auto& s : panel.series) {
      if (s.spectrum == nullptr) continue;
      for (std::size_t i = 0; i < s.spectrum->size(); ++i) {
        if (s.spectrum->is_masked(i) || !std::isfinite(s.spectrum->values[i])) continue;
        y_lo = std::min(y_lo, s.spectrum->values[i]);
        y_hi = std::max(y_hi, s.spectrum->values[i]);
      }
    }
    if (!(y_hi > y_lo)) {
      y_lo = std::isfinite(y_lo) ? y_lo - 0.5 : 0.0;
      y_hi = y_lo + 1.0;
    }
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
    auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
    auto py = [&](double y) { return y0 + kPanelHeight - (y - y_lo) / (y_hi - y_lo) * kPanelHeight; };

    svg += "<text x=\"" + num(kLeft) + "\" y=\"" + num(y0 - 8) + "\" font-weight=\"bold\">" +
           escape(panel.title) + "</text>\n";
    svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(y0) + "\" width=\"" + num(plot_w) +
           "\" height=\"" + num(kPanelHeight) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double yv = y_lo + (y_hi - y_lo) * t / 4.0;
      const double xv = x_lo + (x_hi - x_lo) * t / 4.0;
      svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(yv) + 4) +
             "\" text-anchor=\"end\">" + tick(yv) + "</text>\n";
      svg += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(y0 + kPanelHeight + 16) +
             "\" text-anchor=\"middle\">" + tick(xv) + "</text>\n";
    }
    svg += "<text x=\"16\" y=\"" + num(y0 + kPanelHeight / 2) + "\" transform=\"rotate(-90 16 " +
           num(y0 + kPanelHeight / 2) + ")\" text-anchor=\"middle\">" + escape(panel.y_label) +
           "</text>\n";
    svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(y0 + kPanelHeight + 32) +
           "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";

    double legend_y = y0 + 14;
    for (const auto& s : panel.series) {
      if (s.spectrum == nullptr) continue;
      std::string path;
      bool pen_down = false;
      for (std::size_t i = 0; i < s.spectrum->size(); ++i) {
        if (s.spectrum->is_masked(i) || !std::isfinite(s.spectrum->values[i])) {
          pen_down = false;
          continue;
        }
        path += pen_down ? " L" : " M";
        path += num(px(s.spectrum->lambda_nm[i])) + " " + num(py(s.spectrum->values[i]));
        pen_down = true;
      }
      svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + s.colour +
             "\" stroke-width=\"1\"/>\n";
      svg += "<text x=\"" + num(kWidth - kRight - 6) + "\" y=\"" + num(legend_y) +
             "\" text-anchor=\"end\" fill=\"" + s.colour + "\">" + escape(s.label) + "</text>\n";
      legend_y += 14;
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace qgs::cli
