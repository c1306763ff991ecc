#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

// Minimal self-contained SVG line charts with optional shaded bands.

namespace fishermarket::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::vector<double> lo, hi;  // band; empty for none
};

struct Chart {
  std::string title, x_label, y_label;
  std::vector<Series> series;
  bool log_y = false;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

inline const char* colour(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette[i % 10];
}

}  // namespace detail

inline std::string render(const Chart& chart) {
  const double W = 640, H = 420, left = 70, right = 170, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  const auto ty = [&](double v) { return chart.log_y ? std::log10(std::max(v, 1e-300)) : v; };
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
      if (!s.lo.empty()) {
        y0 = std::min(y0, ty(s.lo[i]));
        y1 = std::max(y1, ty(s.hi[i]));
      }
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
  const auto py = [&](double v) { return top + (1.0 - (ty(v) - y0) / (y1 - y0)) * ph; };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(W) + "\" height=\"" +
                    detail::num(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::num(W / 2 - right / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::escape(chart.title) + "</text>\n";
  out += "<rect x=\"" + detail::num(left) + "\" y=\"" + detail::num(top) + "\" width=\"" + detail::num(pw) +
         "\" height=\"" + detail::num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
    const double gx = px(fx), gy = top + (1.0 - k / 4.0) * ph;
    out += "<text x=\"" + detail::num(gx) + "\" y=\"" + detail::num(top + ph + 16) + "\" text-anchor=\"middle\">" +
           detail::tick(fx) + "</text>\n";
    out += "<text x=\"" + detail::num(left - 6) + "\" y=\"" + detail::num(gy + 4) + "\" text-anchor=\"end\">" +
           detail::tick(chart.log_y ? std::pow(10.0, fy) : fy) + "</text>\n";
    out += "<line x1=\"" + detail::num(left) + "\" x2=\"" + detail::num(left + pw) + "\" y1=\"" + detail::num(gy) +
           "\" y2=\"" + detail::num(gy) + "\" stroke=\"#ddd\"/>\n";
  }
  out += "<text x=\"" + detail::num(left + pw / 2) + "\" y=\"" + detail::num(H - 12) + "\" text-anchor=\"middle\">" +
         detail::escape(chart.x_label) + "</text>\n";
  out += "<text transform=\"translate(16," + detail::num(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::escape(chart.y_label) + "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    if (!s.lo.empty() && !s.x.empty()) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size(); ++i) pts += detail::num(px(s.x[i])) + "," + detail::num(py(s.hi[i])) + " ";
      for (std::size_t i = s.x.size(); i-- > 0;) pts += detail::num(px(s.x[i])) + "," + detail::num(py(s.lo[i])) + " ";
      out += "<polygon points=\"" + pts + "\" fill=\"" + detail::colour(k) + "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    }
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i])) pts += detail::num(px(s.x[i])) + "," + detail::num(py(s.y[i])) + " ";
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + detail::colour(k) + "\" stroke-width=\"1.8\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    out += "<line x1=\"" + detail::num(left + pw + 12) + "\" x2=\"" + detail::num(left + pw + 32) + "\" y1=\"" +
           detail::num(ly) + "\" y2=\"" + detail::num(ly) + "\" stroke=\"" + detail::colour(k) +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + detail::num(left + pw + 36) + "\" y=\"" + detail::num(ly + 4) + "\">" +
           detail::escape(s.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace fishermarket::svg
