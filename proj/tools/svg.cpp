#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fosr::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s(buf);
  return s == "-0.000" ? "0.000" : s;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* series_class(Style s) {
  switch (s) {
    case Style::solid_black: return "true";
    case Style::blue_squares: return "fsl";
    case Style::red_dashed: return "afsl";
  }
  return "series";
}

std::string stroke_attributes(Style s) {
  switch (s) {
    case Style::solid_black: return R"(stroke="#000000" stroke-width="2")";
    case Style::blue_squares: return R"(stroke="#1f4fd1" stroke-width="1")";
    case Style::red_dashed: return R"(stroke="#d12020" stroke-width="2" stroke-dasharray="6,4")";
  }
  return {};
}

}  // namespace

std::string render_coefficient_plot(const std::vector<double>& grid, const std::vector<Series>& series,
                                    const std::string& title) {
  if (grid.size() < 2) throw std::invalid_argument("plot needs at least two grid points");
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& s : series) {
    if (s.values.size() != grid.size()) throw std::invalid_argument("series length differs from grid");
    for (double v : s.values) {
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double x0 = grid.front(), x1 = grid.back();
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * plot_w; };
  auto py = [&](double y) { return kTop + (hi - y) / (hi - lo) * plot_h; };

  std::ostringstream out;
  out << R"(<?xml version="1.0" encoding="UTF-8"?>)" << '\n'
      << R"(<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width=")" << kWidth << R"(" height=")" << kHeight
      << R"(" viewBox="0 0 )" << kWidth << ' ' << kHeight << R"(">)" << '\n'
      << R"(<rect x="0" y="0" width=")" << kWidth << R"(" height=")" << kHeight << R"(" fill="#ffffff"/>)" << '\n'
      << R"(<text x=")" << fixed(kLeft + plot_w / 2) << R"(" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">)"
      << escape(title) << "</text>\n";

  // Axes and ticks.
  out << R"(<g class="axes" stroke="#444444" stroke-width="1" fill="none">)" << '\n'
      << R"(<line x1=")" << fixed(kLeft) << R"(" y1=")" << fixed(kTop + plot_h) << R"(" x2=")" << fixed(kLeft + plot_w)
      << R"(" y2=")" << fixed(kTop + plot_h) << R"("/>)" << '\n'
      << R"(<line x1=")" << fixed(kLeft) << R"(" y1=")" << fixed(kTop) << R"(" x2=")" << fixed(kLeft) << R"(" y2=")"
      << fixed(kTop + plot_h) << R"("/>)" << '\n';
  if (lo < 0.0 && hi > 0.0)
    out << R"(<line class="zero" x1=")" << fixed(kLeft) << R"(" y1=")" << fixed(py(0.0)) << R"(" x2=")"
        << fixed(kLeft + plot_w) << R"(" y2=")" << fixed(py(0.0)) << R"(" stroke-dasharray="2,3"/>)" << '\n';
  out << "</g>\n";
  out << R"(<g class="ticks" font-family="sans-serif" font-size="11" fill="#222222">)" << '\n';
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0;
    out << R"(<text x=")" << fixed(px(xv)) << R"(" y=")" << fixed(kTop + plot_h + 18) << R"(" text-anchor="middle">)"
        << fixed(xv) << "</text>\n";
    const double yv = lo + (hi - lo) * t / 4.0;
    out << R"(<text x=")" << fixed(kLeft - 6) << R"(" y=")" << fixed(py(yv) + 4) << R"(" text-anchor="end">)"
        << fixed(yv) << "</text>\n";
  }
  out << "</g>\n";

  for (const auto& s : series) {
    out << R"(<polyline class=")" << series_class(s.style) << R"(" data-label=")" << escape(s.label)
        << R"(" fill="none" )" << stroke_attributes(s.style) << R"( points=")";
    for (std::size_t g = 0; g < grid.size(); ++g) out << (g ? " " : "") << fixed(px(grid[g])) << ',' << fixed(py(s.values[g]));
    out << R"("/>)" << '\n';
    if (s.style == Style::blue_squares) {
      out << R"(<g class="fsl-markers" fill="#1f4fd1">)" << '\n';
      for (std::size_t g = 0; g < grid.size(); ++g)
        out << R"(<rect x=")" << fixed(px(grid[g]) - 2.5) << R"(" y=")" << fixed(py(s.values[g]) - 2.5)
            << R"(" width="5" height="5"/>)" << '\n';
      out << "</g>\n";
    }
  }

  // Legend.
  out << R"(<g class="legend" font-family="sans-serif" font-size="12">)" << '\n';
  double ly = kTop + 10;
  for (const auto& s : series) {
    const double lx = kLeft + plot_w + 15;
    out << R"(<line x1=")" << fixed(lx) << R"(" y1=")" << fixed(ly) << R"(" x2=")" << fixed(lx + 30) << R"(" y2=")"
        << fixed(ly) << R"(" )" << stroke_attributes(s.style) << "/>\n";
    if (s.style == Style::blue_squares)
      out << R"(<rect x=")" << fixed(lx + 12.5) << R"(" y=")" << fixed(ly - 2.5)
          << R"(" width="5" height="5" fill="#1f4fd1"/>)" << '\n';
    out << R"(<text x=")" << fixed(lx + 36) << R"(" y=")" << fixed(ly + 4) << R"(">)" << escape(s.label) << "</text>\n";
    ly += 20;
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace fosr::svg
