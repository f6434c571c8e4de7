#include "emgpose/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "emgpose/errors.hpp"

namespace emgpose::svgplot {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
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

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw DataError(std::string("non-finite value in ") + what);
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(const std::vector<double>& v) {
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }

  void finish(bool logScale, const char* axisName) {
    if (!(lo <= hi)) throw DataError(std::string("no data on the ") + axisName + " axis");
    if (logScale && lo <= 0.0)
      throw DataError(std::string("log scale needs positive ") + axisName + " data");
    if (lo == hi) {
      // A flat series still needs a visible span.
      const double pad = logScale ? 0.0 : (lo == 0.0 ? 1.0 : std::abs(lo) * 0.1);
      if (logScale) {
        lo *= 0.5;
        hi *= 2.0;
      } else {
        lo -= pad;
        hi += pad;
      }
    }
  }
};

// Maps one data axis onto a pixel interval, linearly or in log10.
struct Scale {
  double dataLo, dataHi;
  double pxLo, pxHi;
  bool logScale;

  double operator()(double v) const {
    const double a = logScale ? std::log10(v) : v;
    const double lo = logScale ? std::log10(dataLo) : dataLo;
    const double hi = logScale ? std::log10(dataHi) : dataHi;
    return pxLo + (a - lo) / (hi - lo) * (pxHi - pxLo);
  }
};

// Tick positions: multiples of a 1/2/5 step for linear axes, powers of ten
// for log axes (endpoints when the range is narrower than one decade).
std::vector<double> ticks(double lo, double hi, bool logScale) {
  std::vector<double> out;
  if (logScale) {
    const int kLo = static_cast<int>(std::ceil(std::log10(lo) - 1e-9));
    const int kHi = static_cast<int>(std::floor(std::log10(hi) + 1e-9));
    for (int k = kLo; k <= kHi; ++k) out.push_back(std::pow(10.0, k));
    if (out.size() < 2) out = {lo, hi};
    return out;
  }
  const double span = hi - lo;
  double step = std::pow(10.0, std::floor(std::log10(span / 5.0)));
  if (span / step > 10.0) step *= 2.0;
  if (span / step > 10.0) step *= 2.5;
  if (span / step < 4.0) step *= 0.5;
  const double first = std::ceil(lo / step - 1e-9) * step;
  for (double t = first; t <= hi + step * 1e-9; t += step) out.push_back(t == 0.0 ? 0.0 : t);
  return out;
}

void check_size(int widthPx, int heightPx) {
  if (widthPx < 100 || heightPx < 100 || widthPx > 10000 || heightPx > 10000)
    throw ConfigError("plot size must be between 100 and 10000 pixels");
}

struct Frame {
  Scale x, y;
  std::ostringstream svg;

  void open(int w, int h, const std::string& title) {
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    svg << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"#ffffff\"/>\n";
    if (!title.empty())
      svg << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\""
          << " font-size=\"14\">" << escape(title) << "</text>\n";
  }

  void grid_and_axes(const Axis& xAxis, const Axis& yAxis, int w, int h) {
    for (double t : ticks(x.dataLo, x.dataHi, x.logScale)) {
      const double px = x(t);
      svg << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(y.pxLo) << "\" x2=\"" << fmt(px)
          << "\" y2=\"" << fmt(y.pxHi) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      svg << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(y.pxLo + 16.0)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
          << "</text>\n";
    }
    for (double t : ticks(y.dataLo, y.dataHi, y.logScale)) {
      const double py = y(t);
      svg << "<line x1=\"" << fmt(x.pxLo) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(x.pxHi)
          << "\" y2=\"" << fmt(py) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      svg << "<text x=\"" << fmt(x.pxLo - 6.0) << "\" y=\"" << fmt(py + 4.0)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
          << "</text>\n";
    }
    svg << "<rect x=\"" << fmt(x.pxLo) << "\" y=\"" << fmt(y.pxHi) << "\" width=\""
        << fmt(x.pxHi - x.pxLo) << "\" height=\"" << fmt(y.pxLo - y.pxHi)
        << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    if (!xAxis.label.empty())
      svg << "<text x=\"" << fmt((x.pxLo + x.pxHi) / 2.0) << "\" y=\"" << h - 10
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
          << escape(xAxis.label) << "</text>\n";
    if (!yAxis.label.empty())
      svg << "<text x=\"14\" y=\"" << fmt((y.pxLo + y.pxHi) / 2.0)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\""
          << " transform=\"rotate(-90 14 " << fmt((y.pxLo + y.pxHi) / 2.0) << ")\">"
          << escape(yAxis.label) << "</text>\n";
    (void)w;
  }
};

}  // namespace

std::string render(const LinePlot& plot) {
  check_size(plot.widthPx, plot.heightPx);
  if (plot.series.empty() && plot.bands.empty()) throw DataError("plot has no data");

  Range rx, ry;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size() || s.x.empty())
      throw DataError("series x and y must be non-empty and equal length");
    check_finite(s.x, "series x");
    check_finite(s.y, "series y");
    rx.include(s.x);
    ry.include(s.y);
  }
  for (const auto& b : plot.bands) {
    if (b.x.size() != b.lo.size() || b.x.size() != b.hi.size() || b.x.empty())
      throw DataError("band x, lo, hi must be non-empty and equal length");
    check_finite(b.x, "band x");
    check_finite(b.lo, "band lo");
    check_finite(b.hi, "band hi");
    for (std::size_t i = 0; i < b.x.size(); ++i)
      if (b.lo[i] > b.hi[i]) throw DataError("band lower edge exceeds upper edge");
    rx.include(b.x);
    ry.include(b.lo);
    ry.include(b.hi);
  }
  rx.finish(plot.xAxis.logScale, "x");
  ry.finish(plot.yAxis.logScale, "y");

  const double marginL = 64, marginR = 16, marginT = 28, marginB = 44;
  Frame f;
  f.x = {rx.lo, rx.hi, marginL, plot.widthPx - marginR, plot.xAxis.logScale};
  f.y = {ry.lo, ry.hi, plot.heightPx - marginB, marginT, plot.yAxis.logScale};
  f.open(plot.widthPx, plot.heightPx, plot.title);
  f.grid_and_axes(plot.xAxis, plot.yAxis, plot.widthPx, plot.heightPx);

  for (std::size_t bi = 0; bi < plot.bands.size(); ++bi) {
    const Band& b = plot.bands[bi];
    const std::string color =
        b.color.empty() ? kPalette[bi % kPaletteSize] : b.color;
    f.svg << "<polygon points=\"";
    for (std::size_t i = 0; i < b.x.size(); ++i)
      f.svg << fmt(f.x(b.x[i])) << "," << fmt(f.y(b.hi[i])) << " ";
    for (std::size_t i = b.x.size(); i-- > 0;)
      f.svg << fmt(f.x(b.x[i])) << "," << fmt(f.y(b.lo[i])) << " ";
    f.svg << "\" fill=\"" << color << "\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
  }

  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const Series& s = plot.series[si];
    const std::string color = s.color.empty() ? kPalette[si % kPaletteSize] : s.color;
    f.svg << "<polyline points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      f.svg << fmt(f.x(s.x[i])) << "," << fmt(f.y(s.y[i])) << " ";
    f.svg << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
  }

  double legendY = marginT + 14.0;
  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const Series& s = plot.series[si];
    if (s.label.empty()) continue;
    const std::string color = s.color.empty() ? kPalette[si % kPaletteSize] : s.color;
    const double lx = plot.widthPx - marginR - 150.0;
    f.svg << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(legendY - 4.0) << "\" x2=\""
          << fmt(lx + 18.0) << "\" y2=\"" << fmt(legendY - 4.0) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
    f.svg << "<text x=\"" << fmt(lx + 24.0) << "\" y=\"" << fmt(legendY)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.label) << "</text>\n";
    legendY += 16.0;
  }

  f.svg << "</svg>\n";
  return f.svg.str();
}

std::string render(const BoxPlot& plot) {
  check_size(plot.widthPx, plot.heightPx);
  if (plot.boxes.empty()) throw DataError("box plot has no boxes");

  Range ry;
  for (const auto& b : plot.boxes) {
    const std::vector<double> v = {b.whiskerLo, b.q1, b.median, b.q3, b.whiskerHi};
    check_finite(v, "box summary");
    if (!(b.whiskerLo <= b.q1 && b.q1 <= b.median && b.median <= b.q3 && b.q3 <= b.whiskerHi))
      throw DataError("box summary values out of order");
    ry.include(v);
  }
  ry.finish(plot.yAxis.logScale, "y");

  const double marginL = 64, marginR = 16, marginT = 28, marginB = 44;
  const double n = static_cast<double>(plot.boxes.size());
  Frame f;
  f.x = {-0.5, n - 0.5, marginL, plot.widthPx - marginR, false};
  f.y = {ry.lo, ry.hi, plot.heightPx - marginB, marginT, plot.yAxis.logScale};
  f.open(plot.widthPx, plot.heightPx, plot.title);

  for (double t : ticks(f.y.dataLo, f.y.dataHi, f.y.logScale)) {
    const double py = f.y(t);
    f.svg << "<line x1=\"" << fmt(f.x.pxLo) << "\" y1=\"" << fmt(py) << "\" x2=\""
          << fmt(f.x.pxHi) << "\" y2=\"" << fmt(py)
          << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    f.svg << "<text x=\"" << fmt(f.x.pxLo - 6.0) << "\" y=\"" << fmt(py + 4.0)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
          << "</text>\n";
  }
  f.svg << "<rect x=\"" << fmt(f.x.pxLo) << "\" y=\"" << fmt(f.y.pxHi) << "\" width=\""
        << fmt(f.x.pxHi - f.x.pxLo) << "\" height=\"" << fmt(f.y.pxLo - f.y.pxHi)
        << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  if (!plot.yAxis.label.empty())
    f.svg << "<text x=\"14\" y=\"" << fmt((f.y.pxLo + f.y.pxHi) / 2.0)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\""
          << " transform=\"rotate(-90 14 " << fmt((f.y.pxLo + f.y.pxHi) / 2.0) << ")\">"
          << escape(plot.yAxis.label) << "</text>\n";

  for (std::size_t i = 0; i < plot.boxes.size(); ++i) {
    const BoxStats& b = plot.boxes[i];
    const double cx = f.x(static_cast<double>(i));
    const double half = 0.3 * (f.x.pxHi - f.x.pxLo) / n;
    const std::string color = kPalette[i % kPaletteSize];
    f.svg << "<line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(f.y(b.whiskerLo)) << "\" x2=\""
          << fmt(cx) << "\" y2=\"" << fmt(f.y(b.whiskerHi)) << "\" stroke=\"#333333\""
          << " stroke-width=\"1\"/>\n";
    for (double w : {b.whiskerLo, b.whiskerHi})
      f.svg << "<line x1=\"" << fmt(cx - half * 0.6) << "\" y1=\"" << fmt(f.y(w)) << "\" x2=\""
            << fmt(cx + half * 0.6) << "\" y2=\"" << fmt(f.y(w))
            << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    f.svg << "<rect x=\"" << fmt(cx - half) << "\" y=\"" << fmt(f.y(b.q3)) << "\" width=\""
          << fmt(2.0 * half) << "\" height=\"" << fmt(f.y(b.q1) - f.y(b.q3)) << "\" fill=\""
          << color << "\" fill-opacity=\"0.35\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    f.svg << "<line x1=\"" << fmt(cx - half) << "\" y1=\"" << fmt(f.y(b.median)) << "\" x2=\""
          << fmt(cx + half) << "\" y2=\"" << fmt(f.y(b.median))
          << "\" stroke=\"#333333\" stroke-width=\"2\"/>\n";
    if (!b.label.empty())
      f.svg << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(f.y.pxLo + 16.0)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << escape(b.label) << "</text>\n";
  }

  f.svg << "</svg>\n";
  return f.svg.str();
}

void save(const std::string& path, const std::string& svg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << svg;
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace emgpose::svgplot
