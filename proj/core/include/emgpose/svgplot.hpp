#pragma once

#include <string>
#include <vector>

namespace emgpose::svgplot {

/// One polyline. An empty color picks the next palette entry.
struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  std::string color;
};

/// Shaded region between two curves, drawn behind the series (IQR bands).
struct Band {
  std::vector<double> x;
  std::vector<double> lo;
  std::vector<double> hi;
  std::string color;
};

struct Axis {
  std::string label;
  bool logScale = false;  // requires strictly positive data on this axis
};

struct LinePlot {
  std::string title;
  Axis xAxis;
  Axis yAxis;
  std::vector<Series> series;
  std::vector<Band> bands;
  int widthPx = 720;
  int heightPx = 480;
};

/// Five-number summary drawn as one box with whiskers.
struct BoxStats {
  double whiskerLo = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whiskerHi = 0.0;
  std::string label;
};

struct BoxPlot {
  std::string title;
  Axis yAxis;
  std::vector<BoxStats> boxes;
  int widthPx = 480;
  int heightPx = 480;
};

/// Standalone SVG documents. Output is deterministic: fixed palette, fixed
/// number formatting, and no timestamps or generator metadata.
std::string render(const LinePlot& plot);
std::string render(const BoxPlot& plot);

void save(const std::string& path, const std::string& svg);

}  // namespace emgpose::svgplot
