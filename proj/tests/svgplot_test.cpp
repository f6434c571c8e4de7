#include "emgpose/svgplot.hpp"

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "emgpose/errors.hpp"

using namespace emgpose;

namespace {

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t count = 0, pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

// Minimal XML well-formedness: every tag closes, nesting balances, and no
// stray '<' or '>' appears outside tags.
bool tags_balanced(const std::string& svg) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  while (i < svg.size()) {
    if (svg[i] == '>') return false;
    if (svg[i] != '<') {
      ++i;
      continue;
    }
    const std::size_t end = svg.find('>', i);
    if (end == std::string::npos) return false;
    std::string tag = svg.substr(i + 1, end - i - 1);
    if (tag.find('<') != std::string::npos) return false;
    if (!tag.empty() && tag.back() == '/') {
      // self-closing
    } else if (!tag.empty() && tag.front() == '/') {
      if (stack.empty()) return false;
      if (stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else {
      const std::size_t space = tag.find_first_of(" \t\n");
      stack.push_back(space == std::string::npos ? tag : tag.substr(0, space));
    }
    i = end + 1;
  }
  return stack.empty();
}

// First polyline's points attribute parsed back into pixel coordinates.
std::vector<std::pair<double, double>> first_polyline(const std::string& svg) {
  const std::string key = "<polyline points=\"";
  const std::size_t start = svg.find(key);
  REQUIRE(start != std::string::npos);
  const std::size_t end = svg.find('"', start + key.size());
  std::istringstream in(svg.substr(start + key.size(), end - start - key.size()));
  std::vector<std::pair<double, double>> pts;
  std::string token;
  while (in >> token) {
    const std::size_t comma = token.find(',');
    pts.emplace_back(std::stod(token.substr(0, comma)), std::stod(token.substr(comma + 1)));
  }
  return pts;
}

svgplot::LinePlot simple_plot() {
  svgplot::LinePlot plot;
  plot.title = "ramp";
  plot.xAxis.label = "time (s)";
  plot.yAxis.label = "value";
  svgplot::Series s;
  s.x = {0.0, 1.0, 2.0, 3.0};
  s.y = {0.0, 1.0, 4.0, 9.0};
  s.label = "squared";
  plot.series.push_back(s);
  return plot;
}

}  // namespace

TEST_CASE("line plot output is well formed and deterministic") {
  const std::string svg = svgplot::render(simple_plot());
  CHECK(svg.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\"", 0) == 0);
  CHECK(svg.substr(svg.size() - 7) == "</svg>\n");
  CHECK(tags_balanced(svg));
  CHECK(svg == svgplot::render(simple_plot()));
}

TEST_CASE("line plot carries titles, labels and legend text") {
  const std::string svg = svgplot::render(simple_plot());
  CHECK(count_occurrences(svg, ">ramp<") == 1);
  CHECK(count_occurrences(svg, ">time (s)<") == 1);
  CHECK(count_occurrences(svg, ">value<") == 1);
  CHECK(count_occurrences(svg, ">squared<") == 1);
}

TEST_CASE("one polyline per series and one polygon per band") {
  svgplot::LinePlot plot = simple_plot();
  svgplot::Series second;
  second.x = {0.0, 3.0};
  second.y = {5.0, 5.0};
  plot.series.push_back(second);
  svgplot::Band band;
  band.x = {0.0, 1.0, 2.0, 3.0};
  band.lo = {-1.0, 0.0, 3.0, 8.0};
  band.hi = {1.0, 2.0, 5.0, 10.0};
  plot.bands.push_back(band);

  const std::string svg = svgplot::render(plot);
  CHECK(count_occurrences(svg, "<polyline ") == 2);
  CHECK(count_occurrences(svg, "<polygon ") == 1);
  CHECK(tags_balanced(svg));

  const auto pts = first_polyline(svg);
  REQUIRE(pts.size() == 4);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].first > pts[i - 1].first);
    CHECK(pts[i].second < pts[i - 1].second);  // pixel y grows downward
  }
}

TEST_CASE("labels are xml escaped") {
  svgplot::LinePlot plot = simple_plot();
  plot.title = "a<b & \"c\"";
  const std::string svg = svgplot::render(plot);
  CHECK(svg.find("a&lt;b &amp; &quot;c&quot;") != std::string::npos);
  CHECK(tags_balanced(svg));
}

TEST_CASE("log x axis spaces decades evenly") {
  svgplot::LinePlot plot;
  plot.xAxis.logScale = true;
  svgplot::Series s;
  s.x = {1.0, 10.0, 100.0, 1000.0, 10000.0};
  s.y = {0.0, 1.0, 2.0, 3.0, 4.0};
  plot.series.push_back(s);

  const auto pts = first_polyline(svgplot::render(plot));
  REQUIRE(pts.size() == 5);
  const double step = pts[1].first - pts[0].first;
  for (std::size_t i = 1; i < pts.size(); ++i)
    CHECK(pts[i].first - pts[i - 1].first == doctest::Approx(step).epsilon(1e-3));
}

TEST_CASE("flat series still renders with a visible span") {
  svgplot::LinePlot plot;
  svgplot::Series s;
  s.x = {0.0, 1.0, 2.0};
  s.y = {3.5, 3.5, 3.5};
  plot.series.push_back(s);
  const std::string svg = svgplot::render(plot);
  CHECK(tags_balanced(svg));
}

TEST_CASE("line plot rejects invalid input") {
  CHECK_THROWS_AS(svgplot::render(svgplot::LinePlot{}), DataError);

  svgplot::LinePlot mismatched;
  svgplot::Series s;
  s.x = {0.0, 1.0};
  s.y = {0.0};
  mismatched.series.push_back(s);
  CHECK_THROWS_AS(svgplot::render(mismatched), DataError);

  svgplot::LinePlot nan = simple_plot();
  nan.series[0].y[1] = std::nan("");
  CHECK_THROWS_AS(svgplot::render(nan), DataError);

  svgplot::LinePlot logZero = simple_plot();
  logZero.xAxis.logScale = true;  // x starts at 0
  CHECK_THROWS_AS(svgplot::render(logZero), DataError);

  svgplot::LinePlot badBand = simple_plot();
  svgplot::Band band;
  band.x = {0.0, 1.0};
  band.lo = {1.0, 2.0};
  band.hi = {2.0, 1.5};
  badBand.bands.push_back(band);
  CHECK_THROWS_AS(svgplot::render(badBand), DataError);

  svgplot::LinePlot tiny = simple_plot();
  tiny.widthPx = 10;
  CHECK_THROWS_AS(svgplot::render(tiny), ConfigError);
}

TEST_CASE("box plot draws one box per summary") {
  svgplot::BoxPlot plot;
  plot.title = "spread";
  plot.yAxis.label = "variance";
  plot.boxes.push_back({0.1, 0.3, 0.5, 0.8, 1.2, "proximo-distal"});
  plot.boxes.push_back({0.2, 0.9, 1.4, 2.0, 3.1, "circumferential"});

  const std::string svg = svgplot::render(plot);
  CHECK(tags_balanced(svg));
  // background + frame + two boxes
  CHECK(count_occurrences(svg, "<rect ") == 4);
  CHECK(count_occurrences(svg, ">proximo-distal<") == 1);
  CHECK(count_occurrences(svg, ">circumferential<") == 1);
  CHECK(svg == svgplot::render(plot));
}

TEST_CASE("box plot rejects out-of-order summaries") {
  svgplot::BoxPlot plot;
  plot.boxes.push_back({0.5, 0.3, 0.5, 0.8, 1.2, "bad"});
  CHECK_THROWS_AS(svgplot::render(plot), DataError);
  CHECK_THROWS_AS(svgplot::render(svgplot::BoxPlot{}), DataError);
}

TEST_CASE("save writes the svg byte for byte") {
  const std::string svg = svgplot::render(simple_plot());
  const auto path =
      (std::filesystem::temp_directory_path() / "emgpose_svgplot_test.svg").string();
  svgplot::save(path, svg);
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == svg);
  std::filesystem::remove(path);
}
