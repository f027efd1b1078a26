#pragma once

// Minimal standalone SVG 1.1 log-log line charts.

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bandlab {

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, y), both > 0
};

struct LogLogChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ChartSeries> series;
  // Dashed line y = C x^slope through the first point of the first series.
  std::optional<double> reference_slope;
  int width = 800;
  int height = 600;
};

// Nonpositive points are dropped. Throws DomainError when nothing is left.
std::string render_loglog_svg(const LogLogChart& chart);

}  // namespace bandlab
