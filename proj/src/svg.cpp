#include "bandlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "bandlab/errors.hpp"

namespace bandlab {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(int e) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "1e%d", e);
  return buf;
}

}  // namespace

std::string render_loglog_svg(const LogLogChart& chart) {
  if (chart.width < 200 || chart.height < 150) throw DomainError("svg: canvas too small");
  double lx0 = std::numeric_limits<double>::infinity(), lx1 = -lx0;
  double ly0 = lx0, ly1 = -lx0;
  std::vector<std::vector<std::pair<double, double>>> logs;
  for (const auto& s : chart.series) {
    std::vector<std::pair<double, double>> pts;
    for (auto [x, y] : s.points) {
      if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) continue;
      const double a = std::log10(x), b = std::log10(y);
      pts.emplace_back(a, b);
      lx0 = std::min(lx0, a); lx1 = std::max(lx1, a);
      ly0 = std::min(ly0, b); ly1 = std::max(ly1, b);
    }
    logs.push_back(std::move(pts));
  }
  if (!std::isfinite(lx0)) throw DomainError("svg: no positive data");

  std::optional<std::pair<std::pair<double, double>, std::pair<double, double>>> ref;
  if (chart.reference_slope && !logs.empty() && !logs.front().empty()) {
    const auto [a0, b0] = logs.front().front();
    const double s = *chart.reference_slope;
    ref = {{lx0, b0 + s * (lx0 - a0)}, {lx1, b0 + s * (lx1 - a0)}};
    ly0 = std::min({ly0, ref->first.second, ref->second.second});
    ly1 = std::max({ly1, ref->first.second, ref->second.second});
  }
  lx0 = std::floor(lx0 * 10.0) / 10.0; lx1 = std::ceil(lx1 * 10.0) / 10.0;
  if (lx1 - lx0 < 0.1) { lx0 -= 0.1; lx1 += 0.1; }
  ly0 = std::floor(ly0); ly1 = std::ceil(ly1);
  if (ly1 - ly0 < 1.0) ly1 = ly0 + 1.0;

  const double left = 90, right = 30 + 140, top = 50, bottom = 70;
  const double pw = chart.width - left - right, ph = chart.height - top - bottom;
  auto px = [&](double a) { return left + (a - lx0) / (lx1 - lx0) * pw; };
  auto py = [&](double b) { return top + (ly1 - b) / (ly1 - ly0) * ph; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << chart.width
    << "\" height=\"" << chart.height << "\" viewBox=\"0 0 " << chart.width << ' ' << chart.height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!chart.title.empty()) {
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"18\">"
      << escape(chart.title) << "</text>\n";
  }
  o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Decade ticks on y; x ticks at 1, 2, 5 times powers of ten inside the range.
  for (int e = static_cast<int>(ly0); e <= static_cast<int>(ly1); ++e) {
    const double y = py(e);
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left + pw) << "\" y2=\"" << num(y)
      << "\" stroke=\"#dddddd\"/>\n"
      << "<text x=\"" << num(left - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\" font-size=\"12\">"
      << tick_label(e) << "</text>\n";
  }
  for (int e = static_cast<int>(std::floor(lx0)); e <= static_cast<int>(std::ceil(lx1)); ++e) {
    for (double m : {1.0, 2.0, 5.0}) {
      const double a = e + std::log10(m);
      if (a < lx0 - 1e-9 || a > lx1 + 1e-9) continue;
      const double x = px(a);
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", m * std::pow(10.0, e));
      o << "<line x1=\"" << num(x) << "\" y1=\"" << num(top) << "\" x2=\"" << num(x) << "\" y2=\"" << num(top + ph)
        << "\" stroke=\"#dddddd\"/>\n"
        << "<text x=\"" << num(x) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\" font-size=\"12\">"
        << buf << "</text>\n";
    }
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(chart.height - 20.0)
    << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(chart.x_label) << "</text>\n"
    << "<text x=\"24\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 24 "
    << num(top + ph / 2) << ")\">" << escape(chart.y_label) << "</text>\n";

  double legend_y = top + 10;
  const double legend_x = left + pw + 15;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const char* colour = kPalette[i % std::size(kPalette)];
    if (!logs[i].empty()) {
      o << "<polyline class=\"series\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
      for (std::size_t j = 0; j < logs[i].size(); ++j) {
        if (j) o << ' ';
        o << num(px(logs[i][j].first)) << ',' << num(py(logs[i][j].second));
      }
      o << "\"/>\n";
      for (auto [a, b] : logs[i]) {
        o << "<circle cx=\"" << num(px(a)) << "\" cy=\"" << num(py(b)) << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
      }
    }
    o << "<line x1=\"" << num(legend_x) << "\" y1=\"" << num(legend_y) << "\" x2=\"" << num(legend_x + 24) << "\" y2=\""
      << num(legend_y) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << num(legend_x + 30) << "\" y=\"" << num(legend_y + 4) << "\" font-size=\"12\">"
      << escape(chart.series[i].name) << "</text>\n";
    legend_y += 20;
  }
  if (ref) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "slope %g", *chart.reference_slope);
    o << "<polyline class=\"reference\" fill=\"none\" stroke=\"#555555\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\" points=\""
      << num(px(ref->first.first)) << ',' << num(py(ref->first.second)) << ' ' << num(px(ref->second.first)) << ','
      << num(py(ref->second.second)) << "\"/>\n"
      << "<line x1=\"" << num(legend_x) << "\" y1=\"" << num(legend_y) << "\" x2=\"" << num(legend_x + 24) << "\" y2=\""
      << num(legend_y) << "\" stroke=\"#555555\" stroke-dasharray=\"6,4\"/>\n"
      << "<text x=\"" << num(legend_x + 30) << "\" y=\"" << num(legend_y + 4) << "\" font-size=\"12\">" << buf
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace bandlab
