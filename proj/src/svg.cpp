#include "hwstyle/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "hwstyle/error.hpp"

namespace hwstyle {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

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

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string scatter_svg(const std::vector<std::array<double, 2>>& points, const std::vector<std::string>& labels,
                        const std::string& title) {
  if (labels.size() != points.size()) throw InvalidArgument("scatter_svg: one label per point required");
  constexpr double kW = 640, kH = 480, kMargin = 48;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& p : points) {
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  if (points.empty()) xmin = ymin = -1, xmax = ymax = 1;
  if (xmax - xmin < 1e-12) xmin -= 1, xmax += 1;
  if (ymax - ymin < 1e-12) ymin -= 1, ymax += 1;
  auto sx = [&](double x) { return kMargin + (x - xmin) / (xmax - xmin) * (kW - 2 * kMargin); };
  auto sy = [&](double y) { return kH - kMargin - (y - ymin) / (ymax - ymin) * (kH - 2 * kMargin); };

  std::map<std::string, std::size_t> colour;
  for (const auto& l : labels) colour.emplace(l, 0);
  std::size_t next = 0;
  for (auto& [l, c] : colour) c = next++ % std::size(kPalette);

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
     << kW << ' ' << kH << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
     << escape(title) << "</text>\n"
     << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kW - 2 * kMargin << "\" height=\""
     << kH - 2 * kMargin << "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    os << "<circle cx=\"" << fmt(sx(points[i][0])) << "\" cy=\"" << fmt(sy(points[i][1]))
       << "\" r=\"4\" fill-opacity=\"0.8\" fill=\"" << kPalette[colour[labels[i]]] << "\"/>\n";
  }
  double ly = kMargin + 16;
  for (const auto& [l, c] : colour) {
    os << "<circle cx=\"" << kW - kMargin - 110 << "\" cy=\"" << ly - 4 << "\" r=\"5\" fill=\"" << kPalette[c]
       << "\"/>\n"
       << "<text x=\"" << kW - kMargin - 100 << "\" y=\"" << ly
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(l.empty() ? "(none)" : l) << "</text>\n";
    ly += 18;
  }
  os << "</svg>\n";
  return os.str();
}

std::string traces_svg(const std::vector<Trace>& traces, int columns) {
  if (columns < 1) throw InvalidArgument("traces_svg: columns must be positive");
  constexpr double kCell = 120, kPad = 12;
  const auto n = static_cast<int>(traces.size());
  const int cols = std::max(1, std::min(columns, n));
  const int rows = std::max(1, (n + cols - 1) / cols);

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * kCell << "\" height=\"" << rows * kCell
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int i = 0; i < n; ++i) {
    const auto& t = traces[static_cast<std::size_t>(i)];
    if (t.points.empty()) continue;
    double xmin = t.points[0].x, xmax = xmin, ymin = t.points[0].y, ymax = ymin;
    for (const auto& p : t.points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
    const double s = (kCell - 2 * kPad) / span;
    const double ox = (i % cols) * kCell + kPad, oy = (i / cols) * kCell + kPad;
    auto px = [&](double x) { return ox + (x - xmin) * s; };
    auto py = [&](double y) { return oy + (kCell - 2 * kPad) - (y - ymin) * s; };
    os << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : t.points) os << fmt(px(p.x)) << ',' << fmt(py(p.y)) << ' ';
    os << "\"/>\n<circle cx=\"" << fmt(px(t.points[0].x)) << "\" cy=\"" << fmt(py(t.points[0].y))
       << "\" r=\"3\" fill=\"#1f77b4\"/>\n"
       << "<text x=\"" << ox << "\" y=\"" << oy + 4 << "\" font-family=\"sans-serif\" font-size=\"10\">"
       << escape(t.writer_id) << ' ' << t.letter << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace hwstyle
