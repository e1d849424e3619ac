#include "infoflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "infoflow/errors.hpp"
#include "infoflow/io.hpp"

namespace infoflow {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape_xml(const std::string& s) {
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

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series, int width,
                    int height) {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0.0; xmax = 1.0; ymin = 0.0; ymax = 1.0;
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double ml = 70, mr = 20, mt = 40, mb = 55;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mt + (ymax - y) / (ymax - ymin) * ph; };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << escape_xml(title) << "</text>\n";

  // Axes box and ticks.
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  const int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double fx = xmin + (xmax - xmin) * t / ticks;
    const double fy = ymin + (ymax - ymin) * t / ticks;
    out << "<line x1=\"" << px(fx) << "\" y1=\"" << mt + ph << "\" x2=\""
        << px(fx) << "\" y2=\"" << mt + ph + 5
        << "\" stroke=\"#333\" stroke-width=\"1\"/>\n"
        << "<text x=\"" << px(fx) << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << format_double(fx) << "</text>\n"
        << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(fy) << "\" x2=\"" << ml
        << "\" y2=\"" << py(fy)
        << "\" stroke=\"#333\" stroke-width=\"1\"/>\n"
        << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << format_double(fy) << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << escape_xml(x_label) << "</text>\n"
      << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << mt + ph / 2 << ")\">" << escape_xml(y_label) << "</text>\n";

  // Polylines, NaN-separated.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(*kPalette))];
    std::ostringstream points;
    bool open = false;
    auto flush = [&]() {
      if (open) {
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.6\" points=\"" << points.str()
            << "\"/>\n";
        points.str("");
        open = false;
      }
    };
    for (std::size_t i = 0;
         i < series[s].x.size() && i < series[s].y.size(); ++i) {
      if (!std::isfinite(series[s].x[i]) || !std::isfinite(series[s].y[i])) {
        flush();
        continue;
      }
      points << fmt(px(series[s].x[i])) << ',' << fmt(py(series[s].y[i]))
             << ' ';
      open = true;
    }
    flush();
    // Legend entry.
    const double ly = mt + 16 + 16 * static_cast<double>(s);
    out << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << ly << "\" x2=\""
        << ml + pw - 125 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << ml + pw - 120 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape_xml(series[s].name) << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw ParseError(path, 0, "write failed");
}

}  // namespace infoflow
