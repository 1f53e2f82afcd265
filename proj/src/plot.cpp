#include "pkd/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace pkd::plot {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 600, kTop = 50, kBottom = 360;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void grow(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

}  // namespace

void write_svg(const std::string& path, const std::string& title,
               const std::string& xlabel, const std::string& ylabel,
               const std::vector<Series>& series, bool log_x) {
  Range rx, ry;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      double xv = log_x ? std::log10(s.x[i]) : s.x[i];
      rx.grow(xv);
      double e = i < s.err.size() ? s.err[i] : 0.0;
      ry.grow(s.y[i] - e);
      ry.grow(s.y[i] + e);
    }
  }
  if (!(rx.lo <= rx.hi) || !(ry.lo <= ry.hi))
    throw std::invalid_argument("plot: no data");
  if (rx.lo == rx.hi) {
    rx.lo -= 1;
    rx.hi += 1;
  }
  if (ry.lo == ry.hi) {
    ry.lo -= 1;
    ry.hi += 1;
  }
  // a little headroom
  double ypad = 0.05 * (ry.hi - ry.lo);
  ry.lo -= ypad;
  ry.hi += ypad;

  auto px = [&](double v) {
    double xv = log_x ? std::log10(v) : v;
    return kLeft + (xv - rx.lo) / (rx.hi - rx.lo) * (kRight - kLeft);
  };
  auto py = [&](double v) {
    return kBottom - (v - ry.lo) / (ry.hi - ry.lo) * (kBottom - kTop);
  };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title
      << "</text>\n";

  // axes
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\""
      << kRight << "\" y2=\"" << kBottom
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kBottom << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // ticks: 5 per axis
  for (int i = 0; i <= 4; ++i) {
    double fx = rx.lo + (rx.hi - rx.lo) * i / 4.0;
    double xpix = kLeft + (kRight - kLeft) * i / 4.0;
    double xval = log_x ? std::pow(10.0, fx) : fx;
    out << "<line x1=\"" << xpix << "\" y1=\"" << kBottom << "\" x2=\"" << xpix
        << "\" y2=\"" << kBottom + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << xpix << "\" y=\"" << kBottom + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << (std::abs(xval) >= 1e4 || (xval != 0 && std::abs(xval) < 1e-3)
                ? [&] {
                    char b[32];
                    std::snprintf(b, sizeof b, "%.2g", xval);
                    return std::string(b);
                  }()
                : [&] {
                    char b[32];
                    std::snprintf(b, sizeof b, "%g", xval);
                    return std::string(b);
                  }())
        << "</text>\n";
    double fy = ry.lo + (ry.hi - ry.lo) * i / 4.0;
    double ypix = kBottom - (kBottom - kTop) * i / 4.0;
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << ypix << "\" x2=\""
        << kLeft << "\" y2=\"" << ypix << "\" stroke=\"black\"/>\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", fy);
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << ypix + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << buf << "</text>\n";
  }

  out << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << xlabel << "</text>\n";
  out << "<text x=\"18\" y=\"" << (kTop + kBottom) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << (kTop + kBottom) / 2 << ")\">" << ylabel << "</text>\n";

  for (size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = kColors[s % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < ser.x.size(); ++i)
      out << px(ser.x[i]) << "," << py(ser.y[i]) << " ";
    out << "\"/>\n";
    for (size_t i = 0; i < ser.x.size(); ++i) {
      out << "<circle cx=\"" << px(ser.x[i]) << "\" cy=\"" << py(ser.y[i])
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      if (i < ser.err.size() && ser.err[i] > 0) {
        double x = px(ser.x[i]);
        double y0 = py(ser.y[i] - ser.err[i]), y1 = py(ser.y[i] + ser.err[i]);
        out << "<line x1=\"" << x << "\" y1=\"" << y0 << "\" x2=\"" << x
            << "\" y2=\"" << y1 << "\" stroke=\"" << color << "\"/>\n";
        out << "<line x1=\"" << x - 4 << "\" y1=\"" << y0 << "\" x2=\""
            << x + 4 << "\" y2=\"" << y0 << "\" stroke=\"" << color << "\"/>\n";
        out << "<line x1=\"" << x - 4 << "\" y1=\"" << y1 << "\" x2=\""
            << x + 4 << "\" y2=\"" << y1 << "\" stroke=\"" << color << "\"/>\n";
      }
    }
    // legend
    double ly = kTop + 16 * static_cast<double>(s);
    out << "<line x1=\"" << kRight - 120 << "\" y1=\"" << ly << "\" x2=\""
        << kRight - 100 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kRight - 94 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << ser.label
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace pkd::plot
