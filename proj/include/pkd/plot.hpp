#pragma once

#include <string>
#include <vector>

// Minimal static SVG line plots for sweep and bench outputs.

namespace pkd::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  // optional symmetric error bars; empty to skip
};

void write_svg(const std::string& path, const std::string& title,
               const std::string& xlabel, const std::string& ylabel,
               const std::vector<Series>& series, bool log_x = false);

}  // namespace pkd::plot
