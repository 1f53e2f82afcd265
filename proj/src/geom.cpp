#include "pkd/geom.hpp"

#include <algorithm>

namespace pkd::geom {

double Box::volume() const {
  double v = 1.0;
  for (const auto& iv : dims) v *= iv.width();
  return v;
}

bool Box::contains(std::span<const double> point) const {
  if (point.size() != dims.size()) return false;
  for (size_t d = 0; d < dims.size(); ++d)
    if (!dims[d].contains(point[d])) return false;
  return true;
}

Box unit_box(int n_dims) {
  Box b;
  b.dims.assign(static_cast<size_t>(n_dims), Interval{0.0, 1.0, true});
  return b;
}

bool overlaps(double task_lo, double task_hi, const Interval& iv) {
  if (task_lo == task_hi) return iv.contains(task_lo);
  return std::max(task_lo, iv.lo) < std::min(task_hi, iv.hi);
}

double overlap_len(double task_lo, double task_hi, const Interval& iv) {
  return std::max(0.0, std::min(task_hi, iv.hi) - std::max(task_lo, iv.lo));
}

}  // namespace pkd::geom
