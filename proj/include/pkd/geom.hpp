#pragma once

#include <span>
#include <vector>

// Axis-aligned geometry over the skill space. Tree subspaces are half-open
// boxes, [lo, hi) per dimension, except along the outer domain edge where the
// upper bound is closed so the whole domain stays covered.

namespace pkd::geom {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool hi_closed = false;  // true on the domain's outer edge

  double width() const { return hi - lo; }
  bool contains(double x) const {
    return x >= lo && (x < hi || (hi_closed && x == hi));
  }
};

struct Box {
  std::vector<Interval> dims;

  int n_dims() const { return static_cast<int>(dims.size()); }
  double volume() const;
  bool contains(std::span<const double> point) const;
};

// Unit cube [0, 1]^n with closed upper edges.
Box unit_box(int n_dims);

// Positive-measure overlap between a closed task interval [lo, hi] and a box
// interval. A degenerate task interval (lo == hi) counts as intersecting when
// the box interval contains the point; mere boundary touching does not.
bool overlaps(double task_lo, double task_hi, const Interval& iv);

// Length of the overlap between [task_lo, task_hi] and the box interval.
double overlap_len(double task_lo, double task_hi, const Interval& iv);

}  // namespace pkd::geom
