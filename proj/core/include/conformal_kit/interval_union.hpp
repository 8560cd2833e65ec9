#ifndef CONFORMAL_KIT_INTERVAL_UNION_HPP
#define CONFORMAL_KIT_INTERVAL_UNION_HPP

#include <functional>
#include <span>
#include <vector>

#include "conformal_kit/types.hpp"

namespace conformal {

/**
 * One interval of the extended real line.  Infinite endpoints are always open;
 * a degenerate [a, a] with both ends closed is the single point {a}.
 */
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = true;
  bool hi_closed = true;

  bool valid() const;
  bool is_empty() const;
  bool contains(double y) const;
};

/**
 * Finite union of disjoint, non-adjacent intervals, kept sorted.  Overlapping
 * or touching inputs are merged on construction, so equal sets have equal
 * representations.
 */
class IntervalUnion {
 public:
  IntervalUnion() = default;

  static IntervalUnion empty() { return IntervalUnion(); }
  static IntervalUnion whole_line();
  static IntervalUnion single(Interval iv);
  /** Normalising constructor: sorts, drops empty parts, merges overlaps and touching ends. */
  static IntervalUnion from_intervals(std::vector<Interval> parts);

  bool is_empty() const { return parts_.empty(); }
  const std::vector<Interval>& parts() const { return parts_; }

  bool contains(double y) const;

  /** Lebesgue measure; +infinity when any part is unbounded. */
  double length() const;

 private:
  std::vector<Interval> parts_;
};

/**
 * Realise {y : pred(y)} restricted to a uniform grid: every maximal run of
 * true grid points becomes one closed interval widened by half a step on each
 * side and clipped to the grid bounds.  Endpoints are therefore accurate to
 * half a step whenever the underlying set is a union of intervals.
 */
IntervalUnion interval_union_from_predicate(const std::function<bool(double)>& pred,
                                            const GridSpec& grid);

/** Same realisation rule applied to precomputed per-grid-point membership flags. */
IntervalUnion interval_union_from_grid_flags(std::span<const char> member, const GridSpec& grid);

/**
 * Lebesgue measure of the symmetric difference.  Endpoint open/closed flags do
 * not matter (single points have measure zero); the result is +infinity when
 * exactly one of the two sets is unbounded in some direction.
 */
double symmetric_difference_length(const IntervalUnion& a, const IntervalUnion& b);

}  // namespace conformal

#endif  // CONFORMAL_KIT_INTERVAL_UNION_HPP
