#include "conformal_kit/interval_union.hpp"

#include <algorithm>
#include <cmath>

namespace conformal {

bool Interval::valid() const {
  if (std::isnan(lo) || std::isnan(hi)) return false;
  if (lo == neg_inf && lo_closed) return false;
  if (hi == pos_inf && hi_closed) return false;
  if (lo == pos_inf || hi == neg_inf) return false;
  return true;
}

bool Interval::is_empty() const {
  if (lo > hi) return true;
  if (lo == hi) return !(lo_closed && hi_closed);
  return false;
}

bool Interval::contains(double y) const {
  if (y < lo || y > hi) return false;
  if (y == lo && !lo_closed) return false;
  if (y == hi && !hi_closed) return false;
  return true;
}

IntervalUnion IntervalUnion::whole_line() {
  return single({neg_inf, pos_inf, false, false});
}

IntervalUnion IntervalUnion::single(Interval iv) {
  return from_intervals({iv});
}

IntervalUnion IntervalUnion::from_intervals(std::vector<Interval> parts) {
  for (const auto& iv : parts) {
    if (!iv.valid()) throw argument_error("IntervalUnion: invalid interval endpoints");
  }
  std::erase_if(parts, [](const Interval& iv) { return iv.is_empty(); });
  std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) {
    if (a.lo != b.lo) return a.lo < b.lo;
    return a.lo_closed && !b.lo_closed;
  });

  IntervalUnion out;
  for (const auto& iv : parts) {
    if (out.parts_.empty()) {
      out.parts_.push_back(iv);
      continue;
    }
    Interval& last = out.parts_.back();
    const bool overlaps = iv.lo < last.hi;
    const bool touches = iv.lo == last.hi && (iv.lo_closed || last.hi_closed);
    if (overlaps || touches) {
      if (iv.hi > last.hi) {
        last.hi = iv.hi;
        last.hi_closed = iv.hi_closed;
      } else if (iv.hi == last.hi) {
        last.hi_closed = last.hi_closed || iv.hi_closed;
      }
    } else {
      out.parts_.push_back(iv);
    }
  }
  return out;
}

bool IntervalUnion::contains(double y) const {
  // First part whose lo exceeds y cannot contain it; check the one before.
  auto it = std::upper_bound(parts_.begin(), parts_.end(), y,
                             [](double v, const Interval& iv) { return v < iv.lo; });
  if (it != parts_.end() && it->contains(y)) return true;
  if (it != parts_.begin() && std::prev(it)->contains(y)) return true;
  return false;
}

double IntervalUnion::length() const {
  double total = 0.0;
  for (const auto& iv : parts_) total += iv.hi - iv.lo;
  return total;
}

IntervalUnion interval_union_from_predicate(const std::function<bool(double)>& pred,
                                            const GridSpec& grid) {
  grid.validate();
  std::vector<char> member(grid.points);
  for (std::size_t j = 0; j < grid.points; ++j) member[j] = pred(grid.at(j)) ? 1 : 0;
  return interval_union_from_grid_flags(member, grid);
}

IntervalUnion interval_union_from_grid_flags(std::span<const char> member, const GridSpec& grid) {
  grid.validate();
  if (member.size() != grid.points) {
    throw argument_error("interval_union_from_grid_flags: flag count must match the grid");
  }
  const double half = grid.step() / 2.0;
  std::vector<Interval> parts;
  std::size_t run_start = 0;
  bool in_run = false;
  for (std::size_t j = 0; j <= grid.points; ++j) {
    const bool hit = j < grid.points && member[j] != 0;
    if (hit && !in_run) {
      run_start = j;
      in_run = true;
    } else if (!hit && in_run) {
      const double lo = std::max(grid.lo, grid.at(run_start) - half);
      const double hi = std::min(grid.hi, grid.at(j - 1) + half);
      parts.push_back({lo, hi, true, true});
      in_run = false;
    }
  }
  return IntervalUnion::from_intervals(std::move(parts));
}

namespace {

// Representative-point sweep over the elementary segments cut out by all
// finite endpoints; open/closed flags are irrelevant at this granularity.
double xor_measure(const IntervalUnion& a, const IntervalUnion& b) {
  std::vector<double> cuts;
  for (const auto& iv : a.parts()) {
    if (std::isfinite(iv.lo)) cuts.push_back(iv.lo);
    if (std::isfinite(iv.hi)) cuts.push_back(iv.hi);
  }
  for (const auto& iv : b.parts()) {
    if (std::isfinite(iv.lo)) cuts.push_back(iv.lo);
    if (std::isfinite(iv.hi)) cuts.push_back(iv.hi);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const auto differs = [&](double y) { return a.contains(y) != b.contains(y); };

  if (cuts.empty()) {
    // Both sets are empty or the whole line.
    return differs(0.0) ? pos_inf : 0.0;
  }
  if (differs(cuts.front() - 1.0) || differs(cuts.back() + 1.0)) return pos_inf;

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = cuts[i] + (cuts[i + 1] - cuts[i]) / 2.0;
    if (differs(mid)) total += cuts[i + 1] - cuts[i];
  }
  return total;
}

}  // namespace

double symmetric_difference_length(const IntervalUnion& a, const IntervalUnion& b) {
  return xor_measure(a, b);
}

}  // namespace conformal
