#ifndef CONFORMAL_KIT_STEP_FUNCTION_HPP
#define CONFORMAL_KIT_STEP_FUNCTION_HPP

#include <span>
#include <vector>

#include "conformal_kit/types.hpp"

namespace conformal {

/**
 * Right-continuous nondecreasing step function on the real line with values in
 * [0, 1], equal to 0 before the first breakpoint.  Empirical CDFs are the main
 * instances; ties are stacked, so breakpoints are strictly increasing and each
 * carries the full jump.
 */
class StepFunction {
 public:
  /** breakpoints strictly increasing and finite; values nondecreasing in [0, 1]. */
  StepFunction(std::vector<double> breakpoints, std::vector<double> values);

  /** F(t): value at the greatest breakpoint <= t, or 0 when t precedes all of them. */
  double operator()(double t) const;

  /** F(t-): supremum of F over (-inf, t). */
  double left_limit(double t) const;

  double final_value() const { return values_.back(); }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

/** Empirical CDF of a nonempty sample; tied values stack into a single jump. */
StepFunction build_ecdf(std::span<const double> sample);

/**
 * Generalised quantile: the smallest point where F reaches level alpha, as an
 * extended real.  -infinity when alpha <= 0; +infinity when no point reaches
 * the level (in particular whenever alpha > 1); otherwise the infimum is
 * attained at a breakpoint and that breakpoint is returned.  Level comparisons
 * are exact floating-point comparisons.
 */
extended_real quantile(const StepFunction& f, double alpha);

}  // namespace conformal

#endif  // CONFORMAL_KIT_STEP_FUNCTION_HPP
