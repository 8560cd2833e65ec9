#ifndef CONFORMAL_KIT_LEVY_GAUGE_HPP
#define CONFORMAL_KIT_LEVY_GAUGE_HPP

#include "conformal_kit/step_function.hpp"
#include "conformal_kit/types.hpp"

namespace conformal {

struct GaugeResult {
  double epsilon = 0.0;  // smallest feasible band height, in [0, 1]
  double delta = 0.0;    // horizontal slack the band was computed for
};

/**
 * Smallest eps >= 0 such that F(t - delta) - eps <= G(t) <= F(t + delta) + eps
 * for all t; equivalently sup_t max(F(t) - G(t + delta), G(t) - F(t + delta))
 * clamped to [0, 1].  Exact for step functions: the supremum is attained on
 * the half-open intervals cut out by the breakpoints and their delta-shifts,
 * so it suffices to evaluate both differences (and their left limits) there.
 * With delta = 0 this is the Kolmogorov distance.
 */
GaugeResult levy_gauge(const StepFunction& f, const StepFunction& g, double delta);

/**
 * Levy distance: the smallest eps >= 0 feasible with horizontal and vertical
 * slack tied together.  Computed by bisection on eps in [0, 1] to within tol.
 */
double levy_metric(const StepFunction& f, const StepFunction& g, double tol = 1e-9);

struct GaugeBounds {
  double windowed = 0.0;  // tail-mass bound plus windowed L2 term
  double global = 0.0;    // global L2 term only; +infinity if the L2 gap diverges
};

/**
 * Two computable upper bounds for the gauge at slack delta > 0:
 *   windowed = 1 - F(k + mu) + F(-k + mu)
 *              + sqrt((1/delta) * Int_{[-k+mu-delta, k+mu+2*delta]} |F - G|^2)
 *   global   = sqrt((1/delta) * Int_R |F - G|^2)
 * The integrals are exact piecewise-constant sums over merged breakpoints.
 */
GaugeBounds gauge_upper_bounds(const StepFunction& f, const StepFunction& g, double delta,
                               double k, double mu);

/**
 * Verifies Q_{alpha - eps}(F) - delta <= Q_alpha(G) <= Q_{alpha + eps}(F) + delta
 * where eps = levy_gauge(f, g, delta), using extended-real arithmetic at the
 * infinite quantiles.  Holds for every alpha by theory; exposed as a runtime
 * check for test harnesses.
 */
bool check_quantile_inequality(const StepFunction& f, const StepFunction& g, double delta,
                               double alpha);

}  // namespace conformal

#endif  // CONFORMAL_KIT_LEVY_GAUGE_HPP
