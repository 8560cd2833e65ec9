#include "conformal_kit/levy_gauge.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace conformal {

namespace {

// Max over the four band-violation quantities at an evaluation pair (t, u)
// whose exact relation is u = t + delta; one of the two coordinates is always
// a breakpoint held exactly, the other obtained by one rounded add.
double pair_violation(const StepFunction& f, const StepFunction& g, double t, double u) {
  double m = f(t) - g(u);
  m = std::max(m, g(t) - f(u));
  m = std::max(m, f.left_limit(t) - g.left_limit(u));
  m = std::max(m, g.left_limit(t) - f.left_limit(u));
  return m;
}

}  // namespace

GaugeResult levy_gauge(const StepFunction& f, const StepFunction& g, double delta) {
  if (std::isnan(delta) || delta < 0.0) {
    throw argument_error("levy_gauge: delta must be nonnegative");
  }
  std::vector<double> bps;
  bps.reserve(f.breakpoints().size() + g.breakpoints().size());
  bps.insert(bps.end(), f.breakpoints().begin(), f.breakpoints().end());
  bps.insert(bps.end(), g.breakpoints().begin(), g.breakpoints().end());

  double sup = 0.0;
  for (double b : bps) {
    sup = std::max(sup, pair_violation(f, g, b, b + delta));
    sup = std::max(sup, pair_violation(f, g, b - delta, b));
  }
  return {std::min(sup, 1.0), delta};
}

double levy_metric(const StepFunction& f, const StepFunction& g, double tol) {
  if (!(tol > 0.0)) throw argument_error("levy_metric: tolerance must be positive");
  const auto feasible = [&](double eps) { return levy_gauge(f, g, eps).epsilon <= eps; };
  if (feasible(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol) {
    const double mid = (lo + hi) / 2.0;
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

namespace {

// Exact integral of |f - g|^2 over the window [w_lo, w_hi] (which may be the
// whole line).  The integrand is constant between merged breakpoints, zero
// below the first, and constant at |f_final - g_final|^2 above the last.
double squared_gap_integral(const StepFunction& f, const StepFunction& g, double w_lo,
                            double w_hi) {
  if (w_hi <= w_lo) return 0.0;
  std::vector<double> bps;
  bps.reserve(f.breakpoints().size() + g.breakpoints().size());
  bps.insert(bps.end(), f.breakpoints().begin(), f.breakpoints().end());
  bps.insert(bps.end(), g.breakpoints().begin(), g.breakpoints().end());
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());

  double total = 0.0;
  for (std::size_t i = 0; i < bps.size(); ++i) {
    const double seg_lo = std::max(bps[i], w_lo);
    const double seg_hi = std::min(i + 1 < bps.size() ? bps[i + 1] : pos_inf, w_hi);
    if (seg_hi <= seg_lo) continue;
    const double d = f(bps[i]) - g(bps[i]);
    if (d == 0.0) continue;
    if (seg_hi == pos_inf) return pos_inf;
    total += d * d * (seg_hi - seg_lo);
  }
  return total;
}

}  // namespace

GaugeBounds gauge_upper_bounds(const StepFunction& f, const StepFunction& g, double delta,
                               double k, double mu) {
  if (!(delta > 0.0)) throw argument_error("gauge_upper_bounds: delta must be positive");
  if (!(k > 0.0)) throw argument_error("gauge_upper_bounds: window half-width must be positive");
  GaugeBounds out;
  const double tail_mass = 1.0 - f(k + mu) + f(-k + mu);
  const double window_int = squared_gap_integral(f, g, -k + mu - delta, k + mu + 2.0 * delta);
  out.windowed = tail_mass + std::sqrt(window_int / delta);
  const double global_int = squared_gap_integral(f, g, neg_inf, pos_inf);
  out.global = std::isinf(global_int) ? pos_inf : std::sqrt(global_int / delta);
  return out;
}

bool check_quantile_inequality(const StepFunction& f, const StepFunction& g, double delta,
                               double alpha) {
  const double eps = levy_gauge(f, g, delta).epsilon;
  const extended_real q_lo = quantile(f, alpha - eps);
  const extended_real q = quantile(g, alpha);
  const extended_real q_hi = quantile(f, alpha + eps);
  // IEEE extended arithmetic: -inf - delta = -inf and +inf + delta = +inf.
  return q_lo - delta <= q && q <= q_hi + delta;
}

}  // namespace conformal
