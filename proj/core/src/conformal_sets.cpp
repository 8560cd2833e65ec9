#include "conformal_kit/conformal_sets.hpp"

#include <algorithm>
#include <cmath>

#include "conformal_kit/levy_gauge.hpp"

namespace conformal {

namespace {

void check_alpha(double alpha) {
  if (std::isnan(alpha) || alpha < 0.0 || alpha > 1.0) {
    throw argument_error("alpha must lie in [0, 1]");
  }
}

void check_finite_delta(double delta) {
  if (!std::isfinite(delta)) throw argument_error("delta must be finite");
}

void check_nonneg_delta(double delta) {
  check_finite_delta(delta);
  if (delta < 0.0) throw argument_error("delta must be nonnegative for this set");
}

std::vector<double> to_vec(std::span<const double> x) {
  return std::vector<double>(x.begin(), x.end());
}

// Snap ranks that are within rounding noise of an integer before taking
// floor/ceil, so levels like 0.9 * (n + 1) resolve to the mathematical rank.
long rank_floor(double v) {
  const double r = std::nearbyint(v);
  if (std::abs(v - r) < 1e-9) return static_cast<long>(r);
  return static_cast<long>(std::floor(v));
}

long rank_ceil(double v) {
  const double r = std::nearbyint(v);
  if (std::abs(v - r) < 1e-9) return static_cast<long>(r);
  return static_cast<long>(std::ceil(v));
}

}  // namespace

std::vector<double> augmented_scores(const ConformityScore& c, const DataSet& training,
                                     std::span<const double> x_new, double y) {
  if (training.empty()) throw argument_error("augmented_scores: empty training set");
  const Observation cand{y, to_vec(x_new)};
  std::vector<double> out;
  out.reserve(training.size() + 1);
  out.push_back(c(cand, training));
  for (std::size_t i = 0; i < training.size(); ++i) {
    out.push_back(c(training[i], training.without(i).augmented(cand)));
  }
  return out;
}

StepFunction augmented_ecdf(const ConformityScore& c, const DataSet& training,
                            std::span<const double> x_new, double y) {
  return build_ecdf(augmented_scores(c, training, x_new, y));
}

AugmentedScorer::AugmentedScorer(const ConformityScore& c, const DataSet& training)
    : c_(c), training_(training), candidate_{0.0, std::vector<double>(training.dim(), 0.0)} {
  if (training.empty()) throw argument_error("AugmentedScorer: empty training set");
  scratch_.reserve(training.size());
  for (std::size_t i = 0; i < training.size(); ++i) {
    scratch_.push_back(training.without(i).augmented(candidate_));
  }
  buf_.resize(training.size() + 1);
  sorted_.resize(training.size() + 1);
}

std::span<const double> AugmentedScorer::scores(std::span<const double> x_new, double y) {
  const std::size_t n = training_.size();
  candidate_.y = y;
  candidate_.x.assign(x_new.begin(), x_new.end());
  buf_[0] = c_(candidate_, training_);
  for (std::size_t i = 0; i < n; ++i) {
    scratch_[i].set_observation(n - 1, y, x_new);
    buf_[i + 1] = c_(training_[i], scratch_[i]);
  }
  return buf_;
}

bool AugmentedScorer::contains(std::span<const double> x_new, double y, double alpha,
                               double delta) {
  check_alpha(alpha);
  check_nonneg_delta(delta);
  scores(x_new, y);
  sorted_ = buf_;
  std::sort(sorted_.begin(), sorted_.end());
  const double level = 1.0 - alpha;
  extended_real q;
  if (level <= 0.0) {
    q = neg_inf;
  } else {
    // Smallest k with k/m >= level, matching the ECDF quantile float for float.
    const std::size_t m = sorted_.size();
    std::size_t lo = 1;
    std::size_t hi = m + 1;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (static_cast<double>(mid) / static_cast<double>(m) >= level) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    q = lo == m + 1 ? pos_inf : sorted_[lo - 1];
  }
  return buf_[0] <= q + delta;
}

bool full_conformal_contains(const ConformityScore& c, const DataSet& training,
                             std::span<const double> x_new, double y, double alpha,
                             double delta) {
  check_alpha(alpha);
  check_nonneg_delta(delta);
  const auto scores = augmented_scores(c, training, x_new, y);
  const extended_real q = quantile(build_ecdf(scores), 1.0 - alpha);
  return scores[0] <= q + delta;
}

IntervalUnion full_conformal_set(const ConformityScore& c, const DataSet& training,
                                 std::span<const double> x_new, double alpha, double delta,
                                 const GridSpec& grid) {
  check_alpha(alpha);
  check_nonneg_delta(delta);
  grid.validate();
  if (training.empty()) throw argument_error("full_conformal_set: empty training set");
  const std::size_t n = training.size();

  // Sweep the candidate response through each handed-back leave-one-out set by
  // mutating the appended observation, instead of rebuilding n sets per point.
  Observation cand{0.0, to_vec(x_new)};
  std::vector<double> cand_scores(grid.points);
  std::vector<std::vector<double>> loo_scores_by_point(n,
                                                       std::vector<double>(grid.points));
  for (std::size_t i = 0; i < n; ++i) {
    DataSet scratch = training.without(i).augmented(cand);
    for (std::size_t j = 0; j < grid.points; ++j) {
      scratch.set_response(n - 1, grid.at(j));
      loo_scores_by_point[i][j] = c(training[i], scratch);
    }
  }
  for (std::size_t j = 0; j < grid.points; ++j) {
    cand.y = grid.at(j);
    cand_scores[j] = c(cand, training);
  }

  std::vector<char> member(grid.points);
  std::vector<double> buf(n + 1);
  for (std::size_t j = 0; j < grid.points; ++j) {
    buf[0] = cand_scores[j];
    for (std::size_t i = 0; i < n; ++i) buf[i + 1] = loo_scores_by_point[i][j];
    const extended_real q = quantile(build_ecdf(buf), 1.0 - alpha);
    member[j] = cand_scores[j] <= q + delta ? 1 : 0;
  }
  return interval_union_from_grid_flags(member, grid);
}

extended_real shortcut_threshold(const ConformityScore& c, const DataSet& training,
                                 double alpha) {
  check_alpha(alpha);
  return quantile(build_ecdf(loo_scores(c, training)), 1.0 - alpha);
}

bool shortcut_contains(const ConformityScore& c, const DataSet& training,
                       std::span<const double> x_new, double y, double alpha, double delta) {
  check_finite_delta(delta);
  const extended_real q = shortcut_threshold(c, training, alpha);
  return c({y, to_vec(x_new)}, training) <= q + delta;
}

IntervalUnion shortcut_set(const ConformityScore& c, const DataSet& training,
                           std::span<const double> x_new, double alpha, double delta,
                           const GridSpec& grid) {
  check_finite_delta(delta);
  grid.validate();
  const extended_real q = shortcut_threshold(c, training, alpha);
  Observation cand{0.0, to_vec(x_new)};
  std::vector<char> member(grid.points);
  for (std::size_t j = 0; j < grid.points; ++j) {
    cand.y = grid.at(j);
    member[j] = c(cand, training) <= q + delta ? 1 : 0;
  }
  return interval_union_from_grid_flags(member, grid);
}

IntervalUnion shortcut_affine(const AffineCoefficients& coeffs, extended_real q, double delta) {
  check_finite_delta(delta);
  if (std::isnan(q)) throw argument_error("shortcut_affine: quantile is NaN");
  const extended_real t = q + delta;
  if (t == pos_inf) return IntervalUnion::whole_line();
  if (t < 0.0) return IntervalUnion::empty();
  if (coeffs.a != 0.0) {
    double lo = (coeffs.b - t) / coeffs.a;
    double hi = (coeffs.b + t) / coeffs.a;
    if (lo > hi) std::swap(lo, hi);
    return IntervalUnion::single({lo, hi, true, true});
  }
  return std::abs(coeffs.b) <= t ? IntervalUnion::whole_line() : IntervalUnion::empty();
}

IntervalUnion shortcut_knn(int k, const DataSet& training, std::span<const double> x_new,
                           double alpha, double delta) {
  check_alpha(alpha);
  check_finite_delta(delta);
  const std::size_t n = training.size();
  if (k < 2 || static_cast<std::size_t>(k) > n) {
    throw argument_error("shortcut_knn: need 2 <= k <= n");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (features_equal(training[i].x, x_new)) {
      throw contract_error("shortcut_knn: x_new must differ from every training feature");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      if (features_equal(training[i].x, training[j].x)) {
        throw contract_error("shortcut_knn: training features must be pairwise distinct");
      }
    }
  }
  const auto score = ConformityScore::in_sample(Predictor::knn(k));
  const extended_real q = shortcut_threshold(score, training, alpha);
  const extended_real t = q + delta;
  if (t == pos_inf) return IntervalUnion::whole_line();
  if (t < 0.0) return IntervalUnion::empty();
  const double center = predict(Predictor::knn(k - 1), x_new, training);
  const double half = static_cast<double>(k) / static_cast<double>(k - 1) * t;
  return IntervalUnion::single({center - half, center + half, true, true});
}

namespace {

// Core loops shared by the public search operations and the unimodal driver;
// entry preconditions are the caller's responsibility here.
template <class Eval>
BisectionBracket bisect_core(Eval&& eval, double b, double l, double u, double eps) {
  while (std::abs(l - u) > eps) {
    const double m = (l + u) / 2.0;
    if (m == l || m == u) break;
    if (eval(m) > b) {
      u = m;
    } else {
      l = m;
    }
  }
  return {l, u};
}

struct GoldenState {
  double m = 0.0;
  double big_m = 0.0;
  double score_at_m = 0.0;
};

template <class Eval>
GoldenState golden_core(Eval&& eval, double L, double U, double eps) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c_lo = eval(L);
  double c_hi = eval(U);
  double s = L + (1.0 - g) * (U - L);
  double t = L + g * (U - L);
  double c_s = eval(s);
  double c_t = eval(t);
  while (U - L > eps) {
    if (c_s > c_t) {
      L = s;
      c_lo = c_s;
      s = t;
      c_s = c_t;
      t = L + g * (U - L);
      c_t = eval(t);
    } else {
      U = t;
      c_hi = c_t;
      t = s;
      c_t = c_s;
      s = L + (1.0 - g) * (U - L);
      c_s = eval(s);
    }
    if (!(s > L && t < U && s < t)) break;  // floating-point degeneracy guard
  }
  if (c_lo < c_hi) return {L, U, c_lo};
  return {U, L, c_hi};
}

}  // namespace

BisectionBracket bisection(const ConformityScore& c, const DataSet& training,
                           std::span<const double> x_new, double b, double L, double U,
                           double eps) {
  if (!(eps > 0.0)) throw argument_error("bisection: eps must be positive");
  if (std::isnan(b) || !std::isfinite(L) || !std::isfinite(U)) {
    throw argument_error("bisection: level and bracket must be finite");
  }
  if (std::abs(L - U) <= eps) return {L, U};
  Observation cand{0.0, to_vec(x_new)};
  const auto eval = [&](double y) {
    cand.y = y;
    return c(cand, training);
  };
  const double c_l = eval(L);
  const double c_u = eval(U);
  if (!(c_u > b && b >= c_l)) {
    throw contract_error("bisection: need score(U) > level >= score(L) at entry");
  }
  return bisect_core(eval, b, L, U, eps);
}

MinimizerBracket golden_minimizer(const ConformityScore& c, const DataSet& training,
                                  std::span<const double> x_new, double L, double U,
                                  double eps) {
  if (!(eps > 0.0)) throw argument_error("golden_minimizer: eps must be positive");
  if (!(L < U) || !std::isfinite(L) || !std::isfinite(U)) {
    throw argument_error("golden_minimizer: need finite L < U");
  }
  Observation cand{0.0, to_vec(x_new)};
  const auto eval = [&](double y) {
    cand.y = y;
    return c(cand, training);
  };
  const GoldenState state = golden_core(eval, L, U, eps);
  return {state.m, state.big_m};
}

UnimodalRunReport shortcut_unimodal(const ConformityScore& c, const DataSet& training,
                                    std::span<const double> x_new, double alpha, double delta,
                                    int k_exponent, double eps) {
  check_alpha(alpha);
  check_finite_delta(delta);
  if (k_exponent < 1 || k_exponent > 60) {
    throw argument_error("shortcut_unimodal: window exponent must lie in [1, 60]");
  }
  const double r = std::ldexp(1.0, k_exponent);  // 2^K, exact
  if (!(eps > 0.0) || eps > r) {
    throw argument_error("shortcut_unimodal: need 0 < eps <= 2^K");
  }
  if (!c.unimodal_hint()) {
    throw contract_error("shortcut_unimodal: score is not declared unimodal in the response");
  }

  std::uint64_t evals = 0;
  Observation cand{0.0, to_vec(x_new)};
  const auto eval = [&](double y) {
    ++evals;
    cand.y = y;
    return c(cand, training);
  };

  const extended_real b = shortcut_threshold(c, training, alpha) + delta;
  const double c1 = eval(-r);
  const double c2 = eval(r);

  IntervalUnion out;
  if (std::max(c1, c2) <= b) {
    out = IntervalUnion::whole_line();
  } else if (c1 <= b) {
    // Level crossing on the right flank only: the set extends to -infinity.
    const auto br = bisect_core(eval, b, -r, r, eps);
    out = IntervalUnion::single({neg_inf, br.u, false, true});
  } else if (c2 <= b) {
    const auto br = bisect_core(eval, b, r, -r, eps);
    out = IntervalUnion::single({br.u, pos_inf, true, false});
  } else {
    const GoldenState min_state = golden_core(eval, -r, r, eps);
    const double m = min_state.m;
    const double big_m = min_state.big_m;
    if (m == -r) {
      out = IntervalUnion::single({neg_inf, -r + eps, false, false});
    } else if (m == r) {
      out = IntervalUnion::single({r - eps, pos_inf, false, false});
    } else if (min_state.score_at_m > b) {
      out = IntervalUnion::single({std::min(m, big_m), std::max(m, big_m), false, false});
    } else {
      const auto left = bisect_core(eval, b, m, -r, eps);
      const auto right = bisect_core(eval, b, m, r, eps);
      out = IntervalUnion::single({left.u, right.u, true, true});
    }
  }

  UnimodalRunReport report;
  report.interval = std::move(out);
  report.refits = 1 + evals;  // one fit inventory for the threshold, then the search
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double x = static_cast<double>(k_exponent) + 1.0 + std::log2(1.0 / eps);
  report.refit_bound =
      static_cast<std::uint64_t>(std::floor(10.0 + x * (2.0 + 1.0 / std::log2(phi))));
  report.epsilon = eps;
  report.k_exponent = k_exponent;
  return report;
}

namespace {

struct LooContext {
  std::vector<DataSet> sets;
  std::vector<double> refs;  // score of each training point against its deleted set
};

LooContext make_loo_context(const ConformityScore& c, const DataSet& training) {
  if (training.size() < 2) throw argument_error("need at least two observations");
  LooContext ctx;
  const std::size_t n = training.size();
  ctx.sets.reserve(n);
  ctx.refs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ctx.sets.push_back(training.without(i));
    ctx.refs.push_back(c(training[i], ctx.sets.back()));
  }
  return ctx;
}

}  // namespace

bool cross_conformal_contains(const ConformityScore& c, const DataSet& training,
                              std::span<const double> x_new, double y, double alpha,
                              double delta) {
  check_alpha(alpha);
  check_finite_delta(delta);
  const LooContext ctx = make_loo_context(c, training);
  const std::size_t n = training.size();
  const Observation cand{y, to_vec(x_new)};
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (c(cand, ctx.sets[i]) <= ctx.refs[i] + delta) ++hits;
  }
  return static_cast<double>(1 + hits) > alpha * static_cast<double>(n + 1);
}

IntervalUnion cross_conformal_set(const ConformityScore& c, const DataSet& training,
                                  std::span<const double> x_new, double alpha, double delta,
                                  const GridSpec& grid) {
  check_alpha(alpha);
  check_nonneg_delta(delta);
  grid.validate();
  const LooContext ctx = make_loo_context(c, training);
  const std::size_t n = training.size();
  const double level = alpha * static_cast<double>(n + 1);
  Observation cand{0.0, to_vec(x_new)};
  std::vector<char> member(grid.points);
  for (std::size_t j = 0; j < grid.points; ++j) {
    cand.y = grid.at(j);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (c(cand, ctx.sets[i]) <= ctx.refs[i] + delta) ++hits;
    }
    member[j] = static_cast<double>(1 + hits) > level ? 1 : 0;
  }
  return interval_union_from_grid_flags(member, grid);
}

namespace {

struct LooResiduals {
  std::vector<double> abs_residuals;   // |y_i - A(x_i, T minus i)|
  std::vector<double> loo_predictions;  // A(x_new, T minus i)
};

LooResiduals loo_residuals(const Predictor& p, const DataSet& training,
                           std::span<const double> x_new, bool with_predictions) {
  if (training.size() < 2) throw argument_error("need at least two observations");
  LooResiduals out;
  const std::size_t n = training.size();
  out.abs_residuals.reserve(n);
  if (with_predictions) out.loo_predictions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const DataSet rest = training.without(i);
    out.abs_residuals.push_back(std::abs(training[i].y - predict(p, training[i].x, rest)));
    if (with_predictions) out.loo_predictions.push_back(predict(p, x_new, rest));
  }
  return out;
}

}  // namespace

IntervalUnion jackknife_symmetric(const Predictor& p, const DataSet& training,
                                  std::span<const double> x_new, double alpha, double delta) {
  check_alpha(alpha);
  check_finite_delta(delta);
  const LooResiduals loo = loo_residuals(p, training, x_new, false);
  const extended_real q = quantile(build_ecdf(loo.abs_residuals), 1.0 - alpha);
  const extended_real t = q + delta;
  if (t == pos_inf) return IntervalUnion::whole_line();
  if (t < 0.0) return IntervalUnion::empty();
  const double center = predict(p, x_new, training);
  return IntervalUnion::single({center - t, center + t, true, true});
}

IntervalUnion jackknife_plus_symmetric(const Predictor& p, const DataSet& training,
                                       std::span<const double> x_new, double alpha,
                                       double delta) {
  check_alpha(alpha);
  check_finite_delta(delta);
  const LooResiduals loo = loo_residuals(p, training, x_new, true);
  const std::size_t n = training.size();
  std::vector<double> lowers(n), uppers(n);
  for (std::size_t i = 0; i < n; ++i) {
    lowers[i] = loo.loo_predictions[i] - loo.abs_residuals[i];
    uppers[i] = loo.loo_predictions[i] + loo.abs_residuals[i];
  }
  std::sort(lowers.begin(), lowers.end());
  std::sort(uppers.begin(), uppers.end());
  const long k_lo = rank_floor(alpha * static_cast<double>(n + 1));
  const long k_up = rank_ceil((1.0 - alpha) * static_cast<double>(n + 1));
  extended_real lower = neg_inf;
  if (k_lo >= 1) {
    lower = k_lo <= static_cast<long>(n) ? lowers[static_cast<std::size_t>(k_lo - 1)] : pos_inf;
  }
  extended_real upper = pos_inf;
  if (k_up <= static_cast<long>(n)) {
    upper = k_up >= 1 ? uppers[static_cast<std::size_t>(k_up - 1)] : neg_inf;
  }
  const extended_real lo = lower - delta;
  const extended_real hi = upper + delta;
  if (lo > hi || (lo == neg_inf && hi == neg_inf) || (lo == pos_inf && hi == pos_inf)) {
    return IntervalUnion::empty();
  }
  return IntervalUnion::single({lo, hi, std::isfinite(lo), std::isfinite(hi)});
}

bool check_gauge_hat_bound(const ConformityScore& c, const DataSet& training,
                           std::span<const double> x_new, double y, double delta) {
  check_nonneg_delta(delta);
  const std::size_t n = training.size();
  const auto aug = augmented_scores(c, training, x_new, y);
  const auto loo = loo_scores(c, training);
  const double lhs = levy_gauge(build_ecdf(aug), build_ecdf(loo), delta).epsilon;
  std::size_t moved = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(aug[i + 1] - loo[i]) > delta) ++moved;
  }
  const double rhs = (1.0 + static_cast<double>(moved)) / static_cast<double>(n + 1);
  return lhs <= rhs + 1e-12;
}

bool check_sandwich(const ConformityScore& c, const DataSet& training,
                    std::span<const double> x_new, double alpha, double eps, double delta1,
                    double delta2, const GridSpec& grid) {
  check_alpha(alpha);
  if (!(eps > 0.0)) throw argument_error("check_sandwich: eps must be positive");
  if (!(delta2 > 0.0)) throw argument_error("check_sandwich: delta2 must be positive");
  check_finite_delta(delta1);
  grid.validate();
  const LooContext ctx = make_loo_context(c, training);
  const std::size_t n = training.size();
  const StepFunction ref_ecdf = build_ecdf(ctx.refs);
  const extended_real q_tight = quantile(ref_ecdf, 1.0 - (alpha + eps));
  const extended_real q_loose = quantile(ref_ecdf, 1.0 - alpha);
  const double cc_tight_level = (alpha + eps) * static_cast<double>(n + 1);
  const double cc_loose_level = alpha * static_cast<double>(n + 1);
  const double unstable_level = static_cast<double>(n) * eps - 1.0;

  Observation cand{0.0, to_vec(x_new)};
  std::vector<double> fold_scores(n);
  for (std::size_t j = 0; j < grid.points; ++j) {
    cand.y = grid.at(j);
    const double s0 = c(cand, training);
    for (std::size_t i = 0; i < n; ++i) fold_scores[i] = c(cand, ctx.sets[i]);

    std::size_t hits_tight = 0, hits_loose = 0, moved = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_scores[i] <= ctx.refs[i] + delta1) ++hits_tight;
      if (fold_scores[i] <= ctx.refs[i] + delta1 + delta2) ++hits_loose;
      if (std::abs(s0 - fold_scores[i]) >= delta2) ++moved;
    }
    const bool cc_tight = static_cast<double>(1 + hits_tight) > cc_tight_level;
    const bool cc_loose = static_cast<double>(1 + hits_loose) > cc_loose_level;
    const bool sc_tight = s0 <= q_tight + delta1;
    const bool sc_loose = s0 <= q_loose + delta1 + delta2;
    const bool unstable = static_cast<double>(moved) > unstable_level;

    if (cc_tight && !(sc_loose || unstable)) return false;
    if (sc_tight && !(cc_loose || unstable)) return false;
  }
  return true;
}

}  // namespace conformal
