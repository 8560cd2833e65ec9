#ifndef CONFORMAL_KIT_CONFORMAL_SETS_HPP
#define CONFORMAL_KIT_CONFORMAL_SETS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "conformal_kit/interval_union.hpp"
#include "conformal_kit/scores.hpp"
#include "conformal_kit/step_function.hpp"
#include "conformal_kit/types.hpp"

namespace conformal {

/**
 * Scores entering the randomisation CDF at candidate response y: element 0 is
 * the candidate's score against the training set, element i >= 1 the score of
 * training point i against the augmented set with that point handed back.
 * Costs n + 1 score evaluations.
 */
std::vector<double> augmented_scores(const ConformityScore& c, const DataSet& training,
                                     std::span<const double> x_new, double y);

/** Empirical CDF of the n + 1 augmented scores (ties stacked). */
StepFunction augmented_ecdf(const ConformityScore& c, const DataSet& training,
                            std::span<const double> x_new, double y);

/**
 * Reusable augmented-score evaluator for a fixed training set.  Construction
 * builds the n leave-one-out scratch sets once; each scores() call then costs
 * n + 1 score evaluations and no allocation, which makes per-candidate
 * membership affordable inside Monte Carlo loops.
 */
class AugmentedScorer {
 public:
  AugmentedScorer(const ConformityScore& c, const DataSet& training);

  /** Same contents as augmented_scores(); the returned view is invalidated by the next call. */
  std::span<const double> scores(std::span<const double> x_new, double y);

  /** Membership of y in the full conformal set, reusing the scratch sets. */
  bool contains(std::span<const double> x_new, double y, double alpha, double delta);

 private:
  const ConformityScore& c_;
  const DataSet& training_;
  std::vector<DataSet> scratch_;
  Observation candidate_;
  std::vector<double> buf_;
  std::vector<double> sorted_;
};

/**
 * Exact membership test of y in the full conformal set at miscoverage alpha
 * and slack delta: the candidate's score is compared against the 1 - alpha
 * quantile of the augmented-score CDF plus delta.  Infinite thresholds follow
 * extended-real comparison (everything below +inf, nothing below -inf).
 */
bool full_conformal_contains(const ConformityScore& c, const DataSet& training,
                             std::span<const double> x_new, double y, double alpha, double delta);

/** Grid realisation of the full conformal set; (n + 1) * grid.points score evaluations. */
IntervalUnion full_conformal_set(const ConformityScore& c, const DataSet& training,
                                 std::span<const double> x_new, double alpha, double delta,
                                 const GridSpec& grid);

/** The fixed shortcut threshold: 1 - alpha quantile of the leave-one-out score ECDF. */
extended_real shortcut_threshold(const ConformityScore& c, const DataSet& training, double alpha);

/** Membership test of y in the shortcut set; delta may be any real. */
bool shortcut_contains(const ConformityScore& c, const DataSet& training,
                       std::span<const double> x_new, double y, double alpha, double delta);

/** Grid realisation of the shortcut set (threshold computed once, one evaluation per point). */
IntervalUnion shortcut_set(const ConformityScore& c, const DataSet& training,
                           std::span<const double> x_new, double alpha, double delta,
                           const GridSpec& grid);

/**
 * Closed-form shortcut set for a score of the form |y * a - b|: an interval
 * with endpoints (b -+ (q + delta)) / a for a != 0 (empty when q + delta < 0,
 * the whole line when q = +inf), and all-or-nothing for a = 0.
 */
IntervalUnion shortcut_affine(const AffineCoefficients& coeffs, extended_real q, double delta);

/**
 * Closed-form shortcut set for the in-sample k-nearest-neighbour score with
 * 2 <= k <= n and pairwise distinct training features: the interval centred at
 * the (k-1)-nearest-neighbour prediction with half-width k/(k-1) times the
 * threshold.  Costs one pass over the training set per leave-one-out score.
 */
IntervalUnion shortcut_knn(int k, const DataSet& training, std::span<const double> x_new,
                           double alpha, double delta);

/** Bracket returned by bisection: score(l) <= b < score(u), |l - u| <= eps. */
struct BisectionBracket {
  double l = 0.0;
  double u = 0.0;
};

/**
 * Level-crossing search for the candidate-score profile y -> C((y, x_new), T):
 * requires score(U) > b >= score(L) at entry (checked, two evaluations, unless
 * |L - U| <= eps in which case it returns immediately with no evaluation).
 * L need not be below U.  Runs at most ceil(log2(|L - U| / eps)) iterations,
 * one score evaluation each.
 */
BisectionBracket bisection(const ConformityScore& c, const DataSet& training,
                           std::span<const double> x_new, double b, double L, double U,
                           double eps);

/** Bracket returned by the golden-section search; score(m) <= score(M), |m - M| <= eps. */
struct MinimizerBracket {
  double m = 0.0;
  double M = 0.0;
};

/**
 * Golden-section minimiser of the candidate-score profile over [L, U] for a
 * strictly unimodal profile: four initial evaluations, then one per iteration,
 * shrinking the bracket by the golden ratio until its width is at most eps.
 */
MinimizerBracket golden_minimizer(const ConformityScore& c, const DataSet& training,
                                  std::span<const double> x_new, double L, double U, double eps);

struct UnimodalRunReport {
  IntervalUnion interval;      // superset of the shortcut set
  std::uint64_t refits = 0;    // score evaluations spent, plus one for the threshold
  std::uint64_t refit_bound = 0;
  double epsilon = 0.0;
  int k_exponent = 0;
};

/**
 * Derivative-free shortcut set search for scores unimodal in the candidate
 * response, over the window [-2^K, 2^K] with resolution eps in (0, 2^K]:
 * classifies the window endpoints against the threshold, then combines
 * golden-section minimisation with bisection on each flank.  The returned
 * interval always contains the shortcut set, exceeds it by at most 2 * eps in
 * measure when that set lies inside [-2^K + eps, 2^K - eps], and spends at
 * most floor(10 + (K + 1 + log2(1/eps)) * (2 + 1/log2(golden ratio))) refits.
 */
UnimodalRunReport shortcut_unimodal(const ConformityScore& c, const DataSet& training,
                                    std::span<const double> x_new, double alpha, double delta,
                                    int k_exponent, double eps);

/**
 * Membership test of y in the cross-conformal set: one plus the number of
 * leave-one-out folds whose candidate score is within delta of the fold's own
 * score must exceed alpha * (n + 1).
 */
bool cross_conformal_contains(const ConformityScore& c, const DataSet& training,
                              std::span<const double> x_new, double y, double alpha,
                              double delta);

/** Grid realisation of the cross-conformal set; requires delta >= 0. */
IntervalUnion cross_conformal_set(const ConformityScore& c, const DataSet& training,
                                  std::span<const double> x_new, double alpha, double delta,
                                  const GridSpec& grid);

/**
 * Symmetric jackknife interval: prediction at x_new plus/minus the 1 - alpha
 * quantile of the absolute leave-one-out residual ECDF, inflated by delta.
 * Coincides with the shortcut set of the out-of-sample score of p.
 */
IntervalUnion jackknife_symmetric(const Predictor& p, const DataSet& training,
                                  std::span<const double> x_new, double alpha, double delta);

/**
 * Symmetrised jackknife+ interval from order statistics of the leave-one-out
 * predictions shifted by the absolute leave-one-out residuals: the lower end
 * is the floor(alpha * (n+1))-th smallest of A_{-i} - |r_i| and the upper end
 * the ceil((1-alpha) * (n+1))-th smallest of A_{-i} + |r_i|, then inflated by
 * delta.  Out-of-range ranks yield infinite endpoints.
 */
IntervalUnion jackknife_plus_symmetric(const Predictor& p, const DataSet& training,
                                       std::span<const double> x_new, double alpha, double delta);

/**
 * Deterministic per-realisation check that the Levy gauge between the
 * augmented-score CDF at candidate y and the leave-one-out score ECDF is at
 * most (1 + #{i : |augmented LOO score i - LOO score i| > delta}) / (n + 1).
 */
bool check_gauge_hat_bound(const ConformityScore& c, const DataSet& training,
                           std::span<const double> x_new, double y, double delta);

/**
 * Deterministic per-realisation sandwich check on the grid: each of the
 * cross-conformal and shortcut sets at level alpha + eps and slack delta1 is
 * contained in the other at level alpha and slack delta1 + delta2, up to the
 * instability set {y : #{i : |C((y,x),T) - C((y,x),T minus i)| >= delta2} >
 * n * eps - 1}.
 */
bool check_sandwich(const ConformityScore& c, const DataSet& training,
                    std::span<const double> x_new, double alpha, double eps, double delta1,
                    double delta2, const GridSpec& grid);

}  // namespace conformal

#endif  // CONFORMAL_KIT_CONFORMAL_SETS_HPP
