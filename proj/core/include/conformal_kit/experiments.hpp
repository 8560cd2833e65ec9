#ifndef CONFORMAL_KIT_EXPERIMENTS_HPP
#define CONFORMAL_KIT_EXPERIMENTS_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "conformal_kit/generators.hpp"
#include "conformal_kit/random.hpp"
#include "conformal_kit/types.hpp"

namespace conformal {

enum class Method { full, shortcut, cross, jackknife, jackknife_plus };

/** Parse "full", "shortcut", "cross", "jackknife", or "jackknife-plus". */
Method parse_method(const std::string& name);
std::string method_name(Method m);

/** One labelled row of ordered numeric statistics. */
struct ReportRow {
  std::string label;
  std::vector<std::pair<std::string, double>> stats;

  double at(const std::string& key) const;
};

/**
 * Outcome of one experiment run: the echoed configuration, one row per
 * reported cell, and the pass flag when the experiment carries an acceptance
 * criterion.  wall_seconds is informational only and never serialised, so
 * reports are byte-identical across machines and thread counts.
 */
struct ExperimentReport {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<ReportRow> rows;
  bool has_pass_criterion = false;
  bool pass = true;
  double wall_seconds = 0.0;

  const ReportRow& row(const std::string& label) const;
};

/**
 * Marginal coverage of one set-valued method over fresh draws: each rep draws
 * (T, t_new) and tests membership of the true response.  Carries a pass
 * criterion only for the full conformal method with nonnegative slack, whose
 * coverage must reach 1 - alpha minus three binomial standard errors.
 */
struct MarginalCoverageConfig {
  Method method = Method::full;
  GeneratorSpec gen;
  std::string score = "out-sample:mean";
  double alpha = 0.1;
  double delta = 0.0;
  int reps = 2000;
};

ExperimentReport run_marginal_coverage(const MarginalCoverageConfig& cfg, RngSeed seed);

/**
 * Conditional coverage: outer reps draw the training set, inner reps estimate
 * P(miss | T) by fresh test draws.  Reports the distribution of conditional
 * miscoverage per training-set size and the fraction of training sets whose
 * miscoverage exceeds alpha + 0.02 and alpha + 0.05.
 */
struct ConditionalCoverageConfig {
  Method method = Method::shortcut;
  GeneratorSpec gen;
  std::vector<std::size_t> n_values;  // empty: use gen.n
  std::string score = "out-sample:mean";
  double alpha = 0.1;
  double delta = 0.0;
  int outer_reps = 300;
  int inner_reps = 300;
};

ExperimentReport run_conditional_coverage(const ConditionalCoverageConfig& cfg, RngSeed seed);

/**
 * Set-agreement sweep on the bounded family: per training-set size, the mean
 * grid measure of the symmetric difference between full conformal and the
 * shortcut, full conformal and cross-conformal, and the shortcut and the
 * symmetric jackknife, plus the directed part of the full conformal set left
 * uncovered by the shortcut run at level alpha - eps and slack delta2.
 */
struct EquivalenceConfig {
  GeneratorSpec gen;  // must be the bounded family
  std::vector<std::size_t> n_values = {20, 50, 100, 200};
  std::string score = "out-sample:mean";
  double alpha = 0.1;
  double delta1 = 0.0;
  double delta2 = 0.05;
  double eps = 0.05;
  int reps = 200;
  std::size_t grid_points = 1201;
};

ExperimentReport run_equivalence(const EquivalenceConfig& cfg, RngSeed seed);

/**
 * Finite-sample conditional-coverage bound: the Monte Carlo probability that
 * the conditional miscoverage of the slack-delta full conformal set exceeds
 * its nominal level by eps1 + eps2 somewhere on the alpha grid, compared
 * against the stability bound
 *   3 E|C(t, T) - C(t, T^swap)| / (delta eps1^2 eps2)
 *     + E|C(t, T)| / ((n + 1) delta eps1^2 eps2)
 * and its truncated variant.  Passes when the probability is at most the
 * bound plus three combined standard errors.
 */
struct FiniteSampleBoundConfig {
  GeneratorSpec gen;
  std::string score = "out-sample:mean";
  std::vector<double> alpha_grid;  // empty: 0.01, 0.02, ..., 0.99
  double delta = 0.2;
  double eps1 = 0.1;
  double eps2 = 0.1;
  int outer_reps = 300;
  int inner_reps = 300;
  int stability_reps = 2000;
  double truncation_k = 4.0;
};

ExperimentReport run_finite_sample_bound(const FiniteSampleBoundConfig& cfg, RngSeed seed);

/**
 * Derivative-free search audit on random unimodal score instances: per
 * (window exponent, resolution) cell, the worst refit count against the a
 * priori bound, exact-set containment violations, and measured excess beyond
 * 2 * eps.  Instances cycle through an affine in-sample score, an asymmetric
 * V-shaped score, and a shifted parabola, with occasional centres pushed to
 * the window edge.  Passes when every cell is violation-free within bound.
 */
struct RefitBenchmarkConfig {
  GeneratorSpec gen;
  double alpha = 0.1;
  double delta = 0.0;
  std::vector<double> eps_values = {0.0625, 0.00390625, 0.000244140625};
  std::vector<int> k_exponents = {4, 8, 10};
  int reps_per_cell = 40;
};

ExperimentReport run_refit_benchmark(const RefitBenchmarkConfig& cfg, RngSeed seed);

struct LemmaSuiteResult {
  std::string name;
  int reps = 0;
  int failures = 0;
};

/**
 * Deterministic zero-tolerance checks of the library's structural identities
 * on randomised instances: the gauge-to-hat-CDF bound, the cross-conformal /
 * shortcut sandwich, gauge symmetry, monotonicity, triangle inequality,
 * metric squeeze, scaling, the quantile inequality, and dominance by both
 * computable upper bounds.
 */
std::vector<LemmaSuiteResult> run_lemma_suites(int reps, RngSeed seed);

}  // namespace conformal

#endif  // CONFORMAL_KIT_EXPERIMENTS_HPP
