#ifndef CONFORMAL_KIT_SCORES_HPP
#define CONFORMAL_KIT_SCORES_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "conformal_kit/predictors.hpp"
#include "conformal_kit/types.hpp"

namespace conformal {

enum class ScoreKind { in_sample, out_sample, custom };

/** User-defined conformity score; must be nonnegative and symmetric in the training set. */
using CustomScoreFn = std::function<double(const Observation&, const DataSet&)>;

/**
 * Conformity score of a candidate observation against a training set.
 *
 * in_sample scores the candidate by its absolute residual under the predictor
 * fitted on the training set with the candidate appended; out_sample fits on
 * the training set alone.  Lower scores mean more conforming.
 */
class ConformityScore {
 public:
  static ConformityScore in_sample(Predictor p);
  static ConformityScore out_sample(Predictor p);
  static ConformityScore custom(CustomScoreFn fn, std::string name, bool unimodal_hint = false);

  ScoreKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  /** The backing predictor; custom scores have none. */
  const Predictor& predictor() const;

  /** Whether the score is declared unimodal in the candidate response. */
  bool unimodal_hint() const { return unimodal_hint_; }

  double operator()(const Observation& candidate, const DataSet& training) const;

 private:
  ConformityScore() = default;

  ScoreKind kind_ = ScoreKind::custom;
  std::string name_;
  bool unimodal_hint_ = false;
  std::vector<Predictor> pred_;  // empty for custom scores
  CustomScoreFn fn_;
};

inline double score(const ConformityScore& c, const Observation& candidate,
                    const DataSet& training) {
  return c(candidate, training);
}

/**
 * Leave-one-out scores (C(t_i, T minus t_i))_{i=1..n}; needs n >= 2 so every
 * deleted set is still a valid training set.
 */
std::vector<double> loo_scores(const ConformityScore& c, const DataSet& training);

/** Parse "mean", "zero", "ols", "ridge:<lambda>", or "knn:<k>"; throws config_error. */
Predictor parse_predictor_spec(const std::string& spec);

/**
 * Parse "<in-sample|out-sample>:<predictor spec>", e.g. "out-sample:mean" or
 * "in-sample:ridge:1.0"; throws config_error on malformed input.
 */
ConformityScore parse_score_spec(const std::string& spec);

enum class StabilityForm {
  deletion,  // |C(t_new, T_n) - C(t_new, T_n minus its last point)|
  swap,      // |C(t_new, T_n) - C(t_new, T_n with its first point replaced)|
};

struct ScoreInstabilitySummary {
  double mean_abs = 0.0;
  double q95 = 0.0;
  double exceed_frac = 0.0;  // fraction of draws with difference > threshold
};

/**
 * Monte Carlo summary of score stability under one-point perturbation of the
 * training set, for fresh draws (T_n, t_new) from the sampler; the swap form
 * draws the replacement point independently from the same sampler.
 */
ScoreInstabilitySummary estimate_score_instability(
    const ConformityScore& c,
    const std::function<std::pair<DataSet, Observation>(Rng&)>& sampler, int reps, RngSeed seed,
    double threshold, StabilityForm form);

}  // namespace conformal

#endif  // CONFORMAL_KIT_SCORES_HPP
