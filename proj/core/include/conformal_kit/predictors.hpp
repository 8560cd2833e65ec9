#ifndef CONFORMAL_KIT_PREDICTORS_HPP
#define CONFORMAL_KIT_PREDICTORS_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>

#include "conformal_kit/random.hpp"
#include "conformal_kit/types.hpp"

namespace conformal {

enum class PredictorKind { ols, ridge, knn, constant_zero, mean_only, blackbox };

/** Fit-and-predict callback for user-supplied symmetric algorithms. */
using BlackboxFn = std::function<double(std::span<const double> x, const DataSet& training)>;

/**
 * Symmetric one-shot prediction algorithm: every predict() call fits the
 * algorithm on the given training set and evaluates at x.  Instances are
 * immutable apart from the refit ledger, an atomic counter shared by copies
 * that increments exactly once per training-set evaluation.
 *
 * ols and ridge fit with an intercept; ridge penalises the slopes only unless
 * constructed with penalize_intercept, and a singular system falls back to the
 * minimum-norm least-squares solution.  knn averages the k nearest responses
 * in Euclidean distance, breaking distance ties by lowest training index.
 */
class Predictor {
 public:
  static Predictor ols();
  static Predictor ridge(double lambda, bool penalize_intercept = false);
  static Predictor knn(int k);
  static Predictor constant_zero();
  static Predictor mean_only();
  static Predictor blackbox(BlackboxFn fn, std::string name = "blackbox",
                            bool affine_in_response = false);

  PredictorKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double lambda() const { return lambda_; }
  int k() const { return k_; }

  /** Whether the fitted prediction is an affine function of the response vector. */
  bool affine_in_response() const { return affine_in_response_; }

  std::uint64_t refit_count() const { return refits_->load(); }
  void reset_refit_count() const { refits_->store(0); }

 private:
  Predictor() : refits_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

  friend double predict(const Predictor& p, std::span<const double> x, const DataSet& training);

  PredictorKind kind_ = PredictorKind::constant_zero;
  std::string name_;
  double lambda_ = 0.0;
  bool penalize_intercept_ = false;
  int k_ = 1;
  bool affine_in_response_ = false;
  BlackboxFn fn_;
  std::shared_ptr<std::atomic<std::uint64_t>> refits_;
};

/** Fit p on the training set and predict at x, incrementing the refit ledger. */
double predict(const Predictor& p, std::span<const double> x, const DataSet& training);

/**
 * The augmented prediction y -> A(x_new, T + (y, x_new)) of an affine-in-
 * response predictor is y -> (1 - a) * y + b; equivalently the in-sample
 * absolute residual at the candidate is |y * a - b|.
 */
struct AffineCoefficients {
  double a = 0.0;
  double b = 0.0;
};

/**
 * Extract the affine pair by evaluating the augmented prediction at candidate
 * responses 0 and 1: b = A(x_new, T + (0, x_new)) and a = 1 - (A at 1 - A at 0).
 * Works for any predictor whose fit is exactly affine in the response vector;
 * other kinds raise unsupported_error.  Costs two refits.
 */
AffineCoefficients affine_coefficients(const Predictor& p, std::span<const double> x_new,
                                       const DataSet& training);

/**
 * Wrap a symmetric algorithm so that in-sample evaluation at a training
 * feature vector reproduces the base algorithm's leave-one-out behaviour:
 * at an x matching one or more training features the wrapper averages the
 * base predictions with each matching observation deleted; elsewhere it
 * defers to the base fit.  Feature matching is exact bitwise equality.
 */
Predictor make_in_sample_consistent(const Predictor& base);

/**
 * Companion wrapper in the other direction: at an x matching a training
 * feature the wrapper returns the base fit's prediction there; at a fresh x
 * it averages the base fit evaluated at every training feature vector.
 */
Predictor make_out_sample_consistent(const Predictor& base);

/**
 * Copy of the dataset with one extra feature coordinate holding a fresh
 * uniform draw per observation, making feature vectors unique almost surely.
 */
DataSet augment_unique_id(const DataSet& data, Rng& rng);

/** Matching augmentation for a single feature vector. */
std::vector<double> augment_unique_id(std::span<const double> x, Rng& rng);

struct InstabilitySummary {
  double mean_abs = 0.0;
  double q95 = 0.0;        // empirical 95th percentile of the absolute differences
  double exceed_frac = 0.0;  // fraction of draws exceeding the supplied threshold
};

/**
 * Monte Carlo summary of out-of-sample algorithmic stability: the distribution
 * of |A(x_new, T_n) - A(x_new, T_n minus its last point)| over fresh draws of
 * (T_n, x_new) from the sampler.  threshold feeds exceed_frac.
 */
InstabilitySummary estimate_oos_instability(
    const Predictor& p, const std::function<std::pair<DataSet, Observation>(Rng&)>& sampler,
    int reps, RngSeed seed, double threshold);

}  // namespace conformal

#endif  // CONFORMAL_KIT_PREDICTORS_HPP
