#include "conformal_kit/predictors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "conformal_kit/step_function.hpp"

namespace conformal {

Predictor Predictor::ols() {
  Predictor p;
  p.kind_ = PredictorKind::ols;
  p.name_ = "ols";
  p.affine_in_response_ = true;
  return p;
}

Predictor Predictor::ridge(double lambda, bool penalize_intercept) {
  if (!(lambda >= 0.0)) throw argument_error("Predictor::ridge: lambda must be >= 0");
  Predictor p;
  p.kind_ = PredictorKind::ridge;
  p.name_ = "ridge";
  p.lambda_ = lambda;
  p.penalize_intercept_ = penalize_intercept;
  p.affine_in_response_ = true;
  return p;
}

Predictor Predictor::knn(int k) {
  if (k < 1) throw argument_error("Predictor::knn: k must be >= 1");
  Predictor p;
  p.kind_ = PredictorKind::knn;
  p.name_ = "knn";
  p.k_ = k;
  return p;
}

Predictor Predictor::constant_zero() {
  Predictor p;
  p.kind_ = PredictorKind::constant_zero;
  p.name_ = "constant_zero";
  p.affine_in_response_ = true;
  return p;
}

Predictor Predictor::mean_only() {
  Predictor p;
  p.kind_ = PredictorKind::mean_only;
  p.name_ = "mean_only";
  p.affine_in_response_ = true;
  return p;
}

Predictor Predictor::blackbox(BlackboxFn fn, std::string name, bool affine_in_response) {
  if (!fn) throw argument_error("Predictor::blackbox: callback must be callable");
  Predictor p;
  p.kind_ = PredictorKind::blackbox;
  p.name_ = std::move(name);
  p.fn_ = std::move(fn);
  p.affine_in_response_ = affine_in_response;
  return p;
}

namespace {

double fit_linear(std::span<const double> x, const DataSet& training, double lambda,
                  bool penalize_intercept) {
  const auto n = static_cast<Eigen::Index>(training.size());
  const auto p = static_cast<Eigen::Index>(training.dim());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& obs = training[static_cast<std::size_t>(i)];
    y(i) = obs.y;
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = obs.x[static_cast<std::size_t>(j)];
  }
  Eigen::VectorXd xq(p);
  for (Eigen::Index j = 0; j < p; ++j) xq(j) = x[static_cast<std::size_t>(j)];

  if (lambda > 0.0 && penalize_intercept) {
    // Ridge on the full design including the intercept column.
    Eigen::MatrixXd D(n, p + 1);
    D.col(0).setOnes();
    D.rightCols(p) = X;
    Eigen::MatrixXd G = D.transpose() * D;
    G.diagonal().array() += lambda;
    const Eigen::VectorXd beta = G.ldlt().solve(D.transpose() * y);
    return beta(0) + xq.dot(beta.tail(p));
  }
  if (lambda > 0.0) {
    // Intercept left unpenalised: ridge on centred features and responses.
    const Eigen::RowVectorXd x_mean = X.colwise().mean();
    const double y_mean = y.mean();
    const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;
    Eigen::MatrixXd G = Xc.transpose() * Xc;
    G.diagonal().array() += lambda;
    const Eigen::VectorXd beta = G.ldlt().solve(Xc.transpose() * yc);
    return y_mean + (xq - x_mean.transpose()).dot(beta);
  }
  // Least squares on [1, X]; rank deficiency resolves to the minimum-norm solution.
  Eigen::MatrixXd D(n, p + 1);
  D.col(0).setOnes();
  D.rightCols(p) = X;
  const Eigen::VectorXd beta = D.completeOrthogonalDecomposition().solve(y);
  return beta(0) + xq.dot(beta.tail(p));
}

double fit_knn(std::span<const double> x, const DataSet& training, int k) {
  const std::size_t n = training.size();
  if (static_cast<std::size_t>(k) > n) {
    throw argument_error("knn predict: k exceeds training size");
  }
  std::vector<std::pair<double, std::size_t>> by_dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& xi = training[i].x;
    double d2 = 0.0;
    for (std::size_t j = 0; j < xi.size(); ++j) {
      const double diff = xi[j] - x[j];
      d2 += diff * diff;
    }
    by_dist[i] = {d2, i};
  }
  // Lexicographic order makes distance ties resolve to the lowest index.
  std::partial_sort(by_dist.begin(), by_dist.begin() + k, by_dist.end());
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += training[by_dist[static_cast<std::size_t>(i)].second].y;
  return sum / static_cast<double>(k);
}

}  // namespace

double predict(const Predictor& p, std::span<const double> x, const DataSet& training) {
  if (x.size() != training.dim()) {
    throw argument_error("predict: feature dimension mismatch");
  }
  if (training.empty() && p.kind_ != PredictorKind::constant_zero) {
    throw argument_error("predict: empty training set");
  }
  p.refits_->fetch_add(1, std::memory_order_relaxed);
  switch (p.kind_) {
    case PredictorKind::ols:
      return fit_linear(x, training, 0.0, false);
    case PredictorKind::ridge:
      return fit_linear(x, training, p.lambda_, p.penalize_intercept_);
    case PredictorKind::knn:
      return fit_knn(x, training, p.k_);
    case PredictorKind::constant_zero:
      return 0.0;
    case PredictorKind::mean_only: {
      double sum = 0.0;
      for (const auto& obs : training) sum += obs.y;
      return sum / static_cast<double>(training.size());
    }
    case PredictorKind::blackbox:
      return p.fn_(x, training);
  }
  throw error("predict: unreachable predictor kind");
}

AffineCoefficients affine_coefficients(const Predictor& p, std::span<const double> x_new,
                                       const DataSet& training) {
  if (!p.affine_in_response()) {
    throw unsupported_error("affine_coefficients: predictor '" + p.name() +
                            "' is not affine in the response vector");
  }
  Observation cand{0.0, std::vector<double>(x_new.begin(), x_new.end())};
  DataSet augmented = training.augmented(cand);
  const std::size_t last = augmented.size() - 1;
  const double at_zero = predict(p, x_new, augmented);
  augmented.set_response(last, 1.0);
  const double at_one = predict(p, x_new, augmented);
  return {1.0 - (at_one - at_zero), at_zero};
}

Predictor make_in_sample_consistent(const Predictor& base) {
  auto fn = [base](std::span<const double> x, const DataSet& training) {
    std::vector<std::size_t> matches;
    for (std::size_t i = 0; i < training.size(); ++i) {
      if (features_equal(training[i].x, x)) matches.push_back(i);
    }
    if (matches.empty()) return predict(base, x, training);
    double sum = 0.0;
    for (std::size_t i : matches) sum += predict(base, x, training.without(i));
    return sum / static_cast<double>(matches.size());
  };
  return Predictor::blackbox(std::move(fn), base.name() + "/in-consistent",
                             base.affine_in_response());
}

Predictor make_out_sample_consistent(const Predictor& base) {
  auto fn = [base](std::span<const double> x, const DataSet& training) {
    for (std::size_t i = 0; i < training.size(); ++i) {
      if (features_equal(training[i].x, x)) return predict(base, x, training);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < training.size(); ++i) {
      sum += predict(base, training[i].x, training);
    }
    return sum / static_cast<double>(training.size());
  };
  return Predictor::blackbox(std::move(fn), base.name() + "/out-consistent",
                             base.affine_in_response());
}

DataSet augment_unique_id(const DataSet& data, Rng& rng) {
  DataSet out(data.dim() + 1);
  for (const auto& obs : data) {
    Observation copy = obs;
    copy.x.push_back(rng.uniform01());
    out.add(std::move(copy));
  }
  return out;
}

std::vector<double> augment_unique_id(std::span<const double> x, Rng& rng) {
  std::vector<double> out(x.begin(), x.end());
  out.push_back(rng.uniform01());
  return out;
}

InstabilitySummary estimate_oos_instability(
    const Predictor& p, const std::function<std::pair<DataSet, Observation>(Rng&)>& sampler,
    int reps, RngSeed seed, double threshold) {
  if (reps < 1) throw argument_error("estimate_oos_instability: reps must be >= 1");
  std::vector<double> diffs(static_cast<std::size_t>(reps));
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng({seed.seed, seed.stream + static_cast<std::uint64_t>(rep)});
    auto [training, fresh] = sampler(rng);
    if (training.size() < 2) {
      throw argument_error("estimate_oos_instability: sampler must give n >= 2");
    }
    const double full = predict(p, fresh.x, training);
    const double dropped = predict(p, fresh.x, training.without(training.size() - 1));
    diffs[static_cast<std::size_t>(rep)] = std::abs(full - dropped);
  }
  InstabilitySummary out;
  out.mean_abs = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(reps);
  out.q95 = quantile(build_ecdf(diffs), 0.95);
  std::size_t exceed = 0;
  for (double d : diffs) {
    if (d > threshold) ++exceed;
  }
  out.exceed_frac = static_cast<double>(exceed) / static_cast<double>(reps);
  return out;
}

}  // namespace conformal
