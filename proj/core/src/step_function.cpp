#include "conformal_kit/step_function.hpp"

#include <algorithm>
#include <cmath>

namespace conformal {

StepFunction::StepFunction(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.empty() || breakpoints_.size() != values_.size()) {
    throw argument_error("StepFunction: need matching nonempty breakpoint/value lists");
  }
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i])) {
      throw argument_error("StepFunction: breakpoints must be finite");
    }
    if (i > 0 && !(breakpoints_[i - 1] < breakpoints_[i])) {
      throw argument_error("StepFunction: breakpoints must be strictly increasing");
    }
    if (std::isnan(values_[i]) || values_[i] < 0.0 || values_[i] > 1.0) {
      throw argument_error("StepFunction: values must lie in [0, 1]");
    }
    if (i > 0 && values_[i] < values_[i - 1]) {
      throw argument_error("StepFunction: values must be nondecreasing");
    }
  }
}

double StepFunction::operator()(double t) const {
  // Index of the first breakpoint > t; the value just before it applies.
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.begin()) return 0.0;
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.begin()) return 0.0;
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

StepFunction build_ecdf(std::span<const double> sample) {
  if (sample.empty()) throw argument_error("build_ecdf: sample must be nonempty");
  std::vector<double> sorted(sample.begin(), sample.end());
  for (double v : sorted) {
    if (std::isnan(v)) throw argument_error("build_ecdf: sample contains NaN");
  }
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<double> breakpoints;
  std::vector<double> values;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // Last occurrence of a tied value carries the cumulative count.
    if (i + 1 == sorted.size() || sorted[i + 1] != sorted[i]) {
      breakpoints.push_back(sorted[i]);
      values.push_back(static_cast<double>(i + 1) / n);
    }
  }
  return StepFunction(std::move(breakpoints), std::move(values));
}

extended_real quantile(const StepFunction& f, double alpha) {
  if (std::isnan(alpha)) throw argument_error("quantile: alpha is NaN");
  if (alpha <= 0.0) return neg_inf;
  if (alpha > f.final_value()) return pos_inf;
  const auto& vs = f.values();
  auto it = std::lower_bound(vs.begin(), vs.end(), alpha);
  return f.breakpoints()[static_cast<std::size_t>(it - vs.begin())];
}

}  // namespace conformal
