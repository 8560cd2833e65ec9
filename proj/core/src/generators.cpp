#include "conformal_kit/generators.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace conformal {

void GeneratorSpec::validate() const {
  if (n == 0) throw argument_error("GeneratorSpec: n must be positive");
  switch (kind) {
    case GeneratorKind::linear_gaussian:
      if (!(noise_sd > 0.0) || !std::isfinite(noise_sd)) {
        throw argument_error("GeneratorSpec: noise_sd must be positive and finite");
      }
      if (!std::isfinite(theta_scale)) {
        throw argument_error("GeneratorSpec: theta_scale must be finite");
      }
      break;
    case GeneratorKind::linear_heavy_tail:
      if (!(df >= 1.0) || !std::isfinite(df)) {
        throw argument_error("GeneratorSpec: df must be at least 1");
      }
      break;
    case GeneratorKind::bounded_uniform:
      break;
  }
}

std::string GeneratorSpec::describe() const {
  std::ostringstream out;
  switch (kind) {
    case GeneratorKind::linear_gaussian:
      out << "linear_gaussian(p=" << p << ",n=" << n << ",theta_scale=" << theta_scale
          << ",noise_sd=" << noise_sd << ")";
      break;
    case GeneratorKind::linear_heavy_tail:
      out << "linear_heavy_tail(p=" << p << ",n=" << n << ",df=" << df << ")";
      break;
    case GeneratorKind::bounded_uniform:
      out << "bounded_uniform(p=" << p << ",n=" << n << ")";
      break;
  }
  return out.str();
}

std::optional<std::pair<double, double>> GeneratorSpec::response_bounds() const {
  if (kind == GeneratorKind::bounded_uniform) return std::pair<double, double>{-1.5, 1.5};
  return std::nullopt;
}

std::optional<double> GeneratorSpec::conditional_density_bound() const {
  if (kind == GeneratorKind::linear_gaussian) {
    return 1.0 / (noise_sd * std::sqrt(2.0 * std::numbers::pi));
  }
  if (kind == GeneratorKind::bounded_uniform) return 0.5;
  return std::nullopt;
}

GeneratorSpec make_linear_gaussian(std::size_t p, std::size_t n, double theta_scale,
                                   double noise_sd) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::linear_gaussian;
  spec.p = p;
  spec.n = n;
  spec.theta_scale = theta_scale;
  spec.noise_sd = noise_sd;
  spec.validate();
  return spec;
}

GeneratorSpec make_linear_heavy_tail(std::size_t p, std::size_t n, double df) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::linear_heavy_tail;
  spec.p = p;
  spec.n = n;
  spec.df = df;
  spec.validate();
  return spec;
}

GeneratorSpec make_bounded_uniform(std::size_t p, std::size_t n) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::bounded_uniform;
  spec.p = p;
  spec.n = n;
  spec.validate();
  return spec;
}

Observation draw_observation(const GeneratorSpec& spec, Rng& rng) {
  Observation obs;
  obs.x.resize(spec.p);
  switch (spec.kind) {
    case GeneratorKind::linear_gaussian: {
      const double slope = spec.p > 0
                               ? spec.theta_scale / std::sqrt(static_cast<double>(spec.p))
                               : 0.0;
      double mean = 0.0;
      for (double& v : obs.x) {
        v = rng.normal();
        mean += slope * v;
      }
      obs.y = mean + spec.noise_sd * rng.normal();
      break;
    }
    case GeneratorKind::linear_heavy_tail: {
      const double slope = spec.p > 0 ? 1.0 / std::sqrt(static_cast<double>(spec.p)) : 0.0;
      double mean = 0.0;
      for (double& v : obs.x) {
        v = rng.normal();
        mean += slope * v;
      }
      obs.y = mean + rng.student_t(spec.df);
      break;
    }
    case GeneratorKind::bounded_uniform: {
      double mean = 0.0;
      for (double& v : obs.x) {
        v = rng.uniform(-1.0, 1.0);
        mean += v;
      }
      if (spec.p > 0) mean /= static_cast<double>(spec.p);
      obs.y = 0.5 * mean + rng.uniform(-1.0, 1.0);
      break;
    }
  }
  return obs;
}

DataSet draw_dataset(const GeneratorSpec& spec, Rng& rng) {
  spec.validate();
  DataSet data(spec.p);
  for (std::size_t i = 0; i < spec.n; ++i) data.add(draw_observation(spec, rng));
  return data;
}

std::pair<DataSet, Observation> generate(const GeneratorSpec& spec, Rng& rng) {
  DataSet training = draw_dataset(spec, rng);
  return {std::move(training), draw_observation(spec, rng)};
}

}  // namespace conformal
