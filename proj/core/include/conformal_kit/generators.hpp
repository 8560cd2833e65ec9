#ifndef CONFORMAL_KIT_GENERATORS_HPP
#define CONFORMAL_KIT_GENERATORS_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include "conformal_kit/random.hpp"
#include "conformal_kit/types.hpp"

namespace conformal {

enum class GeneratorKind {
  linear_gaussian,
  linear_heavy_tail,
  bounded_uniform,
};

/**
 * Synthetic regression families used by the experiment harness.  All draws are
 * i.i.d. pairs (x, y):
 *
 *   linear_gaussian:   x ~ N(0, I_p), y = theta' x + noise_sd * N(0, 1) with
 *                      theta_j = theta_scale / sqrt(p) (pure noise when p = 0).
 *   linear_heavy_tail: as above with unit theta_scale and Student-t(df) noise.
 *   bounded_uniform:   x ~ U[-1, 1]^p, y = mean(x) / 2 + U[-1, 1], so the
 *                      response always lies in [-1.5, 1.5].
 */
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::linear_gaussian;
  std::size_t p = 2;
  std::size_t n = 30;
  double theta_scale = 1.0;
  double noise_sd = 1.0;
  double df = 3.0;

  void validate() const;
  std::string describe() const;

  /** Range the response is guaranteed to lie in, when the family is bounded. */
  std::optional<std::pair<double, double>> response_bounds() const;

  /** Upper bound on the conditional response density, when the family declares one. */
  std::optional<double> conditional_density_bound() const;
};

GeneratorSpec make_linear_gaussian(std::size_t p, std::size_t n, double theta_scale = 1.0,
                                   double noise_sd = 1.0);
GeneratorSpec make_linear_heavy_tail(std::size_t p, std::size_t n, double df = 3.0);
GeneratorSpec make_bounded_uniform(std::size_t p, std::size_t n);

/** One i.i.d. draw from the family. */
Observation draw_observation(const GeneratorSpec& spec, Rng& rng);

/** spec.n i.i.d. draws assembled into a training set. */
DataSet draw_dataset(const GeneratorSpec& spec, Rng& rng);

/** n + 1 i.i.d. draws: the first n form the training set, the last is the test point. */
std::pair<DataSet, Observation> generate(const GeneratorSpec& spec, Rng& rng);

}  // namespace conformal

#endif  // CONFORMAL_KIT_GENERATORS_HPP
