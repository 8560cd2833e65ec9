#include <benchmark/benchmark.h>

#include <vector>

#include "conformal_kit/conformal_sets.hpp"
#include "conformal_kit/generators.hpp"
#include "conformal_kit/levy_gauge.hpp"
#include "conformal_kit/random.hpp"
#include "conformal_kit/scores.hpp"

namespace {

using namespace conformal;

StepFunction random_step(std::size_t m, std::uint64_t stream) {
  Rng rng({42, stream});
  std::vector<double> sample(m);
  for (double& v : sample) v = rng.normal();
  return build_ecdf(sample);
}

void BM_LevyGauge(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  const StepFunction f = random_step(m, 1);
  const StepFunction g = random_step(m, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(levy_gauge(f, g, 0.1).epsilon);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LevyGauge)->RangeMultiplier(4)->Range(8, 2048)->Complexity();

void BM_LevyMetric(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  const StepFunction f = random_step(m, 1);
  const StepFunction g = random_step(m, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(levy_metric(f, g));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LevyMetric)->RangeMultiplier(4)->Range(8, 512)->Complexity();

void BM_FullConformalGrid(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng({42, 3});
  const DataSet training = draw_dataset(make_linear_gaussian(2, n), rng);
  const Observation probe = draw_observation(make_linear_gaussian(2, n), rng);
  const ConformityScore c = ConformityScore::out_sample(Predictor::mean_only());
  const GridSpec grid{-8.0, 8.0, 401};
  for (auto _ : state) {
    benchmark::DoNotOptimize(full_conformal_set(c, training, probe.x, 0.1, 0.0, grid));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FullConformalGrid)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_ShortcutClosedForm(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng({42, 4});
  const DataSet training = draw_dataset(make_linear_gaussian(2, n), rng);
  const Observation probe = draw_observation(make_linear_gaussian(2, n), rng);
  const Predictor p = Predictor::ols();
  const ConformityScore c = ConformityScore::in_sample(p);
  for (auto _ : state) {
    const extended_real q = shortcut_threshold(c, training, 0.1);
    benchmark::DoNotOptimize(
        shortcut_affine(affine_coefficients(p, probe.x, training), q, 0.0));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ShortcutClosedForm)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_JackknifePlus(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng({42, 5});
  const DataSet training = draw_dataset(make_linear_gaussian(2, n), rng);
  const Observation probe = draw_observation(make_linear_gaussian(2, n), rng);
  const Predictor p = Predictor::ols();
  for (auto _ : state) {
    benchmark::DoNotOptimize(jackknife_plus_symmetric(p, training, probe.x, 0.1, 0.0));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_JackknifePlus)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_UnimodalSearch(benchmark::State& state) {
  const int k_exp = static_cast<int>(state.range(0));
  Rng rng({42, 6});
  const DataSet training = draw_dataset(make_linear_gaussian(1, 40), rng);
  const Observation probe = draw_observation(make_linear_gaussian(1, 40), rng);
  const ConformityScore c = ConformityScore::custom(
      [](const Observation& obs, const DataSet& data) {
        double mean = 0.0;
        for (const auto& o : data) mean += o.y;
        mean /= static_cast<double>(data.size());
        const double d = obs.y - mean;
        return d * d;
      },
      "parabola", true);
  std::uint64_t refits = 0;
  std::uint64_t runs = 0;
  for (auto _ : state) {
    const UnimodalRunReport report =
        shortcut_unimodal(c, training, probe.x, 0.1, 0.0, k_exp, 0.000244140625);
    refits += report.refits;
    ++runs;
    benchmark::DoNotOptimize(report.interval.length());
  }
  state.counters["refits_per_run"] =
      benchmark::Counter(static_cast<double>(refits) / static_cast<double>(runs));
}
BENCHMARK(BM_UnimodalSearch)->Arg(4)->Arg(8)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
