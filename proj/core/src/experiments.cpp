#include "conformal_kit/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>

#include "conformal_kit/conformal_sets.hpp"
#include "conformal_kit/levy_gauge.hpp"
#include "conformal_kit/parallel.hpp"
#include "conformal_kit/scores.hpp"

namespace conformal {

std::size_t worker_count() {
  if (const char* env = std::getenv("CONFORMAL_KIT_THREADS")) {
    char* end = nullptr;
    const unsigned long parsed = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && parsed >= 1) return static_cast<std::size_t>(parsed);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  const std::size_t workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count, std::memory_order_relaxed);
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

constexpr std::uint64_t kCellStride = std::uint64_t{1} << 20;
constexpr std::uint64_t kBlockStride = std::uint64_t{1} << 24;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_sizes(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double se_of_mean(const std::vector<double>& v) {
  const std::size_t m = v.size();
  if (m < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
}

double binomial_se(double p, double reps) { return std::sqrt(p * (1.0 - p) / reps); }

/** Smallest k in 1..m with k/m >= level, or m + 1 when none; float-identical to the ECDF quantile. */
std::size_t quantile_rank(std::size_t m, double level) {
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
  return lo;
}

double empirical_quantile(std::vector<double> v, double p) {
  if (v.empty()) throw argument_error("empirical_quantile: empty sample");
  std::sort(v.begin(), v.end());
  std::size_t k = quantile_rank(v.size(), p);
  if (k > v.size()) k = v.size();
  if (k < 1) k = 1;
  return v[k - 1];
}

double mean_response(const DataSet& data) {
  double sum = 0.0;
  for (const auto& obs : data) sum += obs.y;
  return sum / static_cast<double>(data.size());
}

void check_unit_alpha(double alpha, const char* who) {
  if (std::isnan(alpha) || alpha < 0.0 || alpha > 1.0) {
    throw argument_error(std::string(who) + ": alpha must lie in [0, 1]");
  }
}

void check_n_cap(std::size_t n, const char* who) {
  if (n > 200) throw argument_error(std::string(who) + ": training sizes are capped at 200");
}

bool contains_by_method(Method m, const ConformityScore& c, const DataSet& training,
                        const Observation& fresh, double alpha, double delta) {
  switch (m) {
    case Method::full:
      return full_conformal_contains(c, training, fresh.x, fresh.y, alpha, delta);
    case Method::shortcut:
      return shortcut_contains(c, training, fresh.x, fresh.y, alpha, delta);
    case Method::cross:
      return cross_conformal_contains(c, training, fresh.x, fresh.y, alpha, delta);
    case Method::jackknife:
      return jackknife_symmetric(c.predictor(), training, fresh.x, alpha, delta)
          .contains(fresh.y);
    case Method::jackknife_plus:
      return jackknife_plus_symmetric(c.predictor(), training, fresh.x, alpha, delta)
          .contains(fresh.y);
  }
  throw argument_error("contains_by_method: unknown method");
}

struct CrossContext {
  std::vector<DataSet> subs;
  std::vector<double> own;
};

/** One-time preparation per training set so the inner test loop is cheap. */
std::function<bool(const Observation&)> make_conditional_tester(Method m,
                                                                const ConformityScore& c,
                                                                const DataSet& training,
                                                                double alpha, double delta) {
  switch (m) {
    case Method::full: {
      auto scorer = std::make_shared<AugmentedScorer>(c, training);
      return [scorer, alpha, delta](const Observation& obs) {
        return scorer->contains(obs.x, obs.y, alpha, delta);
      };
    }
    case Method::shortcut: {
      const extended_real q = shortcut_threshold(c, training, alpha);
      return [&c, &training, q, delta](const Observation& obs) {
        return c(obs, training) <= q + delta;
      };
    }
    case Method::cross: {
      auto ctx = std::make_shared<CrossContext>();
      ctx->subs.reserve(training.size());
      for (std::size_t i = 0; i < training.size(); ++i) ctx->subs.push_back(training.without(i));
      for (std::size_t i = 0; i < training.size(); ++i) {
        ctx->own.push_back(c(training[i], ctx->subs[i]));
      }
      const double level = alpha * static_cast<double>(training.size() + 1);
      return [ctx, &c, level, delta](const Observation& obs) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < ctx->subs.size(); ++i) {
          if (c(obs, ctx->subs[i]) <= ctx->own[i] + delta) ++hits;
        }
        return static_cast<double>(1 + hits) > level;
      };
    }
    case Method::jackknife: {
      const Predictor p = c.predictor();
      std::vector<double> abs_residuals;
      abs_residuals.reserve(training.size());
      for (std::size_t i = 0; i < training.size(); ++i) {
        const DataSet sub = training.without(i);
        abs_residuals.push_back(std::abs(training[i].y - predict(p, training[i].x, sub)));
      }
      const extended_real q = quantile(build_ecdf(abs_residuals), 1.0 - alpha);
      return [p, &training, q, delta](const Observation& obs) {
        return std::abs(obs.y - predict(p, obs.x, training)) <= q + delta;
      };
    }
    case Method::jackknife_plus: {
      const Predictor p = c.predictor();
      return [p, &training, alpha, delta](const Observation& obs) {
        return jackknife_plus_symmetric(p, training, obs.x, alpha, delta).contains(obs.y);
      };
    }
  }
  throw argument_error("make_conditional_tester: unknown method");
}

struct MiscoverageSummary {
  double mean = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double q95 = 0.0;
  double max = 0.0;
  double exceed_002 = 0.0;
  double exceed_005 = 0.0;
};

MiscoverageSummary summarize_miscoverage(const std::vector<double>& miscov, double alpha) {
  MiscoverageSummary s;
  s.mean = mean_of(miscov);
  s.q50 = empirical_quantile(miscov, 0.5);
  s.q90 = empirical_quantile(miscov, 0.9);
  s.q95 = empirical_quantile(miscov, 0.95);
  s.max = *std::max_element(miscov.begin(), miscov.end());
  std::size_t over2 = 0;
  std::size_t over5 = 0;
  for (double m : miscov) {
    if (m > alpha + 0.02) ++over2;
    if (m > alpha + 0.05) ++over5;
  }
  s.exceed_002 = static_cast<double>(over2) / static_cast<double>(miscov.size());
  s.exceed_005 = static_cast<double>(over5) / static_cast<double>(miscov.size());
  return s;
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "full") return Method::full;
  if (name == "shortcut") return Method::shortcut;
  if (name == "cross") return Method::cross;
  if (name == "jackknife") return Method::jackknife;
  if (name == "jackknife-plus") return Method::jackknife_plus;
  throw config_error("unknown method '" + name +
                     "' (expected full, shortcut, cross, jackknife, or jackknife-plus)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::full:
      return "full";
    case Method::shortcut:
      return "shortcut";
    case Method::cross:
      return "cross";
    case Method::jackknife:
      return "jackknife";
    case Method::jackknife_plus:
      return "jackknife-plus";
  }
  return "unknown";
}

double ReportRow::at(const std::string& key) const {
  for (const auto& [k, v] : stats) {
    if (k == key) return v;
  }
  throw argument_error("ReportRow: no stat named '" + key + "' in row '" + label + "'");
}

const ReportRow& ExperimentReport::row(const std::string& label) const {
  for (const auto& r : rows) {
    if (r.label == label) return r;
  }
  throw argument_error("ExperimentReport: no row labelled '" + label + "'");
}

ExperimentReport run_marginal_coverage(const MarginalCoverageConfig& cfg, RngSeed seed) {
  const Stopwatch watch;
  cfg.gen.validate();
  check_n_cap(cfg.gen.n, "run_marginal_coverage");
  check_unit_alpha(cfg.alpha, "run_marginal_coverage");
  if (!std::isfinite(cfg.delta)) throw argument_error("run_marginal_coverage: delta must be finite");
  if (cfg.reps < 100) throw argument_error("run_marginal_coverage: reps must be at least 100");
  const ConformityScore c = parse_score_spec(cfg.score);

  std::vector<char> covered(static_cast<std::size_t>(cfg.reps), 0);
  parallel_for(covered.size(), [&](std::size_t r) {
    Rng rng({seed.seed, seed.stream + r});
    auto [training, fresh] = generate(cfg.gen, rng);
    covered[r] = contains_by_method(cfg.method, c, training, fresh, cfg.alpha, cfg.delta) ? 1 : 0;
  });

  const double reps = static_cast<double>(cfg.reps);
  const double coverage =
      static_cast<double>(std::count(covered.begin(), covered.end(), 1)) / reps;
  const double se = binomial_se(coverage, reps);
  const double threshold = 1.0 - cfg.alpha - 3.0 * se;

  ExperimentReport report;
  report.experiment = "marginal_coverage";
  report.config = {{"method", method_name(cfg.method)},
                   {"generator", cfg.gen.describe()},
                   {"score", cfg.score},
                   {"alpha", fmt(cfg.alpha)},
                   {"delta", fmt(cfg.delta)},
                   {"reps", std::to_string(cfg.reps)},
                   {"seed", std::to_string(seed.seed)},
                   {"stream", std::to_string(seed.stream)}};
  report.rows.push_back({"coverage",
                         {{"n", static_cast<double>(cfg.gen.n)},
                          {"reps", reps},
                          {"coverage", coverage},
                          {"se", se},
                          {"target", 1.0 - cfg.alpha},
                          {"threshold", threshold}}});
  report.has_pass_criterion = cfg.method == Method::full && cfg.delta >= 0.0;
  report.pass = !report.has_pass_criterion || coverage >= threshold;
  report.wall_seconds = watch.seconds();
  return report;
}

ExperimentReport run_conditional_coverage(const ConditionalCoverageConfig& cfg, RngSeed seed) {
  const Stopwatch watch;
  cfg.gen.validate();
  check_unit_alpha(cfg.alpha, "run_conditional_coverage");
  if (!std::isfinite(cfg.delta)) {
    throw argument_error("run_conditional_coverage: delta must be finite");
  }
  if (cfg.outer_reps < 100 || cfg.inner_reps < 100) {
    throw argument_error("run_conditional_coverage: outer and inner reps must be at least 100");
  }
  if (cfg.outer_reps > 400 || cfg.inner_reps > 400) {
    throw argument_error("run_conditional_coverage: outer and inner reps are capped at 400");
  }
  const std::vector<std::size_t> ns = cfg.n_values.empty()
                                          ? std::vector<std::size_t>{cfg.gen.n}
                                          : cfg.n_values;
  for (std::size_t n : ns) {
    check_n_cap(n, "run_conditional_coverage");
    if (n < 2) throw argument_error("run_conditional_coverage: n must be at least 2");
    if (cfg.method == Method::full && n > 60) {
      throw argument_error("run_conditional_coverage: full conformal sweeps are capped at n = 60");
    }
  }
  const ConformityScore c = parse_score_spec(cfg.score);

  ExperimentReport report;
  report.experiment = "conditional_coverage";
  report.config = {{"method", method_name(cfg.method)},
                   {"generator", cfg.gen.describe()},
                   {"n_values", join_sizes(ns)},
                   {"score", cfg.score},
                   {"alpha", fmt(cfg.alpha)},
                   {"delta", fmt(cfg.delta)},
                   {"outer_reps", std::to_string(cfg.outer_reps)},
                   {"inner_reps", std::to_string(cfg.inner_reps)},
                   {"seed", std::to_string(seed.seed)},
                   {"stream", std::to_string(seed.stream)}};

  for (std::size_t ci = 0; ci < ns.size(); ++ci) {
    GeneratorSpec gen = cfg.gen;
    gen.n = ns[ci];
    std::vector<double> miscov(static_cast<std::size_t>(cfg.outer_reps), 0.0);
    parallel_for(miscov.size(), [&](std::size_t o) {
      Rng rng({seed.seed, seed.stream + ci * kCellStride + o});
      const DataSet training = draw_dataset(gen, rng);
      const auto tester = make_conditional_tester(cfg.method, c, training, cfg.alpha, cfg.delta);
      int miss = 0;
      for (int i = 0; i < cfg.inner_reps; ++i) {
        const Observation obs = draw_observation(gen, rng);
        if (!tester(obs)) ++miss;
      }
      miscov[o] = static_cast<double>(miss) / static_cast<double>(cfg.inner_reps);
    });
    const MiscoverageSummary s = summarize_miscoverage(miscov, cfg.alpha);
    report.rows.push_back({"n=" + std::to_string(gen.n),
                           {{"n", static_cast<double>(gen.n)},
                            {"outer_reps", static_cast<double>(cfg.outer_reps)},
                            {"inner_reps", static_cast<double>(cfg.inner_reps)},
                            {"mean_miscoverage", s.mean},
                            {"q50", s.q50},
                            {"q90", s.q90},
                            {"q95", s.q95},
                            {"max", s.max},
                            {"exceed_alpha_plus_002", s.exceed_002},
                            {"exceed_alpha_plus_005", s.exceed_005}}});
  }
  report.wall_seconds = watch.seconds();
  return report;
}

ExperimentReport run_equivalence(const EquivalenceConfig& cfg, RngSeed seed) {
  const Stopwatch watch;
  cfg.gen.validate();
  if (cfg.gen.kind != GeneratorKind::bounded_uniform) {
    throw argument_error("run_equivalence: requires the bounded family");
  }
  check_unit_alpha(cfg.alpha, "run_equivalence");
  if (cfg.alpha - cfg.eps < 0.0 || cfg.eps < 0.0) {
    throw argument_error("run_equivalence: eps must lie in [0, alpha]");
  }
  if (!(cfg.delta1 >= 0.0) || !std::isfinite(cfg.delta1) || !std::isfinite(cfg.delta2)) {
    throw argument_error("run_equivalence: delta1 must be nonnegative and deltas finite");
  }
  if (cfg.reps < 1) throw argument_error("run_equivalence: reps must be positive");
  if (cfg.n_values.empty()) throw argument_error("run_equivalence: n_values must be nonempty");
  for (std::size_t n : cfg.n_values) {
    check_n_cap(n, "run_equivalence");
    if (n < 2) throw argument_error("run_equivalence: n must be at least 2");
  }
  if (cfg.grid_points < 2 || cfg.grid_points > 4001) {
    throw argument_error("run_equivalence: grid_points must lie in [2, 4001]");
  }
  const ConformityScore c = parse_score_spec(cfg.score);
  const Predictor pred = c.predictor();
  const GridSpec grid{-5.0, 5.0, cfg.grid_points};
  grid.validate();

  ExperimentReport report;
  report.experiment = "equivalence";
  report.config = {{"generator", cfg.gen.describe()},
                   {"n_values", join_sizes(cfg.n_values)},
                   {"score", cfg.score},
                   {"alpha", fmt(cfg.alpha)},
                   {"delta1", fmt(cfg.delta1)},
                   {"delta2", fmt(cfg.delta2)},
                   {"eps", fmt(cfg.eps)},
                   {"reps", std::to_string(cfg.reps)},
                   {"grid_points", std::to_string(cfg.grid_points)},
                   {"seed", std::to_string(seed.seed)},
                   {"stream", std::to_string(seed.stream)}};

  for (std::size_t ci = 0; ci < cfg.n_values.size(); ++ci) {
    GeneratorSpec gen = cfg.gen;
    gen.n = cfg.n_values[ci];
    const std::size_t reps = static_cast<std::size_t>(cfg.reps);
    std::vector<double> d_fc_sc(reps), d_fc_cc(reps), d_sc_jk(reps), d_directed(reps);
    parallel_for(reps, [&](std::size_t r) {
      Rng rng({seed.seed, seed.stream + ci * kCellStride + r});
      const DataSet training = draw_dataset(gen, rng);
      const Observation probe = draw_observation(gen, rng);

      const IntervalUnion fc =
          full_conformal_set(c, training, probe.x, cfg.alpha, cfg.delta1, grid);

      const StepFunction loo_ecdf = build_ecdf(loo_scores(c, training));
      const extended_real q_base = quantile(loo_ecdf, 1.0 - cfg.alpha);
      const extended_real q_shift = quantile(loo_ecdf, 1.0 - (cfg.alpha - cfg.eps));
      std::vector<char> sc_flags(grid.points), shift_flags(grid.points);
      Observation cand{0.0, std::vector<double>(probe.x.begin(), probe.x.end())};
      for (std::size_t j = 0; j < grid.points; ++j) {
        cand.y = grid.at(j);
        const double s = c(cand, training);
        sc_flags[j] = s <= q_base + cfg.delta1 ? 1 : 0;
        shift_flags[j] = s <= q_shift + cfg.delta2 ? 1 : 0;
      }
      const IntervalUnion sc = interval_union_from_grid_flags(sc_flags, grid);

      const IntervalUnion cc =
          cross_conformal_set(c, training, probe.x, cfg.alpha, cfg.delta1, grid);

      const IntervalUnion jk_exact =
          jackknife_symmetric(pred, training, probe.x, cfg.alpha, cfg.delta1);
      std::vector<char> jk_flags(grid.points);
      std::vector<char> directed_flags(grid.points);
      for (std::size_t j = 0; j < grid.points; ++j) {
        const double y = grid.at(j);
        jk_flags[j] = jk_exact.contains(y) ? 1 : 0;
        directed_flags[j] = (fc.contains(y) && !shift_flags[j]) ? 1 : 0;
      }
      const IntervalUnion jk = interval_union_from_grid_flags(jk_flags, grid);

      d_fc_sc[r] = symmetric_difference_length(fc, sc);
      d_fc_cc[r] = symmetric_difference_length(fc, cc);
      d_sc_jk[r] = symmetric_difference_length(sc, jk);
      d_directed[r] = interval_union_from_grid_flags(directed_flags, grid).length();
    });

    const auto push = [&](const std::string& pair, const std::vector<double>& d) {
      report.rows.push_back({"n=" + std::to_string(gen.n) + ":" + pair,
                             {{"n", static_cast<double>(gen.n)},
                              {"reps", static_cast<double>(cfg.reps)},
                              {"mean_length", mean_of(d)},
                              {"se", se_of_mean(d)}}});
    };
    push("full-vs-shortcut", d_fc_sc);
    push("full-vs-cross", d_fc_cc);
    push("shortcut-vs-jackknife", d_sc_jk);
    push("full-minus-shortcut", d_directed);
  }
  report.wall_seconds = watch.seconds();
  return report;
}

ExperimentReport run_finite_sample_bound(const FiniteSampleBoundConfig& cfg, RngSeed seed) {
  const Stopwatch watch;
  cfg.gen.validate();
  check_n_cap(cfg.gen.n, "run_finite_sample_bound");
  if (!(cfg.delta > 0.0) || !(cfg.eps1 > 0.0) || !(cfg.eps2 > 0.0)) {
    throw argument_error("run_finite_sample_bound: delta, eps1, eps2 must be positive");
  }
  if (cfg.outer_reps < 100 || cfg.inner_reps < 100) {
    throw argument_error("run_finite_sample_bound: outer and inner reps must be at least 100");
  }
  if (cfg.outer_reps > 400 || cfg.inner_reps > 400) {
    throw argument_error("run_finite_sample_bound: outer and inner reps are capped at 400");
  }
  if (cfg.stability_reps < 500) {
    throw argument_error("run_finite_sample_bound: stability_reps must be at least 500");
  }
  if (!(cfg.truncation_k > 0.0)) {
    throw argument_error("run_finite_sample_bound: truncation_k must be positive");
  }
  std::vector<double> alphas = cfg.alpha_grid;
  if (alphas.empty()) {
    for (int k = 1; k <= 99; ++k) alphas.push_back(static_cast<double>(k) / 100.0);
  }
  for (double a : alphas) {
    if (!(a > 0.0) || !(a < 1.0)) {
      throw argument_error("run_finite_sample_bound: alpha grid values must lie in (0, 1)");
    }
  }
  const ConformityScore c = parse_score_spec(cfg.score);
  const std::size_t n = cfg.gen.n;

  std::vector<char> event(static_cast<std::size_t>(cfg.outer_reps), 0);
  parallel_for(event.size(), [&](std::size_t o) {
    Rng rng({seed.seed, seed.stream + o});
    const DataSet training = draw_dataset(cfg.gen, rng);
    AugmentedScorer scorer(c, training);
    const std::size_t m = training.size() + 1;
    std::vector<int> miss(alphas.size(), 0);
    std::vector<double> sorted(m);
    for (int i = 0; i < cfg.inner_reps; ++i) {
      const Observation obs = draw_observation(cfg.gen, rng);
      const auto scores = scorer.scores(obs.x, obs.y);
      const double s0 = scores[0];
      sorted.assign(scores.begin(), scores.end());
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        const std::size_t k = quantile_rank(m, 1.0 - alphas[a]);
        const bool in_set = k <= m && s0 <= sorted[k - 1] + cfg.delta;
        if (!in_set) ++miss[a];
      }
    }
    double sup_dev = -1.0;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const double dev =
          static_cast<double>(miss[a]) / static_cast<double>(cfg.inner_reps) - alphas[a];
      sup_dev = std::max(sup_dev, dev);
    }
    event[o] = sup_dev >= cfg.eps1 + cfg.eps2 ? 1 : 0;
  });
  const double outer = static_cast<double>(cfg.outer_reps);
  const double lhs = static_cast<double>(std::count(event.begin(), event.end(), 1)) / outer;
  const double se_lhs = binomial_se(lhs, outer);

  const std::size_t stab = static_cast<std::size_t>(cfg.stability_reps);
  std::vector<double> swap_diffs(stab), abs_scores(stab);
  parallel_for(stab, [&](std::size_t r) {
    Rng rng({seed.seed, seed.stream + kBlockStride + r});
    DataSet training = draw_dataset(cfg.gen, rng);
    const Observation fresh = draw_observation(cfg.gen, rng);
    const Observation replacement = draw_observation(cfg.gen, rng);
    const double base = c(fresh, training);
    training.set_observation(0, replacement.y, replacement.x);
    const double swapped = c(fresh, training);
    swap_diffs[r] = std::abs(base - swapped);
    abs_scores[r] = std::abs(base);
  });
  const double m1 = mean_of(swap_diffs);
  const double se1 = se_of_mean(swap_diffs);
  const double m2 = mean_of(abs_scores);
  const double se2 = se_of_mean(abs_scores);

  const double f1 = 3.0 / (cfg.delta * cfg.eps1 * cfg.eps1 * cfg.eps2);
  const double f2 =
      1.0 / (static_cast<double>(n + 1) * cfg.delta * cfg.eps1 * cfg.eps1 * cfg.eps2);
  const double rhs = f1 * m1 + f2 * m2;
  const double se_rhs = std::sqrt(f1 * se1 * f1 * se1 + f2 * se2 * f2 * se2);

  const double cap = 2.0 * cfg.truncation_k + 3.0 * cfg.delta;
  double tail = 0.0;
  double truncated_mean = 0.0;
  for (std::size_t r = 0; r < stab; ++r) {
    if (abs_scores[r] >= cfg.truncation_k) tail += 1.0;
    truncated_mean += std::min(cap, swap_diffs[r]);
  }
  tail /= static_cast<double>(stab);
  truncated_mean /= static_cast<double>(stab);
  const double rhs_truncated =
      tail / (cfg.delta * cfg.eps1 * cfg.eps2) + f1 * truncated_mean + cap * f2 / 2.0;

  const double se_combined = std::sqrt(se_lhs * se_lhs + se_rhs * se_rhs);
  const double margin = rhs + 3.0 * se_combined - lhs;

  ExperimentReport report;
  report.experiment = "finite_sample_bound";
  report.config = {{"generator", cfg.gen.describe()},
                   {"score", cfg.score},
                   {"alpha_grid_size", std::to_string(alphas.size())},
                   {"delta", fmt(cfg.delta)},
                   {"eps1", fmt(cfg.eps1)},
                   {"eps2", fmt(cfg.eps2)},
                   {"outer_reps", std::to_string(cfg.outer_reps)},
                   {"inner_reps", std::to_string(cfg.inner_reps)},
                   {"stability_reps", std::to_string(cfg.stability_reps)},
                   {"truncation_k", fmt(cfg.truncation_k)},
                   {"seed", std::to_string(seed.seed)},
                   {"stream", std::to_string(seed.stream)}};
  report.rows.push_back({"bound",
                         {{"n", static_cast<double>(n)},
                          {"lhs", lhs},
                          {"se_lhs", se_lhs},
                          {"rhs", rhs},
                          {"se_rhs", se_rhs},
                          {"rhs_truncated", rhs_truncated},
                          {"mean_abs_swap_diff", m1},
                          {"mean_abs_score", m2},
                          {"tail_mass", tail},
                          {"margin", margin}}});
  report.has_pass_criterion = true;
  report.pass = lhs <= rhs + 3.0 * se_combined;
  report.wall_seconds = watch.seconds();
  return report;
}

namespace {

struct UnimodalInstance {
  DataSet training;
  std::vector<double> x_new;
  ConformityScore score = ConformityScore::out_sample(Predictor::mean_only());
  IntervalUnion exact;
};

double shifted_mean(const DataSet& data, double shift) { return mean_response(data) + shift; }

UnimodalInstance make_unimodal_instance(const GeneratorSpec& gen, double alpha, double delta,
                                        int k_exponent, std::size_t family, Rng& rng) {
  auto [training, probe] = generate(gen, rng);
  const double window = std::ldexp(1.0, k_exponent);
  const double mode = rng.uniform01();
  double shift = 0.0;
  bool wide = false;
  if (mode < 0.70) {
    shift = rng.uniform(-2.0, 2.0);
  } else if (mode < 0.85) {
    shift = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * window * rng.uniform(0.85, 1.15);
  } else {
    wide = true;
    shift = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * window * rng.uniform(0.75, 0.95);
  }

  UnimodalInstance inst;
  inst.training = std::move(training);
  inst.x_new = probe.x;

  switch (family % 3) {
    case 0: {
      for (std::size_t i = 0; i < inst.training.size(); ++i) {
        inst.training.set_response(i, inst.training[i].y + shift);
      }
      const Predictor p = Predictor::mean_only();
      inst.score = ConformityScore::in_sample(p);
      const extended_real q = shortcut_threshold(inst.score, inst.training, alpha);
      inst.exact = shortcut_affine(affine_coefficients(p, inst.x_new, inst.training), q, delta);
      break;
    }
    case 1: {
      double slope_lo = rng.uniform(0.2, 4.0);
      double slope_hi = rng.uniform(0.2, 4.0);
      if (wide) {
        slope_lo = rng.uniform(0.005, 0.02);
        slope_hi = rng.uniform(0.8, 1.5);
        if (shift < 0.0) std::swap(slope_lo, slope_hi);
      }
      inst.score = ConformityScore::custom(
          [slope_lo, slope_hi, shift](const Observation& obs, const DataSet& data) {
            const double d = obs.y - shifted_mean(data, shift);
            return d < 0.0 ? slope_lo * (-d) : slope_hi * d;
          },
          "vshape", true);
      const extended_real q = shortcut_threshold(inst.score, inst.training, alpha);
      const extended_real t = q + delta;
      if (t == pos_inf) {
        inst.exact = IntervalUnion::whole_line();
      } else if (t < 0.0) {
        inst.exact = IntervalUnion();
      } else {
        const double center = shifted_mean(inst.training, shift);
        inst.exact = IntervalUnion::single(
            Interval{center - t / slope_lo, center + t / slope_hi, true, true});
      }
      break;
    }
    default: {
      const double scale = rng.uniform(0.25, 2.0);
      const double offset = rng.uniform(0.0, 1.5);
      inst.score = ConformityScore::custom(
          [scale, offset, shift](const Observation& obs, const DataSet& data) {
            const double d = obs.y - shifted_mean(data, shift);
            return offset + scale * d * d;
          },
          "parabola", true);
      const extended_real q = shortcut_threshold(inst.score, inst.training, alpha);
      const extended_real t = q + delta;
      if (t == pos_inf) {
        inst.exact = IntervalUnion::whole_line();
      } else if (t < offset) {
        inst.exact = IntervalUnion();
      } else {
        const double center = shifted_mean(inst.training, shift);
        const double half = std::sqrt((t - offset) / scale);
        inst.exact = IntervalUnion::single(Interval{center - half, center + half, true, true});
      }
      break;
    }
  }
  return inst;
}

bool contained_with_slack(const IntervalUnion& inner, const IntervalUnion& outer, double slack) {
  for (const Interval& a : inner.parts()) {
    bool ok = false;
    for (const Interval& b : outer.parts()) {
      const bool lo_ok = b.lo == neg_inf || (a.lo != neg_inf && b.lo <= a.lo + slack);
      const bool hi_ok = b.hi == pos_inf || (a.hi != pos_inf && b.hi >= a.hi - slack);
      if (lo_ok && hi_ok) {
        ok = true;
        break;
      }
    }
    if (!ok) return false;
  }
  return true;
}

}  // namespace

ExperimentReport run_refit_benchmark(const RefitBenchmarkConfig& cfg, RngSeed seed) {
  const Stopwatch watch;
  cfg.gen.validate();
  check_n_cap(cfg.gen.n, "run_refit_benchmark");
  if (cfg.gen.n < 2) throw argument_error("run_refit_benchmark: n must be at least 2");
  check_unit_alpha(cfg.alpha, "run_refit_benchmark");
  if (!std::isfinite(cfg.delta)) throw argument_error("run_refit_benchmark: delta must be finite");
  if (cfg.eps_values.empty() || cfg.k_exponents.empty()) {
    throw argument_error("run_refit_benchmark: eps_values and k_exponents must be nonempty");
  }
  if (cfg.reps_per_cell < 1) {
    throw argument_error("run_refit_benchmark: reps_per_cell must be positive");
  }

  ExperimentReport report;
  report.experiment = "refit_benchmark";
  std::string eps_list;
  for (std::size_t i = 0; i < cfg.eps_values.size(); ++i) {
    if (i > 0) eps_list += ",";
    eps_list += fmt(cfg.eps_values[i]);
  }
  std::string k_list;
  for (std::size_t i = 0; i < cfg.k_exponents.size(); ++i) {
    if (i > 0) k_list += ",";
    k_list += std::to_string(cfg.k_exponents[i]);
  }
  report.config = {{"generator", cfg.gen.describe()},
                   {"alpha", fmt(cfg.alpha)},
                   {"delta", fmt(cfg.delta)},
                   {"eps_values", eps_list},
                   {"k_exponents", k_list},
                   {"reps_per_cell", std::to_string(cfg.reps_per_cell)},
                   {"seed", std::to_string(seed.seed)},
                   {"stream", std::to_string(seed.stream)}};
  report.has_pass_criterion = true;

  std::size_t cell = 0;
  for (int k_exp : cfg.k_exponents) {
    for (double eps : cfg.eps_values) {
      const std::size_t reps = static_cast<std::size_t>(cfg.reps_per_cell);
      std::vector<std::uint64_t> refits(reps, 0);
      std::vector<std::uint64_t> bounds(reps, 0);
      std::vector<char> containment_bad(reps, 0);
      std::vector<char> excess_bad(reps, 0);
      std::vector<double> excesses(reps, -1.0);
      const double window = std::ldexp(1.0, k_exp);
      parallel_for(reps, [&](std::size_t r) {
        Rng rng({seed.seed, seed.stream + cell * kCellStride + r});
        const UnimodalInstance inst =
            make_unimodal_instance(cfg.gen, cfg.alpha, cfg.delta, k_exp, r, rng);
        const UnimodalRunReport run = shortcut_unimodal(inst.score, inst.training, inst.x_new,
                                                        cfg.alpha, cfg.delta, k_exp, eps);
        refits[r] = run.refits;
        bounds[r] = run.refit_bound;
        if (!contained_with_slack(inst.exact, run.interval, 1e-9)) containment_bad[r] = 1;
        if (!inst.exact.is_empty() && inst.exact.parts().size() == 1) {
          const Interval& e = inst.exact.parts().front();
          if (e.lo >= -window + eps && e.hi <= window - eps) {
            const double excess = run.interval.length() - inst.exact.length();
            excesses[r] = excess;
            if (!(excess <= 2.0 * eps + 1e-9)) excess_bad[r] = 1;
          }
        }
      });
      const std::uint64_t max_refits = *std::max_element(refits.begin(), refits.end());
      const std::uint64_t bound = bounds.front();
      double max_excess = 0.0;
      std::size_t measured = 0;
      for (double e : excesses) {
        if (e >= 0.0) {
          max_excess = std::max(max_excess, e);
          ++measured;
        }
      }
      const double containment_violations = static_cast<double>(
          std::count(containment_bad.begin(), containment_bad.end(), 1));
      const double excess_violations =
          static_cast<double>(std::count(excess_bad.begin(), excess_bad.end(), 1));
      const bool cell_pass = containment_violations == 0.0 && excess_violations == 0.0 &&
                             max_refits <= bound;
      report.pass = report.pass && cell_pass;
      report.rows.push_back({"K=" + std::to_string(k_exp) + ":eps=" + fmt(eps),
                             {{"k_exponent", static_cast<double>(k_exp)},
                              {"eps", eps},
                              {"reps", static_cast<double>(reps)},
                              {"max_refits", static_cast<double>(max_refits)},
                              {"refit_bound", static_cast<double>(bound)},
                              {"containment_violations", containment_violations},
                              {"excess_violations", excess_violations},
                              {"excess_measured", static_cast<double>(measured)},
                              {"max_excess", max_excess}}});
      ++cell;
    }
  }
  report.wall_seconds = watch.seconds();
  return report;
}

namespace {

StepFunction random_ecdf(Rng& rng) {
  const std::size_t m = 3 + static_cast<std::size_t>(rng.next_u64() % 23);
  const std::size_t style = static_cast<std::size_t>(rng.next_u64() % 3);
  std::vector<double> sample(m);
  for (double& v : sample) {
    if (style == 0) {
      v = rng.normal();
    } else if (style == 1) {
      v = rng.uniform(-2.0, 2.0);
    } else {
      v = std::round(rng.uniform(-2.0, 2.0) * 4.0) / 4.0;
    }
  }
  return build_ecdf(sample);
}

StepFunction scale_argument(const StepFunction& f, double c) {
  std::vector<double> breakpoints = f.breakpoints();
  for (double& b : breakpoints) b /= c;
  std::vector<double> values = f.values();
  return StepFunction(std::move(breakpoints), std::move(values));
}

double brute_sup_norm(const StepFunction& f, const StepFunction& g) {
  double sup = 0.0;
  for (const StepFunction* s : {&f, &g}) {
    for (double b : s->breakpoints()) {
      sup = std::max(sup, std::abs(f(b) - g(b)));
      sup = std::max(sup, std::abs(f.left_limit(b) - g.left_limit(b)));
    }
  }
  return sup;
}

bool band_holds(const StepFunction& f, const StepFunction& g, double delta, double eps) {
  std::vector<double> candidates;
  for (const StepFunction* s : {&f, &g}) {
    for (double b : s->breakpoints()) {
      for (double t : {b, b - delta, b + delta}) {
        candidates.push_back(t);
        candidates.push_back(t - 1e-6);
        candidates.push_back(t + 1e-6);
      }
    }
  }
  for (double t : candidates) {
    if (g(t) > f(t + delta) + eps + 1e-12) return false;
    if (f(t - delta) - eps > g(t) + 1e-12) return false;
  }
  return true;
}

}  // namespace

std::vector<LemmaSuiteResult> run_lemma_suites(int reps, RngSeed seed) {
  if (reps < 1) throw argument_error("run_lemma_suites: reps must be positive");
  std::vector<LemmaSuiteResult> results;
  std::uint64_t block = 0;

  const auto run_suite = [&](const std::string& name,
                             const std::function<bool(Rng&, std::size_t)>& holds) {
    std::vector<char> failed(static_cast<std::size_t>(reps), 0);
    const std::uint64_t base = seed.stream + block * kBlockStride;
    parallel_for(failed.size(), [&](std::size_t r) {
      Rng rng({seed.seed, base + r});
      failed[r] = holds(rng, r) ? 0 : 1;
    });
    const int failures = static_cast<int>(std::count(failed.begin(), failed.end(), 1));
    results.push_back({name, reps, failures});
    ++block;
  };

  run_suite("gauge-hat-cdf-bound", [](Rng& rng, std::size_t r) {
    const std::size_t n = 3 + static_cast<std::size_t>(rng.next_u64() % 10);
    const GeneratorSpec gen = make_linear_gaussian(1, n);
    auto [training, probe] = generate(gen, rng);
    const double y = probe.y + rng.uniform(-2.0, 2.0);
    const double delta = rng.uniform01() < 0.2 ? 0.0 : rng.uniform(0.0, 1.5);
    ConformityScore c = ConformityScore::out_sample(Predictor::mean_only());
    switch (r % 4) {
      case 1:
        c = ConformityScore::in_sample(Predictor::mean_only());
        break;
      case 2:
        c = ConformityScore::in_sample(Predictor::ols());
        break;
      case 3:
        c = ConformityScore::out_sample(Predictor::knn(2));
        break;
      default:
        break;
    }
    return check_gauge_hat_bound(c, training, probe.x, y, delta);
  });

  run_suite("cross-shortcut-sandwich", [](Rng& rng, std::size_t r) {
    const std::size_t n = 4 + static_cast<std::size_t>(rng.next_u64() % 7);
    const GeneratorSpec gen = make_bounded_uniform(1, n);
    auto [training, probe] = generate(gen, rng);
    const double alpha = rng.uniform(0.05, 0.5);
    const double eps = rng.uniform(0.02, 0.5);
    const double delta1 = rng.uniform(-0.2, 0.5);
    const double delta2 = rng.uniform(0.01, 0.8);
    const GridSpec grid{-5.0, 5.0, 201};
    const ConformityScore c = r % 2 == 0
                                  ? ConformityScore::out_sample(Predictor::mean_only())
                                  : ConformityScore::in_sample(Predictor::mean_only());
    return check_sandwich(c, training, probe.x, alpha, eps, delta1, delta2, grid);
  });

  run_suite("gauge-symmetry-band", [](Rng& rng, std::size_t) {
    const StepFunction f = random_ecdf(rng);
    const StepFunction g = random_ecdf(rng);
    const double delta = rng.uniform01() < 0.25 ? 0.0 : rng.uniform(0.0, 1.2);
    const double forward = levy_gauge(f, g, delta).epsilon;
    const double backward = levy_gauge(g, f, delta).epsilon;
    if (forward != backward) return false;
    return band_holds(f, g, delta, forward);
  });

  run_suite("gauge-monotone-bounds", [](Rng& rng, std::size_t) {
    const StepFunction f = random_ecdf(rng);
    const StepFunction g = random_ecdf(rng);
    const double d1 = rng.uniform(0.0, 1.0);
    const double d2 = d1 + rng.uniform(0.0, 1.0);
    const double g0 = levy_gauge(f, g, 0.0).epsilon;
    const double g1 = levy_gauge(f, g, d1).epsilon;
    const double g2 = levy_gauge(f, g, d2).epsilon;
    if (!(g2 <= g1 + 1e-12) || !(g1 <= g0 + 1e-12)) return false;
    if (g0 < 0.0 || g0 > 1.0 || g1 < 0.0 || g2 < 0.0) return false;
    return std::abs(g0 - brute_sup_norm(f, g)) <= 1e-12;
  });

  run_suite("gauge-triangle", [](Rng& rng, std::size_t) {
    const StepFunction f = random_ecdf(rng);
    const StepFunction g = random_ecdf(rng);
    const StepFunction h = random_ecdf(rng);
    const double delta = rng.uniform(0.0, 1.0);
    const double eps = rng.uniform(0.0, 1.0);
    const double lhs = levy_gauge(f, h, delta + eps).epsilon;
    const double rhs = levy_gauge(f, g, delta).epsilon + levy_gauge(g, h, eps).epsilon;
    return lhs <= rhs + 1e-12;
  });

  run_suite("gauge-levy-squeeze", [](Rng& rng, std::size_t) {
    const StepFunction f = random_ecdf(rng);
    const StepFunction g = random_ecdf(rng);
    const double delta = rng.uniform01() < 0.25 ? 0.0 : rng.uniform(0.0, 1.2);
    const double gauge = levy_gauge(f, g, delta).epsilon;
    const double levy = levy_metric(f, g);
    return std::min(delta, gauge) <= levy + 5e-9 && levy <= std::max(delta, gauge) + 5e-9;
  });

  run_suite("gauge-scaling", [](Rng& rng, std::size_t) {
    const StepFunction f = random_ecdf(rng);
    const StepFunction g = random_ecdf(rng);
    const double delta = rng.uniform(0.0, 1.2);
    const double c = rng.uniform(0.4, 2.5);
    const double base = levy_gauge(f, g, delta).epsilon;
    const double scaled =
        levy_gauge(scale_argument(f, c), scale_argument(g, c), delta / c).epsilon;
    return std::abs(base - scaled) <= 1e-12;
  });

  run_suite("quantile-inequality", [](Rng& rng, std::size_t r) {
    const StepFunction f = random_ecdf(rng);
    const StepFunction g = random_ecdf(rng);
    const double delta = rng.uniform01() < 0.25 ? 0.0 : rng.uniform(0.0, 1.5);
    double alpha = rng.uniform(0.0, 1.0);
    if (r % 4 == 1) alpha = 0.0;
    if (r % 4 == 2) alpha = 1.0;
    if (r % 4 == 3) alpha = rng.uniform(-0.3, 1.3);
    return check_quantile_inequality(f, g, delta, alpha);
  });

  run_suite("gauge-upper-dominance", [](Rng& rng, std::size_t) {
    const StepFunction f = random_ecdf(rng);
    const StepFunction g = random_ecdf(rng);
    const double delta = rng.uniform(0.05, 1.2);
    const double k = rng.uniform(0.1, 3.0);
    const double mu = rng.uniform(-1.0, 1.0);
    const double gauge = levy_gauge(f, g, delta).epsilon;
    const GaugeBounds bounds = gauge_upper_bounds(f, g, delta, k, mu);
    return gauge <= bounds.windowed + 1e-12 && gauge <= bounds.global + 1e-12;
  });

  return results;
}

}  // namespace conformal
