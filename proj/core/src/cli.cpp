#include "conformal_kit/cli.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "conformal_kit/conformal_sets.hpp"
#include "conformal_kit/experiments.hpp"
#include "conformal_kit/report_io.hpp"
#include "conformal_kit/scores.hpp"
#include "json.hpp"

#ifndef CONFORMAL_KIT_VERSION
#define CONFORMAL_KIT_VERSION "0.0.0"
#endif

namespace conformal {

namespace {

using nlohmann::json;

double parse_number(const std::string& token, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(token, &pos);
    while (pos < token.size() && std::isspace(static_cast<unsigned char>(token[pos]))) ++pos;
    if (pos != token.size()) throw config_error("");
    return v;
  } catch (const std::exception&) {
    throw config_error("cannot parse number '" + token + "' in " + where);
  }
}

std::vector<double> parse_number_list(const std::string& text, const std::string& where) {
  std::vector<double> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    const std::string token = text.substr(start, comma == std::string::npos
                                                     ? std::string::npos
                                                     : comma - start);
    out.push_back(parse_number(token, where));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

DataSet read_dataset_csv(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw config_error("cannot read data file: " + path);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  while (std::getline(file, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(parse_number_list(line, path + ":" + std::to_string(lineno)));
  }
  if (rows.empty()) throw config_error("data file is empty: " + path);
  const std::size_t width = rows.front().size();
  DataSet data(width - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) {
      throw config_error(path + ": row " + std::to_string(i + 1) + " has " +
                         std::to_string(rows[i].size()) + " fields, expected " +
                         std::to_string(width));
    }
    data.add(Observation{rows[i][0],
                         std::vector<double>(rows[i].begin() + 1, rows[i].end())});
  }
  return data;
}

void expect_keys(const json& j, std::initializer_list<const char*> allowed,
                 const std::string& where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw config_error("unknown key '" + item.key() + "' in " + where);
  }
}

double read_double(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw config_error(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

int read_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw config_error(std::string("'") + key + "' must be an integer");
  return v.get<int>();
}

std::size_t read_size(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw config_error(std::string("'") + key + "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

std::string read_string(const json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_string()) throw config_error(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::size_t> read_size_array(const json& j, const char* key,
                                         std::vector<std::size_t> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_array()) throw config_error(std::string("'") + key + "' must be an array");
  std::vector<std::size_t> out;
  for (const json& e : v) {
    if (!e.is_number_integer() || e.get<long long>() < 0) {
      throw config_error(std::string("'") + key + "' must hold nonnegative integers");
    }
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

std::vector<int> read_int_array(const json& j, const char* key, std::vector<int> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_array()) throw config_error(std::string("'") + key + "' must be an array");
  std::vector<int> out;
  for (const json& e : v) {
    if (!e.is_number_integer()) {
      throw config_error(std::string("'") + key + "' must hold integers");
    }
    out.push_back(e.get<int>());
  }
  return out;
}

std::vector<double> read_double_array(const json& j, const char* key,
                                      std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_array()) throw config_error(std::string("'") + key + "' must be an array");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw config_error(std::string("'") + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

GeneratorSpec parse_generator(const json& j) {
  GeneratorSpec spec;
  if (j.is_null()) return spec;
  if (!j.is_object()) throw config_error("'generator' must be an object");
  expect_keys(j, {"family", "p", "n", "theta_scale", "noise_sd", "df"}, "generator");
  const std::string family = read_string(j, "family", "linear-gaussian");
  if (family == "linear-gaussian") {
    spec.kind = GeneratorKind::linear_gaussian;
  } else if (family == "linear-heavy-tail") {
    spec.kind = GeneratorKind::linear_heavy_tail;
  } else if (family == "bounded-uniform") {
    spec.kind = GeneratorKind::bounded_uniform;
  } else {
    throw config_error("unknown generator family '" + family +
                       "' (expected linear-gaussian, linear-heavy-tail, or bounded-uniform)");
  }
  spec.p = read_size(j, "p", spec.p);
  spec.n = read_size(j, "n", spec.n);
  spec.theta_scale = read_double(j, "theta_scale", spec.theta_scale);
  spec.noise_sd = read_double(j, "noise_sd", spec.noise_sd);
  spec.df = read_double(j, "df", spec.df);
  return spec;
}

json load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw config_error("cannot read config file: " + path);
  try {
    return json::parse(file);
  } catch (const json::exception& e) {
    throw config_error("invalid JSON in " + path + ": " + e.what());
  }
}

ExperimentReport dispatch_experiment(const std::string& name, const json& j, RngSeed seed) {
  try {
    if (name == "marginal") {
      expect_keys(j, {"method", "generator", "score", "alpha", "delta", "reps"}, name);
      MarginalCoverageConfig cfg;
      cfg.method = parse_method(read_string(j, "method", method_name(cfg.method)));
      cfg.gen = parse_generator(j.contains("generator") ? j.at("generator") : json());
      cfg.score = read_string(j, "score", cfg.score);
      cfg.alpha = read_double(j, "alpha", cfg.alpha);
      cfg.delta = read_double(j, "delta", cfg.delta);
      cfg.reps = read_int(j, "reps", cfg.reps);
      return run_marginal_coverage(cfg, seed);
    }
    if (name == "conditional") {
      expect_keys(j,
                  {"method", "generator", "n_values", "score", "alpha", "delta", "outer_reps",
                   "inner_reps"},
                  name);
      ConditionalCoverageConfig cfg;
      cfg.method = parse_method(read_string(j, "method", method_name(cfg.method)));
      cfg.gen = parse_generator(j.contains("generator") ? j.at("generator") : json());
      cfg.n_values = read_size_array(j, "n_values", cfg.n_values);
      cfg.score = read_string(j, "score", cfg.score);
      cfg.alpha = read_double(j, "alpha", cfg.alpha);
      cfg.delta = read_double(j, "delta", cfg.delta);
      cfg.outer_reps = read_int(j, "outer_reps", cfg.outer_reps);
      cfg.inner_reps = read_int(j, "inner_reps", cfg.inner_reps);
      return run_conditional_coverage(cfg, seed);
    }
    if (name == "equivalence") {
      expect_keys(j,
                  {"generator", "n_values", "score", "alpha", "delta1", "delta2", "eps", "reps",
                   "grid_points"},
                  name);
      EquivalenceConfig cfg;
      cfg.gen = make_bounded_uniform(2, 30);
      if (j.contains("generator")) cfg.gen = parse_generator(j.at("generator"));
      cfg.n_values = read_size_array(j, "n_values", cfg.n_values);
      cfg.score = read_string(j, "score", cfg.score);
      cfg.alpha = read_double(j, "alpha", cfg.alpha);
      cfg.delta1 = read_double(j, "delta1", cfg.delta1);
      cfg.delta2 = read_double(j, "delta2", cfg.delta2);
      cfg.eps = read_double(j, "eps", cfg.eps);
      cfg.reps = read_int(j, "reps", cfg.reps);
      cfg.grid_points = read_size(j, "grid_points", cfg.grid_points);
      return run_equivalence(cfg, seed);
    }
    if (name == "finite-sample") {
      expect_keys(j,
                  {"generator", "score", "alpha_grid", "delta", "eps1", "eps2", "outer_reps",
                   "inner_reps", "stability_reps", "truncation_k"},
                  name);
      FiniteSampleBoundConfig cfg;
      cfg.gen = parse_generator(j.contains("generator") ? j.at("generator") : json());
      cfg.score = read_string(j, "score", cfg.score);
      cfg.alpha_grid = read_double_array(j, "alpha_grid", cfg.alpha_grid);
      cfg.delta = read_double(j, "delta", cfg.delta);
      cfg.eps1 = read_double(j, "eps1", cfg.eps1);
      cfg.eps2 = read_double(j, "eps2", cfg.eps2);
      cfg.outer_reps = read_int(j, "outer_reps", cfg.outer_reps);
      cfg.inner_reps = read_int(j, "inner_reps", cfg.inner_reps);
      cfg.stability_reps = read_int(j, "stability_reps", cfg.stability_reps);
      cfg.truncation_k = read_double(j, "truncation_k", cfg.truncation_k);
      return run_finite_sample_bound(cfg, seed);
    }
    if (name == "refit") {
      expect_keys(j,
                  {"generator", "alpha", "delta", "eps_values", "k_exponents", "reps_per_cell"},
                  name);
      RefitBenchmarkConfig cfg;
      cfg.gen = parse_generator(j.contains("generator") ? j.at("generator") : json());
      cfg.alpha = read_double(j, "alpha", cfg.alpha);
      cfg.delta = read_double(j, "delta", cfg.delta);
      cfg.eps_values = read_double_array(j, "eps_values", cfg.eps_values);
      cfg.k_exponents = read_int_array(j, "k_exponents", cfg.k_exponents);
      cfg.reps_per_cell = read_int(j, "reps_per_cell", cfg.reps_per_cell);
      return run_refit_benchmark(cfg, seed);
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("invalid config: ") + e.what());
  }
  throw config_error("unknown experiment '" + name +
                     "' (expected marginal, conditional, equivalence, finite-sample, or refit)");
}

void append_bound(std::string& out, double v) {
  if (std::isfinite(v)) {
    out += format_double(v);
  } else {
    out += v > 0 ? "\"inf\"" : "\"-inf\"";
  }
}

std::string prediction_to_json(const std::string& method, const std::string& score, double alpha,
                               double delta, const DataSet& data,
                               const std::vector<double>& x, bool exact,
                               const std::optional<GridSpec>& grid, const IntervalUnion& set) {
  std::string out = "{\n";
  out += "  \"method\": \"" + method + "\",\n";
  out += "  \"score\": \"" + score + "\",\n";
  out += "  \"alpha\": " + format_double(alpha) + ",\n";
  out += "  \"delta\": " + format_double(delta) + ",\n";
  out += "  \"n\": " + std::to_string(data.size()) + ",\n";
  out += "  \"dim\": " + std::to_string(data.dim()) + ",\n";
  out += "  \"x\": [";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(x[i]);
  }
  out += "],\n";
  out += std::string("  \"exact\": ") + (exact ? "true" : "false") + ",\n";
  if (grid) {
    out += "  \"grid\": {\"lo\": " + format_double(grid->lo) +
           ", \"hi\": " + format_double(grid->hi) +
           ", \"points\": " + std::to_string(grid->points) + "},\n";
  }
  out += "  \"intervals\": [";
  const auto& parts = set.parts();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += ",";
    out += "\n    {\"lo\": ";
    append_bound(out, parts[i].lo);
    out += ", \"hi\": ";
    append_bound(out, parts[i].hi);
    out += std::string(", \"lo_closed\": ") + (parts[i].lo_closed ? "true" : "false");
    out += std::string(", \"hi_closed\": ") + (parts[i].hi_closed ? "true" : "false") + "}";
  }
  out += parts.empty() ? "],\n" : "\n  ],\n";
  out += "  \"length\": ";
  append_bound(out, set.length());
  out += ",\n";
  out += std::string("  \"empty\": ") + (set.is_empty() ? "true" : "false") + "\n";
  out += "}\n";
  return out;
}

struct PredictOptions {
  std::string data_path;
  std::string method = "shortcut";
  std::string score = "out-sample:mean";
  double alpha = 0.1;
  double delta = 0.0;
  std::string x_text;
  std::string grid_text;
};

int run_predict(const PredictOptions& opts) {
  const DataSet data = read_dataset_csv(opts.data_path);
  const std::vector<double> x = parse_number_list(opts.x_text, "--x");
  if (x.size() != data.dim()) {
    throw config_error("--x has " + std::to_string(x.size()) + " entries but the data has " +
                       std::to_string(data.dim()) + " features");
  }
  if (std::isnan(opts.alpha) || opts.alpha < 0.0 || opts.alpha > 1.0) {
    throw config_error("--alpha must lie in [0, 1]");
  }
  if (!std::isfinite(opts.delta)) throw config_error("--delta must be finite");
  const Method method = parse_method(opts.method);
  const ConformityScore c = parse_score_spec(opts.score);

  std::optional<GridSpec> grid;
  bool exact = true;
  IntervalUnion set;
  switch (method) {
    case Method::shortcut: {
      if (c.kind() == ScoreKind::out_sample) {
        const double center = predict(c.predictor(), x, data);
        set = shortcut_affine(AffineCoefficients{1.0, center},
                              shortcut_threshold(c, data, opts.alpha), opts.delta);
      } else if (opts.score.rfind("in-sample:knn:", 0) == 0) {
        const int k = static_cast<int>(
            parse_number(opts.score.substr(std::string("in-sample:knn:").size()), "--score"));
        set = shortcut_knn(k, data, x, opts.alpha, opts.delta);
      } else {
        set = shortcut_affine(affine_coefficients(c.predictor(), x, data),
                              shortcut_threshold(c, data, opts.alpha), opts.delta);
      }
      break;
    }
    case Method::jackknife:
      set = jackknife_symmetric(c.predictor(), data, x, opts.alpha, opts.delta);
      break;
    case Method::jackknife_plus:
      set = jackknife_plus_symmetric(c.predictor(), data, x, opts.alpha, opts.delta);
      break;
    case Method::full:
    case Method::cross: {
      exact = false;
      if (opts.grid_text.empty()) {
        const double center = predict(c.predictor(), x, data);
        double spread = 0.0;
        if (data.size() >= 2) {
          const std::vector<double> ys = data.responses();
          double mu = 0.0;
          for (double v : ys) mu += v;
          mu /= static_cast<double>(ys.size());
          double ss = 0.0;
          for (double v : ys) ss += (v - mu) * (v - mu);
          spread = std::sqrt(ss / static_cast<double>(ys.size() - 1));
        }
        if (!(spread > 0.0)) spread = 1.0;
        grid = GridSpec{center - 10.0 * spread, center + 10.0 * spread, 4001};
      } else {
        const std::vector<double> g = parse_number_list(opts.grid_text, "--grid");
        if (g.size() != 3 || g[2] < 2.0 || g[2] != std::floor(g[2])) {
          throw config_error("--grid must be lo,hi,points with integer points >= 2");
        }
        grid = GridSpec{g[0], g[1], static_cast<std::size_t>(g[2])};
      }
      grid->validate();
      set = method == Method::full
                ? full_conformal_set(c, data, x, opts.alpha, opts.delta, *grid)
                : cross_conformal_set(c, data, x, opts.alpha, opts.delta, *grid);
      break;
    }
  }
  const std::string out = prediction_to_json(opts.method, opts.score, opts.alpha, opts.delta,
                                             data, x, exact, grid, set);
  std::fputs(out.c_str(), stdout);
  return 0;
}

struct SimulateOptions {
  std::string experiment;
  std::string config_path;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  std::string out_prefix;
};

int run_simulate(const SimulateOptions& opts) {
  const json cfg = load_config(opts.config_path);
  if (!cfg.is_object()) throw config_error("config root must be a JSON object");
  const ExperimentReport report =
      dispatch_experiment(opts.experiment, cfg, RngSeed{opts.seed, opts.stream});
  const std::string csv = report_to_csv(report);
  std::fputs(csv.c_str(), stdout);
  if (!opts.out_prefix.empty()) {
    write_text_file(opts.out_prefix + ".json", report_to_json(report));
    write_text_file(opts.out_prefix + ".csv", csv);
  }
  std::fprintf(stderr, "%s finished in %.2f s\n", report.experiment.c_str(),
               report.wall_seconds);
  if (report.has_pass_criterion) {
    std::fprintf(stderr, "%s\n", report.pass ? "PASS" : "FAIL");
    if (!report.pass) return 2;
  }
  return 0;
}

int run_check_lemmas(int reps, std::uint64_t seed, std::uint64_t stream) {
  const std::vector<LemmaSuiteResult> results = run_lemma_suites(reps, RngSeed{seed, stream});
  bool all_ok = true;
  for (const LemmaSuiteResult& r : results) {
    const bool ok = r.failures == 0;
    all_ok = all_ok && ok;
    std::printf("%-24s reps=%-6d failures=%-4d %s\n", r.name.c_str(), r.reps, r.failures,
                ok ? "ok" : "FAIL");
  }
  return all_ok ? 0 : 2;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"conformal prediction sets, stability diagnostics, and experiment harness"};
  app.require_subcommand(1);

  PredictOptions predict_opts;
  CLI::App* predict_cmd = app.add_subcommand("predict", "compute a prediction set for one input");
  predict_cmd->add_option("data", predict_opts.data_path,
                          "headerless CSV, response first on each row")
      ->required();
  predict_cmd->add_option("--method", predict_opts.method,
                          "full, shortcut, cross, jackknife, or jackknife-plus");
  predict_cmd->add_option("--score", predict_opts.score,
                          "score spec such as out-sample:mean or in-sample:ridge:1.0");
  predict_cmd->add_option("--alpha", predict_opts.alpha, "miscoverage level in [0, 1]");
  predict_cmd->add_option("--delta", predict_opts.delta, "score slack");
  predict_cmd->add_option("--x", predict_opts.x_text, "comma-separated feature vector");
  predict_cmd->add_option("--grid", predict_opts.grid_text,
                          "lo,hi,points response grid for grid-based methods");

  SimulateOptions sim_opts;
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "run a configured experiment");
  simulate_cmd
      ->add_option("experiment", sim_opts.experiment,
                   "marginal, conditional, equivalence, finite-sample, or refit")
      ->required();
  simulate_cmd->add_option("--config", sim_opts.config_path, "JSON config file")->required();
  simulate_cmd->add_option("--seed", sim_opts.seed, "random seed");
  simulate_cmd->add_option("--stream", sim_opts.stream, "random stream offset");
  simulate_cmd->add_option("--out", sim_opts.out_prefix,
                           "write <prefix>.json and <prefix>.csv reports");

  int lemma_reps = 1000;
  std::uint64_t lemma_seed = 1;
  std::uint64_t lemma_stream = 0;
  CLI::App* lemmas_cmd =
      app.add_subcommand("check-lemmas", "randomised checks of the library's identities");
  lemmas_cmd->add_option("--reps", lemma_reps, "instances per suite");
  lemmas_cmd->add_option("--seed", lemma_seed, "random seed");
  lemmas_cmd->add_option("--stream", lemma_stream, "random stream offset");

  CLI::App* version_cmd = app.add_subcommand("version", "print the tool version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n\n", e.what());
    std::fputs(app.help().c_str(), stderr);
    return 1;
  }

  try {
    if (*version_cmd) {
      std::printf("conformal-kit %s\n", CONFORMAL_KIT_VERSION);
      return 0;
    }
    if (*predict_cmd) return run_predict(predict_opts);
    if (*simulate_cmd) return run_simulate(sim_opts);
    if (*lemmas_cmd) return run_check_lemmas(lemma_reps, lemma_seed, lemma_stream);
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace conformal
