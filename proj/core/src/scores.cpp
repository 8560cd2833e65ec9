#include "conformal_kit/scores.hpp"

#include <cmath>
#include <numeric>

#include "conformal_kit/step_function.hpp"

namespace conformal {

ConformityScore ConformityScore::in_sample(Predictor p) {
  ConformityScore c;
  c.kind_ = ScoreKind::in_sample;
  c.name_ = "in_sample:" + p.name();
  // |y * a - b| for affine fits and a scaled absolute residual for knn, so the
  // candidate-response profile is V-shaped for every supported closed form.
  c.unimodal_hint_ = p.affine_in_response() || p.kind() == PredictorKind::knn;
  c.pred_.push_back(std::move(p));
  return c;
}

ConformityScore ConformityScore::out_sample(Predictor p) {
  ConformityScore c;
  c.kind_ = ScoreKind::out_sample;
  c.name_ = "out_sample:" + p.name();
  c.unimodal_hint_ = true;  // |y - A(x, T)| with A free of y
  c.pred_.push_back(std::move(p));
  return c;
}

ConformityScore ConformityScore::custom(CustomScoreFn fn, std::string name, bool unimodal_hint) {
  if (!fn) throw argument_error("ConformityScore::custom: callback must be callable");
  ConformityScore c;
  c.kind_ = ScoreKind::custom;
  c.name_ = std::move(name);
  c.unimodal_hint_ = unimodal_hint;
  c.fn_ = std::move(fn);
  return c;
}

const Predictor& ConformityScore::predictor() const {
  if (pred_.empty()) throw unsupported_error("ConformityScore: custom score has no predictor");
  return pred_.front();
}

double ConformityScore::operator()(const Observation& candidate, const DataSet& training) const {
  double value = 0.0;
  switch (kind_) {
    case ScoreKind::in_sample:
      value = std::abs(candidate.y -
                       predict(pred_.front(), candidate.x, training.augmented(candidate)));
      break;
    case ScoreKind::out_sample:
      value = std::abs(candidate.y - predict(pred_.front(), candidate.x, training));
      break;
    case ScoreKind::custom:
      value = fn_(candidate, training);
      break;
  }
  if (std::isnan(value) || value < 0.0) {
    throw contract_error("ConformityScore: score must be nonnegative, got " +
                         std::to_string(value));
  }
  return value;
}

std::vector<double> loo_scores(const ConformityScore& c, const DataSet& training) {
  if (training.size() < 2) throw argument_error("loo_scores: need at least two observations");
  std::vector<double> out;
  out.reserve(training.size());
  for (std::size_t i = 0; i < training.size(); ++i) {
    out.push_back(c(training[i], training.without(i)));
  }
  return out;
}

Predictor parse_predictor_spec(const std::string& spec) {
  if (spec == "mean") return Predictor::mean_only();
  if (spec == "zero") return Predictor::constant_zero();
  if (spec == "ols") return Predictor::ols();
  const auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const std::string head = spec.substr(0, colon);
    const std::string arg = spec.substr(colon + 1);
    try {
      if (head == "ridge") {
        std::size_t used = 0;
        const double lambda = std::stod(arg, &used);
        if (used != arg.size()) throw config_error("trailing characters");
        return Predictor::ridge(lambda);
      }
      if (head == "knn") {
        std::size_t used = 0;
        const int k = std::stoi(arg, &used);
        if (used != arg.size()) throw config_error("trailing characters");
        return Predictor::knn(k);
      }
    } catch (const config_error&) {
      throw config_error("bad predictor parameter in '" + spec + "'");
    } catch (const std::exception&) {
      throw config_error("bad predictor parameter in '" + spec + "'");
    }
  }
  throw config_error("unknown predictor spec '" + spec +
                     "' (expected mean, zero, ols, ridge:<lambda>, or knn:<k>)");
}

ConformityScore parse_score_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw config_error("score spec '" + spec +
                       "' must look like in-sample:<predictor> or out-sample:<predictor>");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (kind == "in-sample") return ConformityScore::in_sample(parse_predictor_spec(rest));
  if (kind == "out-sample") return ConformityScore::out_sample(parse_predictor_spec(rest));
  throw config_error("score spec '" + spec + "' must start with in-sample: or out-sample:");
}

ScoreInstabilitySummary estimate_score_instability(
    const ConformityScore& c,
    const std::function<std::pair<DataSet, Observation>(Rng&)>& sampler, int reps, RngSeed seed,
    double threshold, StabilityForm form) {
  if (reps < 1) throw argument_error("estimate_score_instability: reps must be >= 1");
  std::vector<double> diffs(static_cast<std::size_t>(reps));
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng({seed.seed, seed.stream + static_cast<std::uint64_t>(rep)});
    auto [training, fresh] = sampler(rng);
    if (training.size() < 2) {
      throw argument_error("estimate_score_instability: sampler must give n >= 2");
    }
    const double base = c(fresh, training);
    double perturbed = 0.0;
    if (form == StabilityForm::deletion) {
      perturbed = c(fresh, training.without(training.size() - 1));
    } else {
      const Observation replacement = sampler(rng).second;
      perturbed = c(fresh, training.without(0).augmented(replacement));
    }
    diffs[static_cast<std::size_t>(rep)] = std::abs(base - perturbed);
  }
  ScoreInstabilitySummary out;
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
