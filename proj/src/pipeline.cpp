#include "cola/pipeline.hpp"

#include <cmath>
#include <set>

#include "cola/error.hpp"

namespace cola {

using nlohmann::json;

namespace {

template <typename F>
auto staged(const char* stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

void check_keys(const json& doc, const char* where, std::initializer_list<const char*> allowed) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, std::string(where) + " must be an object");
  for (const auto& item : doc.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw Error(ErrorCode::InvalidArgument, std::string("unknown key '") + item.key() + "' in " + where);
  }
}

template <typename T>
void read(const json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad value for '") + key + "'");
  }
}

json codes_json(const std::vector<ControlCode>& codes) {
  json out = json::array();
  for (auto c : codes) out.push_back(std::string(to_string(c)));
  return out;
}

}  // namespace

json to_json(const PipelineConfig& c) {
  json doc;
  doc["sampler"] = {{"per_timestamp_samples", c.sampler.per_timestamp_samples},
                    {"n", c.sampler.n},
                    {"mode", std::string(to_string(c.sampler.mode))},
                    {"multistamp", c.sampler.multistamp},
                    {"max_new_tokens", c.sampler.max_new_tokens},
                    {"temperature", c.sampler.temperature},
                    {"seed", c.sampler.seed},
                    {"model", c.sampler.model}};
  doc["interventions"] = {{"enabled", c.interventions.enabled},
                          {"codes", codes_json(c.interventions.codes)},
                          {"cap", c.interventions.cap},
                          {"temperature", c.interventions.temperature},
                          {"max_new_tokens", c.interventions.max_new_tokens},
                          {"span_method", std::string(to_string(c.interventions.span_method))},
                          {"seed", c.interventions.seed},
                          {"model", c.interventions.model}};
  doc["match"] = {{"epsilon", c.match.epsilon},
                  {"normalizations", c.match.normalizations.letters()},
                  {"keep_all", c.match.keep_all}};
  doc["temporal_model"] = c.temporal_model;
  return doc;
}

PipelineConfig pipeline_config_from_json(const json& doc, PipelineConfig c) {
  check_keys(doc, "pipeline config", {"sampler", "interventions", "match", "temporal_model"});
  read(doc, "temporal_model", c.temporal_model);
  if (doc.contains("sampler")) {
    const auto& s = doc.at("sampler");
    check_keys(s, "sampler",
               {"per_timestamp_samples", "n", "mode", "multistamp", "max_new_tokens", "temperature", "seed", "model"});
    read(s, "per_timestamp_samples", c.sampler.per_timestamp_samples);
    read(s, "n", c.sampler.n);
    if (s.contains("mode")) c.sampler.mode = parse_sampling_mode(s.at("mode").get<std::string>());
    read(s, "multistamp", c.sampler.multistamp);
    read(s, "max_new_tokens", c.sampler.max_new_tokens);
    read(s, "temperature", c.sampler.temperature);
    read(s, "seed", c.sampler.seed);
    read(s, "model", c.sampler.model);
  }
  if (doc.contains("interventions")) {
    const auto& s = doc.at("interventions");
    check_keys(s, "interventions",
               {"enabled", "codes", "cap", "temperature", "max_new_tokens", "span_method", "seed", "model"});
    read(s, "enabled", c.interventions.enabled);
    if (s.contains("codes")) {
      const auto& codes = s.at("codes");
      if (codes.is_string()) {
        c.interventions.codes = parse_control_codes(codes.get<std::string>());
      } else {
        std::string csv;
        for (const auto& v : codes) csv += (csv.empty() ? "" : ",") + v.get<std::string>();
        c.interventions.codes = parse_control_codes(csv);
      }
    }
    read(s, "cap", c.interventions.cap);
    read(s, "temperature", c.interventions.temperature);
    read(s, "max_new_tokens", c.interventions.max_new_tokens);
    if (s.contains("span_method"))
      c.interventions.span_method = parse_span_method(s.at("span_method").get<std::string>());
    read(s, "seed", c.interventions.seed);
    read(s, "model", c.interventions.model);
  }
  if (doc.contains("match")) {
    const auto& s = doc.at("match");
    check_keys(s, "match", {"epsilon", "normalizations", "keep_all"});
    read(s, "epsilon", c.match.epsilon);
    if (s.contains("normalizations"))
      c.match.normalizations = Normalizations::parse(s.at("normalizations").get<std::string>());
    read(s, "keep_all", c.match.keep_all);
  }
  if (!(c.match.epsilon >= 0.0) || !std::isfinite(c.match.epsilon))
    throw Error(ErrorCode::InvalidArgument, "epsilon must be a finite number >= 0");
  return c;
}

json CausalEstimate::to_json() const {
  json doc;
  doc["sequence_id"] = pair.sequence_id;
  doc["cause_index"] = pair.cause_index;
  doc["effect_index"] = pair.effect_index;
  doc["gold"] = pair.gold ? json(*pair.gold) : json(nullptr);
  doc["delta"] = delta;
  doc["treatment_score"] = treatment_score;
  json m = json::array();
  for (const auto& x : matched) {
    m.push_back({{"intervention", x.intervention.text()},
                 {"score", x.score},
                 {"distance", x.distance ? json(*x.distance) : json(nullptr)}});
  }
  doc["matched"] = std::move(m);
  doc["rejected"] = rejected;
  json cov = json::array();
  for (const auto& e : covariates) cov.push_back(e.text());
  doc["covariates"] = std::move(cov);
  json ints = json::array();
  for (const auto& e : interventions) ints.push_back(e.text());
  doc["interventions"] = std::move(ints);
  doc["diagnostics"] = {{"zero_denominators", zero_denominators},
                        {"degenerate_scores", degenerate_scores},
                        {"interventions_empty", interventions_empty}};
  doc["config"] = config_snapshot;
  return doc;
}

Engine::Engine(Client& client, PipelineConfig config)
    : client_(client), config_(std::move(config)), predictor_(client, config_.temporal_model) {
  config_.match.normalizations.validate();
}

double Engine::outcome(const Event& a, const Event& b, std::size_t& degenerate) {
  const auto& norms = config_.match.normalizations;
  const double forward = predictor_.score(a, b).value;
  double backward = 0.0;
  if (norms.cooccurrence || norms.estimand) backward = predictor_.score(b, a).value;
  const auto s = outcome_score(forward, backward, norms);
  if (s.degenerate) ++degenerate;
  return s.value;
}

PropensityVector Engine::propensity(const Event& subject, const std::vector<Event>& covariates,
                                    const Event& anchor, std::size_t& degenerate) {
  const auto& norms = config_.match.normalizations;
  auto f = [&](const Event& x, const Event& y) {
    const auto s = predictor_.score(x, y, norms.simplify);
    if (s.degenerate) ++degenerate;
    return s.value;
  };
  if (norms.direct) {
    PropensityVector q;
    for (const auto& x : covariates) q.values.push_back(f(subject, x));
    return q;
  }
  std::vector<double> joint, marginal;
  joint.reserve(covariates.size());
  marginal.reserve(covariates.size());
  for (const auto& x : covariates) {
    joint.push_back(f(x, subject));
    marginal.push_back(f(x, anchor));
  }
  return propensity_from_scores(joint, marginal, norms.covariate);
}

CausalEstimate Engine::estimate_pair(const EventSequence& sequence, std::size_t index) {
  validate(sequence);
  if (index < 1 || index >= sequence.size())
    throw Error(ErrorCode::InvalidArgument, "event index " + std::to_string(index) + " out of range for sequence " +
                                                sequence.id);
  CausalEstimate est;
  est.pair.sequence_id = sequence.id;
  est.pair.cause_index = index;
  est.pair.effect_index = sequence.size();
  if (sequence.labeled()) est.pair.gold = sequence.labels[index - 1];
  est.config_snapshot = to_json(config_);

  const Event& treatment = sequence.event(index);
  const Event& outcome_event = sequence.last();

  est.treatment_score = staged("temporal", [&] { return outcome(treatment, outcome_event, est.degenerate_scores); });
  est.delta = est.treatment_score;
  if (!config_.interventions.enabled) return est;

  try {
    est.interventions = staged("interventions", [&] {
      return generate_interventions(client_, treatment, config_.interventions).interventions;
    });
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyInterventionSet) throw;
    est.interventions_empty = true;
    return est;
  }

  std::vector<Match> matches;
  if (config_.match.keep_all) {
    for (std::size_t i = 0; i < est.interventions.size(); ++i) matches.push_back({i, 0.0});
  } else {
    const auto covariates =
        staged("covariates", [&] { return sample_covariates(client_, sequence, index, config_.sampler); });
    est.covariates = covariates.covariates;
    staged("propensity", [&] {
      const auto treatment_q = propensity(treatment, est.covariates, treatment, est.degenerate_scores);
      est.zero_denominators += treatment_q.zero_denominators;
      std::vector<PropensityVector> candidates;
      candidates.reserve(est.interventions.size());
      for (const auto& a : est.interventions) {
        candidates.push_back(propensity(a, est.covariates, treatment, est.degenerate_scores));
        est.zero_denominators += candidates.back().zero_denominators;
      }
      matches = matched_set(treatment_q, candidates, config_.match.epsilon);
    });
  }

  std::vector<double> scores;
  staged("temporal", [&] {
    for (const auto& m : matches) {
      const auto& a = est.interventions[m.index];
      const double s = outcome(a, outcome_event, est.degenerate_scores);
      scores.push_back(s);
      MatchedIntervention mi{a, s, std::nullopt};
      if (!config_.match.keep_all) mi.distance = m.distance;
      est.matched.push_back(std::move(mi));
    }
  });
  est.rejected = est.interventions.size() - est.matched.size();
  est.delta = estimand(est.treatment_score, scores);
  return est;
}

}  // namespace cola
