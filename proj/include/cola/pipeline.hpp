#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cola/backend.hpp"
#include "cola/causal_estimator.hpp"
#include "cola/covariate_sampler.hpp"
#include "cola/event_model.hpp"
#include "cola/intervention_generator.hpp"
#include "cola/temporal_predictor.hpp"

namespace cola {

struct MatchConfig {
  double epsilon = 0.01;
  Normalizations normalizations;
  /// Skip matching and average over every intervention.
  bool keep_all = false;
};

struct PipelineConfig {
  SamplerConfig sampler;
  InterventionConfig interventions;
  MatchConfig match;
  std::string temporal_model = "bert-large-temporal";
};

nlohmann::json to_json(const PipelineConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig pipeline_config_from_json(const nlohmann::json& doc, PipelineConfig base = {});

struct MatchedIntervention {
  Event intervention;
  double score = 0.0;
  /// Absent under keep-all, where no distance is computed.
  std::optional<double> distance;
};

struct CausalEstimate {
  EventPair pair;
  double delta = 0.0;
  double treatment_score = 0.0;
  std::vector<MatchedIntervention> matched;
  std::size_t rejected = 0;

  std::vector<Event> covariates;
  std::vector<Event> interventions;
  std::size_t zero_denominators = 0;
  std::size_t degenerate_scores = 0;
  /// Intervention generation produced nothing usable; delta fell back to the treatment score.
  bool interventions_empty = false;
  nlohmann::json config_snapshot;

  nlohmann::json to_json() const;
};

/// Runs sampler -> intervention generator -> propensity -> matching -> estimand
/// for one (Ei, En) pair. Safe to call from several threads at once.
class Engine {
 public:
  Engine(Client& client, PipelineConfig config);

  CausalEstimate estimate_pair(const EventSequence& sequence, std::size_t index);

  const PipelineConfig& config() const noexcept { return config_; }
  TemporalPredictor& predictor() noexcept { return predictor_; }

 private:
  double outcome(const Event& a, const Event& b, std::size_t& degenerate);
  PropensityVector propensity(const Event& subject, const std::vector<Event>& covariates, const Event& anchor,
                              std::size_t& degenerate);

  Client& client_;
  PipelineConfig config_;
  TemporalPredictor predictor_;
};

}  // namespace cola
