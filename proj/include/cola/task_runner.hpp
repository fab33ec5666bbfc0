#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cola/backend.hpp"
#include "cola/event_model.hpp"
#include "cola/pipeline.hpp"

namespace cola {

struct Prediction {
  EventPair pair;
  double score = 0.0;
  bool label = false;
};

/// Labels the top-k candidates of `sequence` positive, k taken from its gold
/// labels. Ties go to the lower event index. Throws KUnknown when the
/// sequence is unlabeled and LengthMismatch when |scores| != n - 1.
std::vector<Prediction> rank_and_label(const EventSequence& sequence, std::span<const double> scores);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct ClassMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double macro_f1 = 0.0;
  /// No positives predicted or present; f1 reported as 0.
  bool f1_undefined = false;
};

ClassMetrics metrics_from(const Confusion& c);

struct KBreakdown {
  std::size_t sequences = 0;
  Confusion confusion;
  ClassMetrics metrics;
};

struct MetricsReport {
  std::string split = "all";
  Confusion confusion;
  ClassMetrics metrics;
  std::map<std::size_t, KBreakdown> per_k;
  nlohmann::json config = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// Pairwise metrics over aligned predictions and gold labels. Per-k rows
/// group pairs by the gold positive count of their sequence. Throws
/// Misaligned when the lists differ in length or a gold label is missing.
MetricsReport evaluate(const std::vector<Prediction>& predictions, const std::vector<bool>& gold);
/// Gold labels read from each prediction's pair.
MetricsReport evaluate(const std::vector<Prediction>& predictions);

struct BaselineExpectation {
  double accuracy = 0.0;
  double f1 = 0.0;
  bool f1_undefined = false;
  /// Expected accuracy per k for a single sequence.
  std::map<std::size_t, double> per_k_accuracy;
};

/// Exact expectation of a uniformly random k-subset labeling over
/// four-candidate sequences. Throws UnsupportedSequenceLength otherwise.
BaselineExpectation random_baseline_expectation(const SplitCounts& counts);

struct MonteCarloEstimate {
  std::size_t trials = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
};

/// Mean accuracy and F1 of `trials` independent uniform random scorings,
/// each labeled top-k. Deterministic in `seed`.
MonteCarloEstimate monte_carlo_random_baseline(const std::vector<EventSequence>& dataset, std::size_t trials,
                                               std::uint64_t seed);

struct ScoredPair {
  double score = 0.0;
  nlohmann::json trace = nlohmann::json::object();
};

/// Scores candidate `index` (1-based) of a sequence against its last event;
/// higher means more likely causal.
using Scorer = std::function<ScoredPair(const EventSequence&, std::size_t)>;

/// "If E1, E2, ..., En, En because Ei".
std::string baseline_prompt(const EventSequence& sequence, std::size_t index);

Scorer cola_scorer(Engine& engine);
/// Mean token log-probability of the baseline prompt (negated log-perplexity).
Scorer clm_scorer(Client& client, std::string model);
/// Pseudo-log-likelihood of the baseline prompt.
Scorer cloze_scorer(Client& client, std::string model);
/// Uniform score in [0, 1) depending only on (seed, sequence id, index).
Scorer random_scorer(std::uint64_t seed);

/// exp(-mean(logprobs)).
double perplexity(std::span<const double> logprobs);

struct ExperimentOptions {
  std::size_t parallelism = 1;
  nlohmann::json config = nlohmann::json::object();
};

struct ExperimentResult {
  /// One report per split present, in enum order, then "all".
  std::vector<MetricsReport> reports;
  std::vector<Prediction> predictions;
  /// One entry per pair in canonical pair order.
  std::vector<nlohmann::json> traces;

  nlohmann::json reports_json() const;
};

/// Scores every pair (concurrently up to `parallelism`), ranks per sequence
/// and evaluates per split. Output is independent of thread scheduling.
ExperimentResult run_experiment(const std::vector<EventSequence>& dataset, const Scorer& scorer,
                                const ExperimentOptions& options);

}  // namespace cola
