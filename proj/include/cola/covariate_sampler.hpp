#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cola/backend.hpp"
#include "cola/event_model.hpp"

namespace cola {

enum class SamplingMode { Union, Intersection };
std::string_view to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(std::string_view name);

struct SamplerConfig {
  int per_timestamp_samples = 50;
  std::size_t n = 40;
  SamplingMode mode = SamplingMode::Union;
  /// false samples only before the treatment event itself.
  bool multistamp = true;
  int max_new_tokens = 15;
  double temperature = 0.9;
  std::int64_t seed = 0;
  std::string model = "gpt-j-6b";
};

/// Covariates in canonical order (sorted by text, deduplicated).
struct CovariateSet {
  std::vector<Event> covariates;
  /// 1-based timestamps whose sample contained each covariate.
  std::map<std::string, std::set<std::size_t>> source_timestamps;
  std::size_t target = 0;

  std::size_t size() const noexcept { return covariates.size(); }
};

/// Cleans one raw generation into a covariate: first sentence, trimmed.
/// Returns nullopt for degenerate text (under 3 characters or no letter).
std::optional<Event> clean_covariate(std::string_view raw);

/// Dedup key: trimmed text with its first character lowercased.
std::string dedup_key(std::string_view text);

/// Cleans, deduplicates and canonically orders raw generations.
std::vector<Event> canonical_events(const std::vector<std::string>& raw);

/// Prompts "<event> Before that," and returns the cleaned covariates.
std::vector<Event> sample_before(Client& client, const Event& event, int count,
                                 const SamplerConfig& config);

/// Round-robin merge over timestamps 1..i in ascending order, each set read
/// in canonical order, skipping duplicates, stopping at `n` covariates.
/// Throws AllSetsEmpty when every set is empty.
CovariateSet merge_union(const std::vector<std::vector<Event>>& sets, std::size_t n);

/// Prompt used for the intersection variant over events Ei..En.
std::string intersection_prompt(const std::vector<Event>& events);

CovariateSet sample_intersection(Client& client, const std::vector<Event>& events, std::size_t n,
                                 const SamplerConfig& config);

/// Covariates for treatment event `index` (1-based) of `sequence`.
CovariateSet sample_covariates(Client& client, const EventSequence& sequence, std::size_t index,
                               const SamplerConfig& config);

/// Mean over texts of smoothed sentence BLEU against all the other texts.
/// Whitespace tokenization, uniform weights up to `max_ngram`, zero n-gram
/// precisions smoothed to 0.1 / count. Throws TooFewTexts below two texts.
double self_bleu(const std::vector<std::string>& texts, int max_ngram = 4);

}  // namespace cola
