#include "cola/covariate_sampler.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "cola/error.hpp"
#include "cola/text.hpp"

namespace cola {

std::string_view to_string(SamplingMode mode) {
  return mode == SamplingMode::Union ? "union" : "intersection";
}

SamplingMode parse_sampling_mode(std::string_view name) {
  if (name == "union") return SamplingMode::Union;
  if (name == "intersection") return SamplingMode::Intersection;
  throw Error(ErrorCode::InvalidArgument, "unknown sampling mode '" + std::string(name) + "'");
}

std::optional<Event> clean_covariate(std::string_view raw) {
  const auto sentence = text::trim(text::first_sentence(text::trim(raw)));
  if (sentence.size() < 3 || !text::has_alpha(sentence)) return std::nullopt;
  if (sentence.find_first_of("\r\n") != std::string_view::npos) return std::nullopt;
  return Event(sentence);
}

std::string dedup_key(std::string_view text) {
  std::string key(text::trim(text));
  if (!key.empty()) key[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(key[0])));
  return key;
}

namespace {

// Keeps the lexicographically smallest spelling per dedup key, sorted by text.
std::vector<Event> canonicalize(std::vector<Event> events) {
  std::map<std::string, Event> by_key;
  for (auto& e : events) {
    auto key = dedup_key(e.text());
    auto it = by_key.find(key);
    if (it == by_key.end())
      by_key.emplace(std::move(key), std::move(e));
    else if (e < it->second)
      it->second = std::move(e);
  }
  std::vector<Event> out;
  out.reserve(by_key.size());
  for (auto& [_, e] : by_key) out.push_back(std::move(e));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<Event> canonical_events(const std::vector<std::string>& raw) {
  std::vector<Event> cleaned;
  for (const auto& r : raw)
    if (auto e = clean_covariate(r)) cleaned.push_back(std::move(*e));
  return canonicalize(std::move(cleaned));
}

std::vector<Event> sample_before(Client& client, const Event& event, int count,
                                 const SamplerConfig& config) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "covariate count must be >= 1");
  GenerateParams params;
  params.prompt = event.text() + " Before that,";
  params.num_samples = count;
  params.max_new_tokens = config.max_new_tokens;
  params.temperature = config.temperature;
  params.seed = config.seed;
  params.model = config.model;
  return canonical_events(client.generate(params));
}

CovariateSet merge_union(const std::vector<std::vector<Event>>& sets, std::size_t n) {
  if (sets.empty()) throw Error(ErrorCode::InvalidArgument, "no timestamps to merge");
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "covariate set size must be >= 1");

  std::vector<std::vector<Event>> canonical;
  canonical.reserve(sets.size());
  for (const auto& s : sets) canonical.push_back(canonicalize(s));
  if (std::all_of(canonical.begin(), canonical.end(), [](const auto& s) { return s.empty(); }))
    throw Error(ErrorCode::AllSetsEmpty, "every timestamp produced an empty covariate set");

  CovariateSet out;
  out.target = n;
  std::map<std::string, std::size_t> taken;  // dedup key -> position in out.covariates
  std::vector<std::size_t> cursor(canonical.size(), 0);
  bool progress = true;
  while (out.covariates.size() < n && progress) {
    progress = false;
    for (std::size_t l = 0; l < canonical.size() && out.covariates.size() < n; ++l) {
      auto& c = cursor[l];
      while (c < canonical[l].size() && taken.count(dedup_key(canonical[l][c].text()))) ++c;
      if (c == canonical[l].size()) continue;
      taken.emplace(dedup_key(canonical[l][c].text()), out.covariates.size());
      out.covariates.push_back(canonical[l][c]);
      ++c;
      progress = true;
    }
  }

  for (std::size_t l = 0; l < canonical.size(); ++l)
    for (const auto& e : canonical[l])
      if (auto it = taken.find(dedup_key(e.text())); it != taken.end())
        out.source_timestamps[out.covariates[it->second].text()].insert(l + 1);
  std::sort(out.covariates.begin(), out.covariates.end());
  return out;
}

std::string intersection_prompt(const std::vector<Event>& events) {
  std::vector<std::string> texts;
  for (const auto& e : events) texts.push_back(e.text());
  return "There are temporally ordered events [" + text::join(texts, ", ") + "]. Before all events,";
}

CovariateSet sample_intersection(Client& client, const std::vector<Event>& events, std::size_t n,
                                 const SamplerConfig& config) {
  if (events.empty()) throw Error(ErrorCode::InvalidArgument, "intersection needs at least one event");
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "covariate set size must be >= 1");
  GenerateParams params;
  params.prompt = intersection_prompt(events);
  params.num_samples = config.per_timestamp_samples;
  params.max_new_tokens = config.max_new_tokens;
  params.temperature = config.temperature;
  params.seed = config.seed;
  params.model = config.model;
  auto covariates = canonical_events(client.generate(params));
  if (covariates.empty())
    throw Error(ErrorCode::AllSetsEmpty, "intersection prompt produced no usable covariates");
  if (covariates.size() > n) covariates.erase(covariates.begin() + static_cast<std::ptrdiff_t>(n), covariates.end());
  return merge_union({covariates}, n);
}

CovariateSet sample_covariates(Client& client, const EventSequence& sequence, std::size_t index,
                               const SamplerConfig& config) {
  if (index < 1 || index >= sequence.size())
    throw Error(ErrorCode::InvalidArgument, "treatment index out of range");

  if (config.mode == SamplingMode::Intersection) {
    std::vector<Event> right(sequence.events.begin() + static_cast<std::ptrdiff_t>(index - 1),
                             sequence.events.end());
    auto set = sample_intersection(client, right, config.n, config);
    for (auto& [_, stamps] : set.source_timestamps) {
      stamps.clear();
      for (std::size_t t = index; t <= sequence.size(); ++t) stamps.insert(t);
    }
    return set;
  }

  const std::size_t first = config.multistamp ? 1 : index;
  std::vector<std::vector<Event>> sets;
  for (std::size_t t = first; t <= index; ++t)
    sets.push_back(sample_before(client, sequence.event(t), config.per_timestamp_samples, config));
  auto merged = merge_union(sets, config.n);
  if (first != 1) {
    // merge_union numbers timestamps from 1; shift back to sequence positions
    for (auto& [_, stamps] : merged.source_timestamps) {
      std::set<std::size_t> shifted;
      for (auto t : stamps) shifted.insert(t + first - 1);
      stamps = std::move(shifted);
    }
  }
  return merged;
}

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<Ngram, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

double sentence_bleu(const std::vector<std::vector<std::string>>& references,
                     const std::vector<std::string>& hypothesis, int max_ngram) {
  const std::size_t hyp_len = hypothesis.size();
  std::vector<double> numerators, denominators;
  for (int n = 1; n <= max_ngram; ++n) {
    const auto hyp_counts = ngram_counts(hypothesis, static_cast<std::size_t>(n));
    std::map<Ngram, std::size_t> max_ref;
    for (const auto& ref : references)
      for (const auto& [g, c] : ngram_counts(ref, static_cast<std::size_t>(n)))
        max_ref[g] = std::max(max_ref[g], c);
    std::size_t clipped = 0, total = 0;
    for (const auto& [g, c] : hyp_counts) {
      total += c;
      const auto it = max_ref.find(g);
      clipped += std::min(c, it == max_ref.end() ? std::size_t{0} : it->second);
    }
    numerators.push_back(double(clipped));
    denominators.push_back(double(std::max<std::size_t>(1, total)));
  }
  if (numerators[0] == 0.0) return 0.0;

  // closest reference length, shorter one on ties
  std::size_t ref_len = references.front().size();
  for (const auto& ref : references) {
    const auto d = [&](std::size_t r) { return r > hyp_len ? r - hyp_len : hyp_len - r; };
    if (d(ref.size()) < d(ref_len) || (d(ref.size()) == d(ref_len) && ref.size() < ref_len))
      ref_len = ref.size();
  }
  double bp = 1.0;
  if (hyp_len == 0) bp = 0.0;
  else if (hyp_len <= ref_len) bp = std::exp(1.0 - double(ref_len) / double(hyp_len));

  constexpr double kEpsilon = 0.1;
  double log_sum = 0.0;
  const double weight = 1.0 / max_ngram;
  for (std::size_t i = 0; i < numerators.size(); ++i) {
    const double p = numerators[i] > 0.0 ? numerators[i] / denominators[i] : kEpsilon / denominators[i];
    log_sum += weight * std::log(p);
  }
  return bp * std::exp(log_sum);
}

}  // namespace

double self_bleu(const std::vector<std::string>& texts, int max_ngram) {
  if (texts.size() < 2) throw Error(ErrorCode::TooFewTexts, "self-BLEU needs at least two texts");
  if (max_ngram < 1) throw Error(ErrorCode::InvalidArgument, "max_ngram must be >= 1");
  std::vector<std::vector<std::string>> tokens;
  for (const auto& t : texts) tokens.push_back(text::split_whitespace(t));
  double sum = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::vector<std::vector<std::string>> refs;
    for (std::size_t j = 0; j < tokens.size(); ++j)
      if (j != i) refs.push_back(tokens[j]);
    sum += sentence_bleu(refs, tokens[i], max_ngram);
  }
  return sum / double(tokens.size());
}

}  // namespace cola
