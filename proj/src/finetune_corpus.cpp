#include "cola/finetune_corpus.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "cola/error.hpp"
#include "cola/random.hpp"
#include "cola/temporal_predictor.hpp"

namespace cola {

std::string_view to_string(Polarity polarity) {
  return polarity == Polarity::Positive ? "positive" : "negative";
}

SplitSizes split_sizes(std::size_t total) {
  SplitSizes s;
  s.validation = total / 100;
  s.test = total / 100;
  s.train = total - s.validation - s.test;
  return s;
}

namespace {

constexpr std::uint64_t kOrderStream = 0xffff'ffff'0000'0001ULL;
constexpr std::uint64_t kSplitStream = 0xffff'ffff'0000'0002ULL;

std::string masked(const Event& first, const Event& second) {
  return temporal_template(first, second);
}

}  // namespace

std::vector<FinetuneExample> build_finetune_corpus(const StoryCorpus& corpus, const CorpusOptions& options) {
  const auto& stories = corpus.sequences;
  if (stories.size() < 2)
    throw Error(ErrorCode::CorpusTooSmall, "need at least 2 stories to draw negatives from");
  if (!(options.negative_ratio > 0.0) || !std::isfinite(options.negative_ratio))
    throw Error(ErrorCode::InvalidArgument, "negative_ratio must be a positive number");
  for (const auto& s : stories) validate(s);

  std::vector<std::size_t> order(stories.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto order_rng = make_rng(options.seed, kOrderStream);
  shuffle(std::span<std::size_t>(order), order_rng);

  const std::size_t limit = options.target_size == 0 ? std::size_t(-1) : options.target_size;
  std::vector<FinetuneExample> out;
  auto emit = [&](FinetuneExample ex) {
    if (out.size() < limit) out.push_back(std::move(ex));
  };

  for (const std::size_t idx : order) {
    if (out.size() >= limit) break;
    const auto& story = stories[idx];
    auto rng = make_rng(options.seed, idx);
    double negatives_due = 0.0;

    auto negative_for = [&](const Event& first, const Event& second) {
      std::size_t donor = static_cast<std::size_t>(uniform_index(rng, stories.size() - 1));
      if (donor >= idx) ++donor;
      const auto& donor_events = stories[donor].events;
      const Event& replacement = donor_events[uniform_index(rng, donor_events.size())];
      const bool replace_first = (rng() & 1U) != 0;
      const auto text = replace_first ? masked(replacement, second) : masked(first, replacement);
      emit({text, kNoneToken, Polarity::Negative, {}});
    };
    auto positive = [&](const Event& first, const Event& second, const char* target) {
      emit({masked(first, second), target, Polarity::Positive, {}});
      negatives_due += options.negative_ratio;
      while (negatives_due >= 1.0) {
        negative_for(first, second);
        negatives_due -= 1.0;
      }
    };

    for (std::size_t i = 0; i + 1 < story.events.size(); ++i) {
      positive(story.events[i], story.events[i + 1], kBeforeToken);
      positive(story.events[i + 1], story.events[i], kAfterToken);
    }
  }

  const auto sizes = split_sizes(out.size());
  std::vector<std::size_t> perm(out.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto split_rng = make_rng(options.seed, kSplitStream);
  shuffle(std::span<std::size_t>(perm), split_rng);
  for (std::size_t j = 0; j < perm.size(); ++j) {
    const char* name = j < sizes.train ? "train" : (j < sizes.train + sizes.validation ? "validation" : "test");
    out[perm[j]].split = name;
  }
  return out;
}

void build_finetune_corpus(const StoryCorpus& corpus, const CorpusOptions& options,
                           const std::function<void(const FinetuneExample&)>& sink) {
  for (const auto& ex : build_finetune_corpus(corpus, options)) sink(ex);
}

std::string to_corpus_record(const FinetuneExample& example) {
  nlohmann::ordered_json doc;
  doc["masked_text"] = example.masked_text;
  doc["target"] = example.target;
  doc["polarity"] = to_string(example.polarity);
  doc["split"] = example.split;
  return doc.dump();
}

}  // namespace cola
