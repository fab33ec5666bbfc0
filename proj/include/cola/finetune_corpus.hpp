#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cola/event_model.hpp"

namespace cola {

enum class Polarity { Positive, Negative };
std::string_view to_string(Polarity polarity);

/// One masked-connective training example for temporal fine-tuning.
/// Positive examples target "before"/"after"; negatives target "[none]".
struct FinetuneExample {
  std::string masked_text;
  std::string target;
  Polarity polarity = Polarity::Positive;
  std::string split;
};

struct CorpusOptions {
  /// Total examples to emit; 0 emits everything the corpus yields.
  std::size_t target_size = 0;
  /// Negatives per positive.
  double negative_ratio = 1.0;
  std::uint64_t seed = 0;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

/// 98:1:1; validation and test take floor(total / 100) each.
SplitSizes split_sizes(std::size_t total);

/// For every adjacent pair (Ei, Ei+1) of every story: "Ei <MASK> Ei+1" ->
/// before and "Ei+1 <MASK> Ei" -> after, each followed by its share of
/// negatives where one side is swapped for an event from another story.
/// Stories are visited in a seed-shuffled order; output stops at
/// `target_size`. Deterministic in `options.seed`.
std::vector<FinetuneExample> build_finetune_corpus(const StoryCorpus& corpus, const CorpusOptions& options);

/// Streaming form; examples arrive in the same order as the vector form.
void build_finetune_corpus(const StoryCorpus& corpus, const CorpusOptions& options,
                           const std::function<void(const FinetuneExample&)>& sink);

/// {"masked_text","target","polarity","split"} in that order.
std::string to_corpus_record(const FinetuneExample& example);

}  // namespace cola
