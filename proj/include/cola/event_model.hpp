#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cola {

/// One free-text event. Always trimmed, non-empty and single-line.
class Event {
 public:
  /// Trims `text`; throws EmptyEvent if nothing is left and InvalidArgument on
  /// an internal line break.
  explicit Event(std::string_view text);

  const std::string& text() const noexcept { return text_; }

  friend auto operator<=>(const Event&, const Event&) = default;

 private:
  std::string text_;
};

enum class Split { Validation, Testing, Unsplit };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

/// Events E1..En; labels[i] is true when event i+1 causes En.
struct EventSequence {
  std::string id;
  std::vector<Event> events;
  std::vector<bool> labels;
  Split split = Split::Unsplit;

  std::size_t size() const noexcept { return events.size(); }
  std::size_t candidate_count() const noexcept { return events.size() - 1; }
  bool labeled() const noexcept { return !labels.empty(); }
  /// Number of gold causes; only meaningful when labeled().
  std::size_t k() const;

  /// 1-based event access, matching the cause indices used in EventPair.
  const Event& event(std::size_t index) const { return events.at(index - 1); }
  const Event& last() const { return events.back(); }
};

/// A (cause candidate, final event) pair inside a sequence. Indices are 1-based.
struct EventPair {
  std::string sequence_id;
  std::size_t cause_index = 0;
  std::size_t effect_index = 0;
  std::optional<bool> gold;

  friend auto operator<=>(const EventPair&, const EventPair&) = default;
};

/// Throws on any invariant violation; `id` is used in messages.
void validate(const EventSequence& sequence);

/// All (Ei, En) pairs sorted by (sequence_id, cause_index).
std::vector<EventPair> enumerate_pairs(const std::vector<EventSequence>& dataset);

/// Parses one dataset JSONL line. `line_number` is only used for messages.
EventSequence parse_sequence_record(std::string_view line, std::size_t line_number);

/// Canonical single-line record: {"id","events","labels","split"} in that order.
std::string to_record(const EventSequence& sequence);

std::vector<EventSequence> read_dataset(std::istream& in);
std::vector<EventSequence> load_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const std::vector<EventSequence>& dataset);

/// Unlabeled, temporally ordered stories. Records carry only "id" and "events".
struct StoryCorpus {
  std::vector<EventSequence> sequences;
};

StoryCorpus read_story_corpus(std::istream& in);
StoryCorpus load_story_corpus(const std::filesystem::path& path);
std::string to_story_record(const EventSequence& sequence);

struct SplitCounts {
  std::map<std::size_t, std::size_t> sequences_per_k;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  /// Distinct candidate counts (n-1) seen across sequences.
  std::set<std::size_t> candidate_counts;

  std::size_t sequences() const;
};

/// Throws UnlabeledSequence for any sequence without labels.
SplitCounts split_counts(const std::vector<EventSequence>& dataset);

/// Reassigns validation/testing halves, stratified by k. Deterministic in `seed`.
void assign_stratified_splits(std::vector<EventSequence>& dataset, std::uint64_t seed);

}  // namespace cola
