#include "cola/event_model.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <tuple>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "cola/error.hpp"
#include "cola/random.hpp"
#include "cola/text.hpp"

namespace cola {

using nlohmann::json;

Event::Event(std::string_view text) : text_(text::trim(text)) {
  if (text_.empty()) throw Error(ErrorCode::EmptyEvent, "event text is empty");
  if (text_.find_first_of("\r\n") != std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "event contains a line break: " + text_);
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Validation: return "validation";
    case Split::Testing: return "testing";
    case Split::Unsplit: return "unsplit";
  }
  return "unsplit";
}

Split parse_split(std::string_view name) {
  if (name == "validation") return Split::Validation;
  if (name == "testing") return Split::Testing;
  if (name == "unsplit") return Split::Unsplit;
  throw Error(ErrorCode::InvalidArgument, "unknown split '" + std::string(name) + "'");
}

std::size_t EventSequence::k() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
}

void validate(const EventSequence& sequence) {
  if (sequence.events.size() < 2)
    throw Error(ErrorCode::MalformedRecord,
                "sequence '" + sequence.id + "' has fewer than 2 events");
  if (sequence.labeled() && sequence.labels.size() != sequence.events.size() - 1)
    throw Error(ErrorCode::LabelLengthMismatch,
                "sequence '" + sequence.id + "': " + std::to_string(sequence.events.size()) +
                    " events but " + std::to_string(sequence.labels.size()) + " labels");
}

std::vector<EventPair> enumerate_pairs(const std::vector<EventSequence>& dataset) {
  std::vector<EventPair> pairs;
  for (const auto& seq : dataset) {
    for (std::size_t i = 1; i < seq.size(); ++i) {
      EventPair pair{seq.id, i, seq.size(), std::nullopt};
      if (seq.labeled()) pair.gold = seq.labels[i - 1];
      pairs.push_back(std::move(pair));
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const EventPair& a, const EventPair& b) {
    return std::tie(a.sequence_id, a.cause_index) < std::tie(b.sequence_id, b.cause_index);
  });
  return pairs;
}

namespace {

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line) + ": " + what);
}

EventSequence parse_record(std::string_view line, std::size_t line_number, bool story) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    malformed(line_number, e.what());
  }
  if (!doc.is_object()) malformed(line_number, "record is not a JSON object");
  for (const auto& [key, _] : doc.items()) {
    const bool known = key == "id" || key == "events" || (!story && (key == "labels" || key == "split"));
    if (!known) malformed(line_number, "unexpected key '" + key + "'");
  }

  EventSequence seq;
  if (!doc.contains("id") || !doc["id"].is_string()) malformed(line_number, "missing string 'id'");
  seq.id = doc["id"].get<std::string>();
  if (!doc.contains("events") || !doc["events"].is_array())
    malformed(line_number, "missing array 'events'");
  for (const auto& ev : doc["events"]) {
    if (!ev.is_string()) malformed(line_number, "non-string event");
    try {
      seq.events.emplace_back(ev.get<std::string>());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EmptyEvent)
        throw Error(ErrorCode::EmptyEvent,
                    "sequence '" + seq.id + "' (line " + std::to_string(line_number) + ")");
      malformed(line_number, e.what());
    }
  }
  if (doc.contains("labels")) {
    if (!doc["labels"].is_array()) malformed(line_number, "'labels' is not an array");
    for (const auto& lab : doc["labels"]) {
      if (!lab.is_boolean()) malformed(line_number, "non-boolean label");
      seq.labels.push_back(lab.get<bool>());
    }
    if (seq.labels.empty() && seq.events.size() >= 2)
      throw Error(ErrorCode::LabelLengthMismatch, "sequence '" + seq.id + "' has an empty label list");
  }
  if (doc.contains("split")) {
    if (!doc["split"].is_string()) malformed(line_number, "'split' is not a string");
    try {
      seq.split = parse_split(doc["split"].get<std::string>());
    } catch (const Error& e) {
      malformed(line_number, e.what());
    }
  }
  try {
    validate(seq);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedRecord) malformed(line_number, e.what());
    throw;
  }
  return seq;
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (text::trim(line).empty()) continue;
    fn(line, number);
  }
}

void check_unique_ids(const std::vector<EventSequence>& sequences) {
  std::unordered_set<std::string> seen;
  for (const auto& s : sequences)
    if (!seen.insert(s.id).second)
      throw Error(ErrorCode::MalformedRecord, "duplicate sequence id '" + s.id + "'");
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

json events_json(const EventSequence& sequence) {
  json events = json::array();
  for (const auto& e : sequence.events) events.push_back(e.text());
  return events;
}

}  // namespace

EventSequence parse_sequence_record(std::string_view line, std::size_t line_number) {
  return parse_record(line, line_number, false);
}

std::string to_record(const EventSequence& sequence) {
  nlohmann::ordered_json doc;
  doc["id"] = sequence.id;
  doc["events"] = events_json(sequence);
  if (sequence.labeled()) {
    auto labels = nlohmann::ordered_json::array();
    for (bool b : sequence.labels) labels.push_back(b);
    doc["labels"] = std::move(labels);
  }
  doc["split"] = to_string(sequence.split);
  return doc.dump();
}

std::vector<EventSequence> read_dataset(std::istream& in) {
  std::vector<EventSequence> out;
  for_each_line(in, [&](const std::string& line, std::size_t n) {
    out.push_back(parse_record(line, n, false));
  });
  check_unique_ids(out);
  return out;
}

std::vector<EventSequence> load_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const std::vector<EventSequence>& dataset) {
  for (const auto& seq : dataset) out << to_record(seq) << '\n';
}

StoryCorpus read_story_corpus(std::istream& in) {
  StoryCorpus corpus;
  for_each_line(in, [&](const std::string& line, std::size_t n) {
    corpus.sequences.push_back(parse_record(line, n, true));
  });
  check_unique_ids(corpus.sequences);
  return corpus;
}

StoryCorpus load_story_corpus(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_story_corpus(in);
}

std::string to_story_record(const EventSequence& sequence) {
  nlohmann::ordered_json doc;
  doc["id"] = sequence.id;
  doc["events"] = events_json(sequence);
  return doc.dump();
}

std::size_t SplitCounts::sequences() const {
  std::size_t total = 0;
  for (const auto& [k, count] : sequences_per_k) total += count;
  return total;
}

SplitCounts split_counts(const std::vector<EventSequence>& dataset) {
  SplitCounts counts;
  for (const auto& seq : dataset) {
    if (!seq.labeled())
      throw Error(ErrorCode::UnlabeledSequence, "sequence '" + seq.id + "' has no labels");
    const std::size_t k = seq.k();
    ++counts.sequences_per_k[k];
    counts.positives += k;
    counts.negatives += seq.labels.size() - k;
    counts.candidate_counts.insert(seq.candidate_count());
  }
  return counts;
}

void assign_stratified_splits(std::vector<EventSequence>& dataset, std::uint64_t seed) {
  std::map<std::size_t, std::vector<std::size_t>> by_k;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return dataset[a].id < dataset[b].id; });
  for (std::size_t idx : order) {
    if (!dataset[idx].labeled())
      throw Error(ErrorCode::UnlabeledSequence, "sequence '" + dataset[idx].id + "' has no labels");
    by_k[dataset[idx].k()].push_back(idx);
  }
  for (auto& [k, members] : by_k) {
    auto rng = make_rng(seed, k);
    shuffle(std::span<std::size_t>(members), rng);
    for (std::size_t j = 0; j < members.size(); ++j)
      dataset[members[j]].split = (j % 2 == 0) ? Split::Validation : Split::Testing;
  }
}

}  // namespace cola
