#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cola/backend.hpp"
#include "cola/event_model.hpp"

namespace cola {

/// Counterfactual-infilling control codes. Restructure and shuffle exist in
/// the infill model's vocabulary but do not change meaning, so they are never
/// requested.
enum class ControlCode { Resemantic, Negation, Lexical, Quantifier, Insert, Delete, Restructure, Shuffle };

std::string_view to_string(ControlCode code);
ControlCode parse_control_code(std::string_view name);
bool is_counterfactual(ControlCode code);
const std::vector<ControlCode>& default_control_codes();
/// Parses a comma-separated list; rejects non-counterfactual codes.
std::vector<ControlCode> parse_control_codes(std::string_view csv);

enum class SpanMethod { RemoteSrl, Heuristic };
std::string_view to_string(SpanMethod method);
SpanMethod parse_span_method(std::string_view name);

struct SpanSelection {
  Span verb;
  std::optional<Span> arg0;
  std::optional<Span> arg1;
  SpanMethod method = SpanMethod::Heuristic;
  /// No verb was found; `verb` covers the whole sentence.
  bool whole_sentence = false;

  /// Selected spans in text order: arg0, verb, arg1 (whichever are present).
  std::vector<Span> spans() const;
};

/// Whitespace tokens, skip closed-class words, first token that ends in -ed
/// or -s or is a known irregular verb form is the verb. arg0 is everything
/// before it; arg1 runs to the first punctuation after it.
SpanSelection select_spans_heuristic(const Event& event);

/// Asks the backend's SRL endpoint; spans are validated against the text.
SpanSelection select_spans_remote(Client& client, const Event& event);

struct InterventionConfig {
  bool enabled = true;
  std::vector<ControlCode> codes = default_control_codes();
  std::size_t cap = 50;
  double temperature = 1.0;
  int max_new_tokens = 40;
  SpanMethod span_method = SpanMethod::Heuristic;
  std::int64_t seed = 0;
  std::string model = "polyjuice";
};

struct InterventionSet {
  Event original;
  std::vector<Event> interventions;
  std::vector<ControlCode> control_codes_used;
};

/// Pools raw rewrites: trims, drops empties, multi-line text and copies of
/// the original, deduplicates, sorts, keeps the first `cap`.
std::vector<Event> filter_interventions(const Event& original, const std::vector<std::string>& raw,
                                        std::size_t cap);

/// One infill request per (control code, selected span). Throws
/// EmptyInterventionSet when nothing survives filtering.
InterventionSet generate_interventions(Client& client, const Event& event, const InterventionConfig& config);

}  // namespace cola
