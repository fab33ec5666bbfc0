#include "cola/intervention_generator.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include "cola/error.hpp"
#include "cola/text.hpp"

namespace cola {

namespace {

constexpr std::array<std::pair<ControlCode, std::string_view>, 8> kCodeNames{{
    {ControlCode::Resemantic, "resemantic"},
    {ControlCode::Negation, "negation"},
    {ControlCode::Lexical, "lexical"},
    {ControlCode::Quantifier, "quantifier"},
    {ControlCode::Insert, "insert"},
    {ControlCode::Delete, "delete"},
    {ControlCode::Restructure, "restructure"},
    {ControlCode::Shuffle, "shuffle"},
}};

const std::set<std::string_view> kClosedClass = {
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our",
    "their", "i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "myself",
    "himself", "herself", "themselves", "and", "or", "but", "so", "because", "as", "if", "when",
    "while", "then", "than", "of", "in", "on", "at", "to", "for", "with", "from", "by", "about",
    "into", "onto", "over", "under", "after", "before", "up", "down", "out", "off", "all", "some",
    "any", "no", "not", "very", "too", "also", "just", "one", "every", "each", "there", "here",
    "what", "which", "who", "whom", "whose", "always", "never", "finally", "yesterday", "today",
    "ago", "again", "towards", "across", "lots"};

const std::set<std::string_view> kIrregular = {
    "am", "is", "are", "was", "were", "be", "been", "has", "have", "had", "do", "does", "did",
    "go", "goes", "went", "make", "made", "feel", "felt", "get", "got", "take", "took", "see",
    "saw", "come", "came", "eat", "ate", "run", "ran", "say", "said", "tell", "told", "find",
    "found", "give", "gave", "know", "knew", "think", "thought", "buy", "bought", "bring",
    "brought", "leave", "left", "lose", "lost", "win", "won", "write", "wrote", "sit", "sat",
    "stand", "stood", "fall", "fell", "keep", "kept", "sleep", "slept", "send", "sent", "spend",
    "spent", "build", "built", "break", "broke", "drive", "drove", "fly", "flew", "forgot",
    "grow", "grew", "hear", "heard", "hold", "held", "hurt", "meet", "met", "pay", "paid", "put",
    "read", "ride", "rode", "rise", "rose", "sing", "sang", "sell", "sold", "shoot", "shot",
    "shut", "throw", "threw", "understood", "wake", "woke", "wear", "wore", "become", "became",
    "begin", "began", "catch", "caught", "choose", "chose", "cut", "dig", "dug", "drink", "drank",
    "draw", "drew", "feed", "fed", "fight", "fought", "hide", "hid", "hit", "hang", "hung", "lead",
    "led", "let", "light", "lit", "mean", "meant", "quit", "ring", "rang", "set", "shake", "shook",
    "sink", "sank", "speak", "spoke", "steal", "stole", "stick", "stuck", "swim", "swam", "teach",
    "taught", "tear", "tore", "weep", "wept", "can", "could", "will", "would", "shall", "should",
    "may", "might", "must", "didn't", "wasn't", "couldn't", "wouldn't", "can't", "won't", "don't",
    "doesn't", "isn't", "aren't", "weren't", "hasn't", "haven't", "hadn't", "love", "like", "want",
    "need", "decide", "try", "play", "work", "live", "help", "start", "stop", "call", "ask", "use",
    "look", "watch", "wait", "walk", "talk", "open", "close", "cook", "clean", "learn"};

constexpr std::string_view kEdgePunct = ",.!?;:\"'()[]";
constexpr std::string_view kClausePunct = ",.!?;:";

struct Token {
  std::size_t start;  // core (punctuation-stripped) offsets
  std::size_t end;
  std::string lower;
  bool capitalized;
  bool ends_clause;  // trailing punctuation ends an argument
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t raw_start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == raw_start) break;
    std::size_t s = raw_start, e = i;
    while (s < e && kEdgePunct.find(text[s]) != std::string_view::npos) ++s;
    bool clause = false;
    while (e > s && kEdgePunct.find(text[e - 1]) != std::string_view::npos) {
      if (kClausePunct.find(text[e - 1]) != std::string_view::npos) clause = true;
      --e;
    }
    if (s == e) {
      // bare punctuation token closes any open argument
      if (!tokens.empty()) tokens.back().ends_clause = true;
      continue;
    }
    const auto core = text.substr(s, e - s);
    tokens.push_back({s, e, text::to_lower(core), std::isupper(static_cast<unsigned char>(core[0])) != 0,
                      clause});
  }
  return tokens;
}

// Caps a rewrite at `max_words` words; shorter text is returned untouched.
std::string cap_words(const std::string& rewrite, int max_words) {
  auto words = text::split_whitespace(rewrite);
  if (max_words < 1 || words.size() <= static_cast<std::size_t>(max_words)) return rewrite;
  words.resize(static_cast<std::size_t>(max_words));
  return text::join(words, " ");
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool verb_like(const Token& t) {
  if (kIrregular.count(t.lower)) return true;
  if (t.capitalized) return false;  // mid-sentence capitals are names
  if (t.lower.size() > 3 && ends_with(t.lower, "ed")) return true;
  if (t.lower.size() > 3 && ends_with(t.lower, "s") && !ends_with(t.lower, "ss")) return true;
  return false;
}

}  // namespace

std::string_view to_string(ControlCode code) {
  for (const auto& [c, name] : kCodeNames)
    if (c == code) return name;
  return "unknown";
}

ControlCode parse_control_code(std::string_view name) {
  const auto trimmed = text::trim(name);
  for (const auto& [c, n] : kCodeNames)
    if (n == trimmed) return c;
  throw Error(ErrorCode::InvalidArgument, "unknown control code '" + std::string(trimmed) + "'");
}

bool is_counterfactual(ControlCode code) {
  return code != ControlCode::Restructure && code != ControlCode::Shuffle;
}

const std::vector<ControlCode>& default_control_codes() {
  static const std::vector<ControlCode> codes = {ControlCode::Resemantic, ControlCode::Negation,
                                                 ControlCode::Lexical,    ControlCode::Quantifier,
                                                 ControlCode::Insert,     ControlCode::Delete};
  return codes;
}

std::vector<ControlCode> parse_control_codes(std::string_view csv) {
  std::vector<ControlCode> codes;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto comma = csv.find(',', pos);
    const auto item = csv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (!text::trim(item).empty()) {
      const auto code = parse_control_code(item);
      if (!is_counterfactual(code))
        throw Error(ErrorCode::InvalidArgument,
                    "control code '" + std::string(to_string(code)) + "' does not produce counterfactuals");
      if (std::find(codes.begin(), codes.end(), code) == codes.end()) codes.push_back(code);
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (codes.empty()) throw Error(ErrorCode::InvalidArgument, "no control codes given");
  return codes;
}

std::string_view to_string(SpanMethod method) {
  return method == SpanMethod::RemoteSrl ? "remote_srl" : "heuristic";
}

SpanMethod parse_span_method(std::string_view name) {
  if (name == "remote_srl") return SpanMethod::RemoteSrl;
  if (name == "heuristic") return SpanMethod::Heuristic;
  throw Error(ErrorCode::InvalidArgument, "unknown span method '" + std::string(name) + "'");
}

std::vector<Span> SpanSelection::spans() const {
  std::vector<Span> out;
  if (arg0) out.push_back(*arg0);
  out.push_back(verb);
  if (arg1) out.push_back(*arg1);
  std::sort(out.begin(), out.end());
  return out;
}

SpanSelection select_spans_heuristic(const Event& event) {
  const auto& text = event.text();
  const auto tokens = tokenize(text);
  SpanSelection sel;
  sel.method = SpanMethod::Heuristic;

  std::size_t verb = tokens.size();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (kClosedClass.count(tokens[i].lower) && !kIrregular.count(tokens[i].lower)) continue;
    if (verb_like(tokens[i])) {
      verb = i;
      break;
    }
  }
  if (verb == tokens.size()) {
    sel.verb = Span{0, text.size()};
    sel.whole_sentence = true;
    return sel;
  }

  sel.verb = Span{tokens[verb].start, tokens[verb].end};
  if (verb > 0) sel.arg0 = Span{tokens.front().start, tokens[verb - 1].end};
  if (!tokens[verb].ends_clause && verb + 1 < tokens.size()) {
    std::size_t last = verb + 1;
    while (!tokens[last].ends_clause && last + 1 < tokens.size()) ++last;
    sel.arg1 = Span{tokens[verb + 1].start, tokens[last].end};
  }
  return sel;
}

SpanSelection select_spans_remote(Client& client, const Event& event) {
  const auto frame = client.srl(event.text());
  SpanSelection sel;
  sel.method = SpanMethod::RemoteSrl;
  sel.verb = frame.verb;
  sel.arg0 = frame.arg0;
  sel.arg1 = frame.arg1;
  validate_spans(sel.spans(), event.text().size());
  return sel;
}

std::vector<Event> filter_interventions(const Event& original, const std::vector<std::string>& raw,
                                        std::size_t cap) {
  std::set<std::string> unique;
  for (const auto& r : raw) {
    const auto t = text::trim(r);
    if (t.empty() || t == original.text()) continue;
    if (t.find_first_of("\r\n") != std::string_view::npos) continue;
    unique.emplace(t);
  }
  std::vector<Event> out;
  for (const auto& t : unique) {
    if (out.size() == cap) break;
    out.emplace_back(t);
  }
  return out;
}

InterventionSet generate_interventions(Client& client, const Event& event, const InterventionConfig& config) {
  if (config.codes.empty()) throw Error(ErrorCode::InvalidArgument, "no control codes configured");
  if (config.cap < 1) throw Error(ErrorCode::InvalidArgument, "intervention cap must be >= 1");
  for (auto code : config.codes)
    if (!is_counterfactual(code))
      throw Error(ErrorCode::InvalidArgument,
                  "control code '" + std::string(to_string(code)) + "' does not produce counterfactuals");

  const auto selection = config.span_method == SpanMethod::RemoteSrl ? select_spans_remote(client, event)
                                                                      : select_spans_heuristic(event);
  const auto spans = selection.spans();
  const std::size_t per_code = (config.cap + config.codes.size() - 1) / config.codes.size();
  const std::size_t per_request = (per_code + spans.size() - 1) / spans.size();

  std::vector<std::string> pool;
  for (auto code : config.codes) {
    for (const auto& span : spans) {
      InfillParams params;
      params.text = event.text();
      params.spans = {span};
      params.control_code = std::string(to_string(code));
      params.num_samples = static_cast<int>(per_request);
      params.temperature = config.temperature;
      params.seed = config.seed;
      params.model = config.model;
      for (auto& t : client.infill(params)) pool.push_back(cap_words(t, config.max_new_tokens));
    }
  }

  InterventionSet out{event, filter_interventions(event, pool, config.cap), config.codes};
  if (out.interventions.empty())
    throw Error(ErrorCode::EmptyInterventionSet, "no usable interventions for '" + event.text() + "'");
  return out;
}

}  // namespace cola
