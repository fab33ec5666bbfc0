#include <gtest/gtest.h>

#include <set>

#include "cola/error.hpp"
#include "cola/intervention_generator.hpp"
#include "cola/random.hpp"
#include "fixtures.hpp"
#include "synthetic_lm.hpp"

using namespace cola;
using namespace cola::testing;
using nlohmann::json;

namespace {

std::string slice(const std::string& text, const Span& s) { return text.substr(s.start, s.end - s.start); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Io;
}

}  // namespace

TEST(ControlCodes, CounterfactualSubset) {
  EXPECT_EQ(default_control_codes().size(), 6u);
  for (auto c : default_control_codes()) EXPECT_TRUE(is_counterfactual(c));
  EXPECT_FALSE(is_counterfactual(ControlCode::Restructure));
  EXPECT_FALSE(is_counterfactual(ControlCode::Shuffle));
  EXPECT_EQ(parse_control_codes("negation, lexical,negation"),
            (std::vector<ControlCode>{ControlCode::Negation, ControlCode::Lexical}));
  EXPECT_EQ(code_of([] { parse_control_codes("negation,shuffle"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_control_codes("restructure"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_control_codes("bogus"); }), ErrorCode::InvalidArgument);
}

TEST(HeuristicSpans, EmmaFeltHungry) {
  const Event e("Emma felt hungry.");
  const auto sel = select_spans_heuristic(e);
  EXPECT_EQ(sel.method, SpanMethod::Heuristic);
  EXPECT_FALSE(sel.whole_sentence);
  EXPECT_EQ(slice(e.text(), sel.verb), "felt");
  ASSERT_TRUE(sel.arg0 && sel.arg1);
  EXPECT_EQ(slice(e.text(), *sel.arg0), "Emma");
  EXPECT_EQ(slice(e.text(), *sel.arg1), "hungry");
}

TEST(HeuristicSpans, NoVerbFallsBackToWholeSentence) {
  const Event e("Rain.");
  const auto sel = select_spans_heuristic(e);
  EXPECT_TRUE(sel.whole_sentence);
  EXPECT_EQ(sel.verb, (Span{0, 5}));
  EXPECT_FALSE(sel.arg0 || sel.arg1);
}

TEST(HeuristicSpans, MoreShapes) {
  const Event a("The dog barked loudly, then slept.");
  const auto sa = select_spans_heuristic(a);
  EXPECT_EQ(slice(a.text(), sa.verb), "barked");
  EXPECT_EQ(slice(a.text(), *sa.arg0), "The dog");
  EXPECT_EQ(slice(a.text(), *sa.arg1), "loudly");
  const Event b("She was tired.");
  EXPECT_EQ(slice(b.text(), select_spans_heuristic(b).verb), "was");
  const Event c("Tom runs.");
  const auto sc = select_spans_heuristic(c);
  EXPECT_EQ(slice(c.text(), sc.verb), "runs");
  EXPECT_FALSE(sc.arg1.has_value());
}

// Property: on arbitrary token soup the selection is valid and deterministic.
TEST(HeuristicSpans, AlwaysValidSpans) {
  const std::vector<std::string> words = {"the", "Dog", "walked", "quickly,", "she", "was", "happy.", "James",
                                          "glass", "runs", "to", "a", "(park)", "went!", "it's", "on"};
  auto rng = make_rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    const auto n = 1 + uniform_index(rng, 8);
    for (std::size_t i = 0; i < n; ++i) text += (i ? " " : "") + words[uniform_index(rng, words.size())];
    const Event e(text);
    const auto sel = select_spans_heuristic(e);
    EXPECT_NO_THROW(validate_spans(sel.spans(), e.text().size())) << text;
    const auto again = select_spans_heuristic(e);
    EXPECT_EQ(sel.spans(), again.spans());
  }
}

TEST(RemoteSpans, ReturnedVerbatimWithRemoteMethod) {
  auto scripted = std::make_shared<ScriptedTransport>();
  scripted->set(make_srl_request("Emma felt hungry."), {{"verb", {5, 9}}, {"arg0", {0, 4}}, {"arg1", {10, 16}}});
  scripted->set(make_srl_request("Bad spans here."), {{"verb", {5, 90}}, {"arg0", nullptr}, {"arg1", nullptr}});
  Client client(BackendMode::Live, nullptr, scripted);
  const auto sel = select_spans_remote(client, Event("Emma felt hungry."));
  EXPECT_EQ(sel.method, SpanMethod::RemoteSrl);
  EXPECT_EQ(sel.verb, (Span{5, 9}));
  EXPECT_EQ(sel.arg0, (Span{0, 4}));
  EXPECT_EQ(sel.arg1, (Span{10, 16}));
  EXPECT_EQ(code_of([&] { select_spans_remote(client, Event("Bad spans here.")); }), ErrorCode::SpanOutOfBounds);
}

TEST(FilterInterventions, TrimsDedupsDropsOriginalAndCaps) {
  const Event original("Emma felt hungry.");
  const auto out = filter_interventions(
      original, {" Emma was full. ", "Emma was full.", "Emma felt hungry.", "", "two\nlines", "A b."}, 50);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].text(), "A b.");
  EXPECT_EQ(out[1].text(), "Emma was full.");
  EXPECT_EQ(filter_interventions(original, {"c", "b", "a"}, 2).back().text(), "b");
}

TEST(GenerateInterventions, NegationProducesTheDirectIntervention) {
  auto fn = std::make_shared<FunctionTransport>([](Endpoint ep, const json& body) -> json {
    EXPECT_EQ(ep, Endpoint::Infill);
    EXPECT_EQ(body.at("control_code"), "negation");
    const auto span = body.at("spans").at(0);
    if (span == json::array({5, 9})) return {{"texts", {"Emma didn't feel hungry.", "Emma never felt hungry."}}};
    return {{"texts", {"Emma felt hungry.", "Nobody felt hungry."}}};
  });
  Client client(BackendMode::Live, nullptr, fn);
  InterventionConfig cfg;
  cfg.codes = {ControlCode::Negation};
  const auto set = generate_interventions(client, Event("Emma felt hungry."), cfg);
  std::vector<std::string> got;
  for (const auto& e : set.interventions) got.push_back(e.text());
  EXPECT_EQ(got, (std::vector<std::string>{"Emma didn't feel hungry.", "Emma never felt hungry.",
                                           "Nobody felt hungry."}));
  EXPECT_EQ(fn->calls(), 3u);  // one request per span
  EXPECT_EQ(set.original.text(), "Emma felt hungry.");
}

TEST(GenerateInterventions, AllCopiesOfOriginalIsEmptySet) {
  auto fn = std::make_shared<FunctionTransport>([](Endpoint, const json& body) -> json {
    return {{"texts", {body.at("text"), " " + body.at("text").get<std::string>()}}};
  });
  Client client(BackendMode::Live, nullptr, fn);
  EXPECT_EQ(code_of([&] { generate_interventions(client, Event("Emma felt hungry."), {}); }),
            ErrorCode::EmptyInterventionSet);
}

TEST(GenerateInterventions, CapKeepsCanonicalPrefix) {
  auto fn = std::make_shared<FunctionTransport>([](Endpoint, const json& body) -> json {
    json texts = json::array();
    const auto code = body.at("control_code").get<std::string>();
    const auto start = body.at("spans")[0][0].get<int>();
    for (int i = 0; i < 20; ++i) texts.push_back("R " + code + " " + std::to_string(start) + " " + std::to_string(100 + i));
    return {{"texts", texts}};
  });
  Client client(BackendMode::Live, nullptr, fn);
  InterventionConfig cfg;
  cfg.codes = {ControlCode::Negation, ControlCode::Lexical};
  const auto set = generate_interventions(client, Event("Emma felt hungry."), cfg);
  // 2 codes x 3 spans x 20 = 120 distinct rewrites
  ASSERT_EQ(set.interventions.size(), 50u);
  EXPECT_TRUE(std::is_sorted(set.interventions.begin(), set.interventions.end()));
  EXPECT_EQ(set.interventions.front().text(), "R lexical 0 100");
}

TEST(GenerateInterventions, RequestBudgetAndCodes) {
  auto counting = std::make_shared<CountingTransport>(std::make_shared<SyntheticLm>());
  Client client(BackendMode::Live, nullptr, counting);
  InterventionConfig cfg;
  const Event e("Emma felt hungry.");
  const auto set = generate_interventions(client, e, cfg);
  const auto bodies = counting->bodies(Endpoint::Infill);
  ASSERT_EQ(bodies.size(), 18u);  // 6 codes x 3 spans
  std::set<std::string> codes;
  for (const auto& b : bodies) {
    codes.insert(b.at("control_code").get<std::string>());
    EXPECT_EQ(b.at("num_samples"), 3);  // ceil(ceil(50 / 6) / 3)
    EXPECT_EQ(b.at("temperature"), 1.0);
    EXPECT_EQ(b.at("spans").size(), 1u);
  }
  EXPECT_EQ(codes, (std::set<std::string>{"resemantic", "negation", "lexical", "quantifier", "insert", "delete"}));
  for (const auto& i : set.interventions) EXPECT_NE(i.text(), e.text());
  EXPECT_LE(set.interventions.size(), cfg.cap);
}

TEST(GenerateInterventions, ReplayIsAPureFunctionOfTheStore) {
  TempDir dir;
  const Event e("Tom stayed up late playing games.");
  std::vector<Event> first;
  {
    Client rec(BackendMode::Record, std::make_shared<ScoreCache>(dir.path()), std::make_shared<SyntheticLm>());
    first = generate_interventions(rec, e, {}).interventions;
  }
  Client replay(BackendMode::Replay, std::make_shared<ScoreCache>(dir.path()), nullptr);
  EXPECT_EQ(generate_interventions(replay, e, {}).interventions, first);
}

TEST(GenerateInterventions, RejectsNonCounterfactualCodes) {
  Client client(BackendMode::Live, nullptr, std::make_shared<ForbiddenTransport>());
  InterventionConfig cfg;
  cfg.codes = {ControlCode::Shuffle};
  EXPECT_EQ(code_of([&] { generate_interventions(client, Event("Emma felt hungry."), cfg); }),
            ErrorCode::InvalidArgument);
}
