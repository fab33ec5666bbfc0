#include <gtest/gtest.h>

#include "cola/backend.hpp"
#include "cola/canonical.hpp"
#include "cola/error.hpp"
#include "fixtures.hpp"
#include "synthetic_lm.hpp"
#include "test_server.hpp"

using namespace cola;
using namespace cola::testing;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Io;
}

/// Store whose only content is the given (request, response) pairs.
std::shared_ptr<ScoreCache> store_with(const TempDir& dir,
                                       const std::vector<std::pair<BackendRequest, json>>& entries) {
  auto store = std::make_shared<ScoreCache>(dir.path());
  for (const auto& [req, resp] : entries) store->put(req.hash(), canonical_json(resp));
  return store;
}

const std::vector<std::string> kCandidates = {"before", "after", "[none]"};

}  // namespace

TEST(Endpoints, PathsAndNames) {
  EXPECT_EQ(path_of(Endpoint::FillMask), "/v1/fill_mask");
  EXPECT_EQ(path_of(Endpoint::Generate), "/v1/generate");
  EXPECT_EQ(path_of(Endpoint::Infill), "/v1/infill");
  EXPECT_EQ(path_of(Endpoint::ScoreTokens), "/v1/score_tokens");
  EXPECT_EQ(path_of(Endpoint::PseudoLoglik), "/v1/pseudo_loglik");
  EXPECT_EQ(path_of(Endpoint::Srl), "/v1/srl");
  for (auto ep : {Endpoint::FillMask, Endpoint::Generate, Endpoint::Infill, Endpoint::ScoreTokens,
                  Endpoint::PseudoLoglik, Endpoint::Srl})
    EXPECT_EQ(parse_endpoint(to_string(ep)), ep);
}

TEST(RequestBuilders, WireBodiesAreBitExact) {
  EXPECT_EQ(canonical_json(make_fill_mask_request("A <MASK> B", kCandidates, "m").body),
            R"({"candidates":["before","after","[none]"],"mask_token":"<MASK>","model":"m","template":"A <MASK> B"})");
  GenerateParams g{"E Before that,", 50, 15, 0.9, 3, "gpt-j-6b"};
  EXPECT_EQ(canonical_json(make_generate_request(g).body),
            R"({"max_new_tokens":15,"model":"gpt-j-6b","num_samples":50,"prompt":"E Before that,","seed":3,"temperature":0.9})");
  InfillParams p{"Emma felt hungry.", {{5, 16}}, "negation", 9, 1.0, 0, "polyjuice"};
  EXPECT_EQ(canonical_json(make_infill_request(p).body),
            R"({"control_code":"negation","model":"polyjuice","num_samples":9,"seed":0,"spans":[[5,16]],"temperature":1,"text":"Emma felt hungry."})");
  EXPECT_EQ(canonical_json(make_score_tokens_request("t", "gpt2").body), R"({"model":"gpt2","text":"t"})");
  EXPECT_EQ(canonical_json(make_pseudo_loglik_request("t", "bert").body), R"({"model":"bert","text":"t"})");
  EXPECT_EQ(canonical_json(make_srl_request("t").body), R"({"text":"t"})");
}

TEST(RequestBuilders, HashCoversEndpointAndBody) {
  const auto a = make_score_tokens_request("t", "m");
  const auto b = make_pseudo_loglik_request("t", "m");
  EXPECT_EQ(a.body, b.body);
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.canonical(), R"({"body":{"model":"m","text":"t"},"endpoint":"score_tokens"})");
  EXPECT_EQ(a.hash(), sha256(a.canonical()));
}

TEST(RequestBuilders, SwappedTemporalArgumentsHashDifferently) {
  EXPECT_NE(make_fill_mask_request("A <MASK> B", kCandidates, "m").hash(),
            make_fill_mask_request("B <MASK> A", kCandidates, "m").hash());
}

TEST(RequestBuilders, Preconditions) {
  EXPECT_EQ(code_of([] { make_fill_mask_request("no mask", kCandidates, "m"); }), ErrorCode::NoMask);
  EXPECT_EQ(code_of([] { make_fill_mask_request("<MASK> <MASK>", kCandidates, "m"); }), ErrorCode::MultipleMasks);
  EXPECT_EQ(code_of([] { make_fill_mask_request("a <MASK>", {}, "m"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { make_generate_request({"p", 0, 15, 0.9, 0, "m"}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { make_generate_request({"p", 1, 15, 0.0, 0, "m"}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { make_score_tokens_request("", "m"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { make_pseudo_loglik_request("  ", "m"); }), ErrorCode::InvalidArgument);
  InfillParams p{"Emma felt hungry.", {}, "negation", 1, 1.0, 0, "m"};
  EXPECT_EQ(code_of([&] { make_infill_request(p); }), ErrorCode::InvalidArgument);
  p.spans = {{5, 40}};
  EXPECT_EQ(code_of([&] { make_infill_request(p); }), ErrorCode::SpanOutOfBounds);
  p.spans = {{3, 3}};
  EXPECT_EQ(code_of([&] { make_infill_request(p); }), ErrorCode::SpanOutOfBounds);
  p.spans = {{0, 9}, {5, 12}};
  EXPECT_EQ(code_of([&] { make_infill_request(p); }), ErrorCode::OverlappingSpans);
  p.spans = {{5, 9}, {0, 4}};
  EXPECT_NO_THROW(make_infill_request(p));
}

TEST(TruncateGeneration, FirstSentenceThenWordCap) {
  EXPECT_EQ(truncate_generation(" She was tired. Then she slept.", 15), "She was tired.");
  EXPECT_EQ(truncate_generation("Wow! Nice", 15), "Wow!");
  EXPECT_EQ(truncate_generation("version 1.5 was out", 15), "version 1.5 was out");
  EXPECT_EQ(truncate_generation("one two three four", 2), "one two");
}

TEST(Client, ModeRequirements) {
  TempDir dir;
  auto store = std::make_shared<ScoreCache>(dir.path());
  auto lm = std::make_shared<SyntheticLm>();
  EXPECT_EQ(code_of([&] { Client(BackendMode::Replay, nullptr, nullptr); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { Client(BackendMode::Record, store, nullptr); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { Client(BackendMode::Live, nullptr, nullptr); }), ErrorCode::InvalidArgument);
  EXPECT_NO_THROW(Client(BackendMode::Replay, store, nullptr));
  EXPECT_NO_THROW(Client(BackendMode::Live, nullptr, lm));
}

TEST(Client, ReplayReturnsFixtureVerbatim) {
  TempDir dir;
  const auto req = make_fill_mask_request("A <MASK> B", kCandidates, "m");
  auto store = store_with(dir, {{req, {{"scores", {{"before", 0.7}, {"after", 0.1}, {"[none]", 0.05}}}}}});
  auto forbidden = std::make_shared<ForbiddenTransport>();
  Client client(BackendMode::Replay, store, forbidden);
  const auto resp = client.send(req);
  EXPECT_EQ(resp.provenance, Provenance::Fixture);
  const auto scores = client.fill_mask("A <MASK> B", kCandidates, "m");
  EXPECT_EQ(scores.at("before"), 0.7);
  EXPECT_EQ(scores.at("after"), 0.1);
  EXPECT_EQ(scores.at("[none]"), 0.05);
  EXPECT_EQ(forbidden->calls(), 0u);
  EXPECT_EQ(client.counters().fixture, 2u);
}

TEST(Client, ReplayMissIsFixtureMissNamingTheHash) {
  TempDir dir;
  auto store = std::make_shared<ScoreCache>(dir.path());
  Client client(BackendMode::Replay, store, nullptr);
  const auto req = make_score_tokens_request("unseen", "gpt2");
  try {
    client.send(req);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FixtureMiss);
    EXPECT_NE(std::string(e.what()).find(to_hex(req.hash())), std::string::npos);
  }
}

TEST(Client, GenerateFixturesAndDeterminism) {
  TempDir dir;
  GenerateParams one{"Emma made a steak. Before that,", 1, 15, 0.9, 0, "gpt-j-6b"};
  auto store = store_with(dir, {{make_generate_request(one), {{"texts", {"She was tired."}}}}});
  Client client(BackendMode::Replay, store, nullptr);
  EXPECT_EQ(client.generate(one), std::vector<std::string>{"She was tired."});
  EXPECT_EQ(client.generate(one), client.generate(one));
}

TEST(Client, RecordThenReplayIsIdentical) {
  TempDir dir;
  auto counting = std::make_shared<CountingTransport>(std::make_shared<SyntheticLm>());
  GenerateParams g{"Tom ran. Before that,", 50, 15, 0.9, 7, "gpt-j-6b"};
  std::vector<std::string> recorded;
  {
    Client rec(BackendMode::Record, std::make_shared<ScoreCache>(dir.path()), counting);
    recorded = rec.generate(g);
    EXPECT_EQ(recorded.size(), 50u);
    EXPECT_EQ(rec.send(make_generate_request(g)).provenance, Provenance::Cache);
    EXPECT_EQ(rec.counters().live, 1u);
  }
  EXPECT_EQ(counting->calls(), 1u);
  Client replay(BackendMode::Replay, std::make_shared<ScoreCache>(dir.path()), nullptr);
  EXPECT_EQ(replay.generate(g), recorded);
  for (const auto& t : recorded) EXPECT_EQ(t, truncate_generation(t, 15));
}

TEST(Client, LiveGenerationsAreSentenceTruncated) {
  auto scripted = std::make_shared<ScriptedTransport>();
  GenerateParams g{"p", 2, 3, 0.9, 0, "m"};
  scripted->set(make_generate_request(g), {{"texts", {"He slept. Then woke.", "one two three four five"}}});
  Client client(BackendMode::Live, nullptr, scripted);
  EXPECT_EQ(client.generate(g), (std::vector<std::string>{"He slept.", "one two three"}));
}

TEST(Client, DifferentlyOrderedBodiesShareOneCacheEntry) {
  TempDir dir;
  auto counting = std::make_shared<CountingTransport>(std::make_shared<SyntheticLm>());
  Client client(BackendMode::Record, std::make_shared<ScoreCache>(dir.path()), counting);
  BackendRequest a{Endpoint::ScoreTokens, json::parse(R"({"text":"a b","model":"gpt2"})")};
  BackendRequest b{Endpoint::ScoreTokens, json::parse(R"({"model":"gpt2","text":"a b"})")};
  client.send(a);
  EXPECT_EQ(client.send(b).provenance, Provenance::Cache);
  EXPECT_EQ(counting->calls(), 1u);
}

TEST(Client, InfillReturnsDuplicatesAsIs) {
  auto scripted = std::make_shared<ScriptedTransport>();
  InfillParams p{"Emma felt hungry.", {{5, 16}}, "negation", 3, 1.0, 0, "polyjuice"};
  scripted->set(make_infill_request(p),
                {{"texts", {"Emma didn't feel hungry.", "Emma didn't feel hungry.", "Emma was full."}}});
  Client client(BackendMode::Live, nullptr, scripted);
  EXPECT_EQ(client.infill(p).size(), 3u);
}

TEST(Client, ScoreTokensAndPseudoLoglik) {
  auto scripted = std::make_shared<ScriptedTransport>();
  scripted->set(make_score_tokens_request("x y", "gpt2"), {{"token_logprobs", {-1.0, -3.0}}});
  scripted->set(make_pseudo_loglik_request("x y", "bert"), {{"avg_token_loglik", -2.5}});
  scripted->set(make_pseudo_loglik_request("x", "bert"), {{"avg_token_loglik", 0.0}});
  Client client(BackendMode::Live, nullptr, scripted);
  EXPECT_EQ(client.score_tokens("x y", "gpt2"), (std::vector<double>{-1.0, -3.0}));
  EXPECT_EQ(client.pseudo_loglik("x y", "bert"), -2.5);
  EXPECT_EQ(client.pseudo_loglik("x", "bert"), 0.0);
}

TEST(Client, InvalidResponsesAreMalformed) {
  auto scripted = std::make_shared<ScriptedTransport>();
  scripted->set(make_fill_mask_request("a <MASK> b", kCandidates, "m"),
                {{"scores", {{"before", 1.2}, {"after", 0.1}, {"[none]", 0.0}}}});
  scripted->set(make_fill_mask_request("c <MASK> d", kCandidates, "m"), {{"scores", {{"before", 0.2}}}});
  scripted->set(make_score_tokens_request("t", "m"), {{"token_logprobs", {-1.0, 0.5}}});
  scripted->set(make_pseudo_loglik_request("t", "m"), {{"avg_token_loglik", 0.1}});
  scripted->set(make_generate_request({"p", 1, 15, 0.9, 0, "m"}), {{"texts", {1, 2}}});
  scripted->set(make_srl_request("t"), {{"verb", nullptr}});
  Client client(BackendMode::Live, nullptr, scripted);
  EXPECT_EQ(code_of([&] { client.fill_mask("a <MASK> b", kCandidates, "m"); }), ErrorCode::MalformedResponse);
  EXPECT_EQ(code_of([&] { client.fill_mask("c <MASK> d", kCandidates, "m"); }), ErrorCode::MalformedResponse);
  EXPECT_EQ(code_of([&] { client.score_tokens("t", "m"); }), ErrorCode::MalformedResponse);
  EXPECT_EQ(code_of([&] { client.pseudo_loglik("t", "m"); }), ErrorCode::MalformedResponse);
  EXPECT_EQ(code_of([&] { client.generate({"p", 1, 15, 0.9, 0, "m"}); }), ErrorCode::MalformedResponse);
  EXPECT_EQ(code_of([&] { client.srl("t"); }), ErrorCode::MalformedResponse);
}

TEST(Client, InvalidResponsesAreNotStored) {
  TempDir dir;
  auto scripted = std::make_shared<ScriptedTransport>();
  scripted->set(make_pseudo_loglik_request("t", "m"), {{"avg_token_loglik", 0.1}});
  auto store = std::make_shared<ScoreCache>(dir.path());
  Client client(BackendMode::Record, store, scripted);
  EXPECT_THROW(client.pseudo_loglik("t", "m"), Error);
  EXPECT_EQ(store->stats().entries, 0u);
}

TEST(Client, SrlFrames) {
  auto scripted = std::make_shared<ScriptedTransport>();
  scripted->set(make_srl_request("Emma felt hungry."), {{"verb", {5, 9}}, {"arg0", {0, 4}}, {"arg1", nullptr}});
  Client client(BackendMode::Live, nullptr, scripted);
  const auto frame = client.srl("Emma felt hungry.");
  EXPECT_EQ(frame.verb, (Span{5, 9}));
  EXPECT_EQ(frame.arg0, (Span{0, 4}));
  EXPECT_FALSE(frame.arg1.has_value());
}

TEST(HttpTransport, ServesAllEndpointsOverHttp) {
  TestServer server;
  TempDir dir;
  auto http = std::make_shared<HttpTransport>(server.base_url(), std::chrono::seconds(10));
  Client client(BackendMode::Record, std::make_shared<ScoreCache>(dir.path()), http);
  const auto scores = client.fill_mask("A <MASK> B", kCandidates, "bert");
  for (const auto& c : kCandidates) {
    EXPECT_GE(scores.at(c), 0.0);
    EXPECT_LE(scores.at(c), 1.0);
  }
  EXPECT_EQ(client.generate({"A. Before that,", 4, 15, 0.9, 1, "gpt"}).size(), 4u);
  EXPECT_EQ(client.infill({"Emma felt hungry.", {{5, 9}}, "negation", 2, 1.0, 0, "pj"}).size(), 2u);
  for (double v : client.score_tokens("a b c", "gpt2")) EXPECT_LE(v, 0.0);
  EXPECT_LE(client.pseudo_loglik("a b c", "bert"), 0.0);
  EXPECT_EQ(client.srl("Emma felt hungry.").verb, (Span{5, 9}));
  EXPECT_EQ(server.requests(), 6u);
}

TEST(HttpTransport, ErrorsMapToBackendCodes) {
  TestServer server([](Endpoint ep, const std::string&, httplib::Response& res) {
    if (ep == Endpoint::ScoreTokens) {
      res.status = 500;
      res.set_content("boom", "text/plain");
      return true;
    }
    if (ep == Endpoint::PseudoLoglik) {
      res.set_content("{not json", "application/json");
      return true;
    }
    return false;
  });
  HttpTransport http(server.base_url(), std::chrono::seconds(10));
  EXPECT_EQ(code_of([&] { http.post(Endpoint::ScoreTokens, R"({"model":"m","text":"t"})"); }),
            ErrorCode::BackendStatus);
  EXPECT_EQ(code_of([&] { http.post(Endpoint::PseudoLoglik, R"({"model":"m","text":"t"})"); }),
            ErrorCode::MalformedResponse);
  HttpTransport dead("http://127.0.0.1:1", std::chrono::seconds(2));
  EXPECT_EQ(code_of([&] { dead.post(Endpoint::Srl, R"({"text":"t"})"); }), ErrorCode::BackendUnreachable);
  EXPECT_EQ(category(ErrorCode::BackendUnreachable), ErrorCategory::Backend);
  EXPECT_EQ(category(ErrorCode::FixtureMiss), ErrorCategory::Backend);
  EXPECT_EQ(category(ErrorCode::MalformedRecord), ErrorCategory::Data);
}
