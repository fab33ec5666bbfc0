#include "cola/backend.hpp"

#include <algorithm>
#include <cmath>

#include <httplib.h>

#include "cola/error.hpp"
#include "cola/text.hpp"

namespace cola {

using nlohmann::json;

std::string_view to_string(Endpoint endpoint) {
  switch (endpoint) {
    case Endpoint::FillMask: return "fill_mask";
    case Endpoint::Generate: return "generate";
    case Endpoint::Infill: return "infill";
    case Endpoint::ScoreTokens: return "score_tokens";
    case Endpoint::PseudoLoglik: return "pseudo_loglik";
    case Endpoint::Srl: return "srl";
  }
  return "unknown";
}

std::string path_of(Endpoint endpoint) { return "/v1/" + std::string(to_string(endpoint)); }

Endpoint parse_endpoint(std::string_view name) {
  for (auto e : {Endpoint::FillMask, Endpoint::Generate, Endpoint::Infill, Endpoint::ScoreTokens,
                 Endpoint::PseudoLoglik, Endpoint::Srl})
    if (to_string(e) == name) return e;
  throw Error(ErrorCode::InvalidArgument, "unknown endpoint '" + std::string(name) + "'");
}

std::string BackendRequest::canonical() const {
  return canonical_json(json{{"body", body}, {"endpoint", to_string(endpoint)}});
}

Sha256 BackendRequest::hash() const { return sha256(canonical()); }

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::Live: return "live";
    case Provenance::Cache: return "cache";
    case Provenance::Fixture: return "fixture";
  }
  return "unknown";
}

std::string_view to_string(BackendMode mode) {
  switch (mode) {
    case BackendMode::Live: return "live";
    case BackendMode::Record: return "record";
    case BackendMode::Replay: return "replay";
  }
  return "unknown";
}

BackendMode parse_backend_mode(std::string_view name) {
  if (name == "live") return BackendMode::Live;
  if (name == "record") return BackendMode::Record;
  if (name == "replay") return BackendMode::Replay;
  throw Error(ErrorCode::InvalidArgument, "unknown backend mode '" + std::string(name) + "'");
}

namespace {

void require_text(std::string_view text) {
  if (text::trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "text must be non-empty");
}

[[noreturn]] void malformed(Endpoint endpoint, const std::string& what) {
  throw Error(ErrorCode::MalformedResponse, std::string(to_string(endpoint)) + ": " + what);
}

bool is_number(const json& v) { return v.is_number() && std::isfinite(v.get<double>()); }

void check_texts(Endpoint endpoint, const json& body) {
  if (!body.is_object() || !body.contains("texts") || !body["texts"].is_array())
    malformed(endpoint, "expected {\"texts\": [str]}");
  for (const auto& t : body["texts"])
    if (!t.is_string()) malformed(endpoint, "non-string text");
}

std::optional<Span> parse_optional_span(Endpoint endpoint, const json& v) {
  if (v.is_null()) return std::nullopt;
  auto offset = [](const json& x) { return x.is_number_integer() && x.get<std::int64_t>() >= 0; };
  if (!v.is_array() || v.size() != 2 || !offset(v[0]) || !offset(v[1]))
    malformed(endpoint, "span must be [int, int] or null");
  return Span{v[0].get<std::size_t>(), v[1].get<std::size_t>()};
}

void validate_response(const BackendRequest& request, const json& body) {
  const Endpoint ep = request.endpoint;
  if (!body.is_object()) malformed(ep, "response is not an object");
  switch (ep) {
    case Endpoint::FillMask: {
      if (!body.contains("scores") || !body["scores"].is_object())
        malformed(ep, "expected {\"scores\": {token: float}}");
      const auto& scores = body["scores"];
      for (const auto& cand : request.body["candidates"]) {
        const auto key = cand.get<std::string>();
        if (!scores.contains(key)) malformed(ep, "missing candidate '" + key + "'");
        const auto& v = scores[key];
        if (!is_number(v) || v.get<double>() < 0.0 || v.get<double>() > 1.0)
          malformed(ep, "score for '" + key + "' outside [0, 1]");
      }
      break;
    }
    case Endpoint::Generate:
    case Endpoint::Infill:
      check_texts(ep, body);
      break;
    case Endpoint::ScoreTokens: {
      if (!body.contains("token_logprobs") || !body["token_logprobs"].is_array() ||
          body["token_logprobs"].empty())
        malformed(ep, "expected non-empty {\"token_logprobs\": [float]}");
      for (const auto& v : body["token_logprobs"])
        if (!is_number(v) || v.get<double>() > 0.0) malformed(ep, "log-probability above 0");
      break;
    }
    case Endpoint::PseudoLoglik: {
      if (!body.contains("avg_token_loglik") || !is_number(body["avg_token_loglik"]) ||
          body["avg_token_loglik"].get<double>() > 0.0)
        malformed(ep, "expected {\"avg_token_loglik\": float <= 0}");
      break;
    }
    case Endpoint::Srl: {
      if (!body.contains("verb")) malformed(ep, "missing 'verb'");
      if (!parse_optional_span(ep, body["verb"])) malformed(ep, "'verb' must not be null");
      parse_optional_span(ep, body.value("arg0", json()));
      parse_optional_span(ep, body.value("arg1", json()));
      break;
    }
  }
}

}  // namespace

void validate_spans(const std::vector<Span>& spans, std::size_t text_size) {
  if (spans.empty()) throw Error(ErrorCode::InvalidArgument, "at least one span is required");
  std::vector<Span> sorted = spans;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& s = sorted[i];
    if (s.start >= s.end || s.end > text_size)
      throw Error(ErrorCode::SpanOutOfBounds, "span [" + std::to_string(s.start) + ", " +
                                                  std::to_string(s.end) + ") outside text of " +
                                                  std::to_string(text_size) + " bytes");
    if (i > 0 && sorted[i - 1].end > s.start)
      throw Error(ErrorCode::OverlappingSpans, "spans overlap at byte " + std::to_string(s.start));
  }
}

std::string truncate_generation(std::string_view raw, int max_words) {
  const auto sentence = text::trim(text::first_sentence(text::trim(raw)));
  auto words = text::split_whitespace(sentence);
  if (max_words >= 0 && words.size() > static_cast<std::size_t>(max_words))
    words.resize(static_cast<std::size_t>(max_words));
  return text::join(words, " ");
}

BackendRequest make_fill_mask_request(std::string_view templ, const std::vector<std::string>& candidates,
                                      std::string_view model) {
  const auto first = templ.find(kMaskToken);
  if (first == std::string_view::npos)
    throw Error(ErrorCode::NoMask, "template has no " + std::string(kMaskToken));
  if (templ.find(kMaskToken, first + kMaskToken.size()) != std::string_view::npos)
    throw Error(ErrorCode::MultipleMasks, "template has more than one " + std::string(kMaskToken));
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no candidate tokens");
  return {Endpoint::FillMask, json{{"template", templ},
                                   {"mask_token", kMaskToken},
                                   {"candidates", candidates},
                                   {"model", model}}};
}

BackendRequest make_generate_request(const GenerateParams& p) {
  if (p.num_samples < 1) throw Error(ErrorCode::InvalidArgument, "num_samples must be >= 1");
  if (!(p.temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
  if (p.max_new_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_new_tokens must be >= 1");
  return {Endpoint::Generate, json{{"prompt", p.prompt},
                                   {"num_samples", p.num_samples},
                                   {"max_new_tokens", p.max_new_tokens},
                                   {"temperature", p.temperature},
                                   {"seed", p.seed},
                                   {"model", p.model}}};
}

BackendRequest make_infill_request(const InfillParams& p) {
  validate_spans(p.spans, p.text.size());
  if (p.num_samples < 1) throw Error(ErrorCode::InvalidArgument, "num_samples must be >= 1");
  if (!(p.temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
  json spans = json::array();
  for (const auto& s : p.spans) spans.push_back(json::array({s.start, s.end}));
  return {Endpoint::Infill, json{{"text", p.text},
                                 {"spans", std::move(spans)},
                                 {"control_code", p.control_code},
                                 {"num_samples", p.num_samples},
                                 {"temperature", p.temperature},
                                 {"seed", p.seed},
                                 {"model", p.model}}};
}

BackendRequest make_score_tokens_request(std::string_view text, std::string_view model) {
  require_text(text);
  return {Endpoint::ScoreTokens, json{{"text", text}, {"model", model}}};
}

BackendRequest make_pseudo_loglik_request(std::string_view text, std::string_view model) {
  require_text(text);
  return {Endpoint::PseudoLoglik, json{{"text", text}, {"model", model}}};
}

BackendRequest make_srl_request(std::string_view text) {
  require_text(text);
  return {Endpoint::Srl, json{{"text", text}}};
}

HttpTransport::HttpTransport(std::string base_url, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

json HttpTransport::post(Endpoint endpoint, const std::string& canonical_body) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  const auto path = path_of(endpoint);
  auto res = client.Post(path, canonical_body, "application/json");
  if (!res)
    throw Error(ErrorCode::BackendUnreachable,
                base_url_ + path + ": " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw Error(ErrorCode::BackendStatus,
                base_url_ + path + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedResponse, base_url_ + path + ": " + e.what());
  }
}

Client::Client(BackendMode mode, std::shared_ptr<ScoreCache> store, std::shared_ptr<Transport> transport)
    : mode_(mode), store_(std::move(store)), transport_(std::move(transport)) {
  if (mode_ != BackendMode::Live && !store_)
    throw Error(ErrorCode::InvalidArgument,
                std::string(to_string(mode_)) + " mode requires a fixture store");
  if (mode_ != BackendMode::Replay && !transport_)
    throw Error(ErrorCode::InvalidArgument,
                std::string(to_string(mode_)) + " mode requires a transport");
}

json Client::postprocess(const BackendRequest& request, json body) const {
  if (request.endpoint == Endpoint::Generate) {
    const int max_words = request.body["max_new_tokens"].get<int>();
    for (auto& t : body["texts"]) t = truncate_generation(t.get<std::string>(), max_words);
  }
  return body;
}

BackendResponse Client::send(const BackendRequest& request) {
  const Sha256 hash = request.hash();
  auto parse_stored = [&](const std::string& bytes) {
    try {
      return json::parse(bytes);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::MalformedResponse, "stored response " + to_hex(hash) + ": " + e.what());
    }
  };

  if (store_) {
    if (auto stored = store_->get(hash)) {
      json body = parse_stored(*stored);
      validate_response(request, body);
      if (mode_ == BackendMode::Replay) {
        ++fixture_;
        return {std::move(body), Provenance::Fixture};
      }
      ++cache_;
      return {std::move(body), Provenance::Cache};
    }
  }
  if (mode_ == BackendMode::Replay)
    throw Error(ErrorCode::FixtureMiss,
                "no fixture for " + std::string(to_string(request.endpoint)) + " request " + to_hex(hash));

  json raw = transport_->post(request.endpoint, canonical_json(request.body));
  validate_response(request, raw);
  // Round-trip through canonical bytes so live and replayed values are identical.
  const std::string bytes = canonical_json(postprocess(request, std::move(raw)));
  if (store_) store_->put(hash, bytes);
  ++live_;
  return {json::parse(bytes), Provenance::Live};
}

std::map<std::string, double> Client::fill_mask(std::string_view templ,
                                                const std::vector<std::string>& candidates,
                                                std::string_view model) {
  const auto request = make_fill_mask_request(templ, candidates, model);
  const auto response = send(request);
  std::map<std::string, double> out;
  for (const auto& c : candidates) out[c] = response.body["scores"][c].get<double>();
  return out;
}

std::vector<std::string> Client::generate(const GenerateParams& params) {
  return send(make_generate_request(params)).body["texts"].get<std::vector<std::string>>();
}

std::vector<std::string> Client::infill(const InfillParams& params) {
  return send(make_infill_request(params)).body["texts"].get<std::vector<std::string>>();
}

std::vector<double> Client::score_tokens(std::string_view text, std::string_view model) {
  return send(make_score_tokens_request(text, model)).body["token_logprobs"].get<std::vector<double>>();
}

double Client::pseudo_loglik(std::string_view text, std::string_view model) {
  return send(make_pseudo_loglik_request(text, model)).body["avg_token_loglik"].get<double>();
}

SrlFrame Client::srl(std::string_view text) {
  const auto response = send(make_srl_request(text));
  const auto& body = response.body;
  SrlFrame frame;
  frame.verb = *parse_optional_span(Endpoint::Srl, body["verb"]);
  frame.arg0 = parse_optional_span(Endpoint::Srl, body.value("arg0", json()));
  frame.arg1 = parse_optional_span(Endpoint::Srl, body.value("arg1", json()));
  return frame;
}

Client::Counters Client::counters() const { return {live_.load(), cache_.load(), fixture_.load()}; }

}  // namespace cola
