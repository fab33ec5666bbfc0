#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cola/canonical.hpp"
#include "cola/score_cache.hpp"

namespace cola {

enum class Endpoint { FillMask, Generate, Infill, ScoreTokens, PseudoLoglik, Srl };

std::string_view to_string(Endpoint endpoint);
/// HTTP path, e.g. "/v1/fill_mask".
std::string path_of(Endpoint endpoint);
Endpoint parse_endpoint(std::string_view name);

inline constexpr std::string_view kMaskToken = "<MASK>";

/// One language-model call in canonical form. The body is exactly the JSON
/// sent on the wire; the hash covers endpoint and body.
struct BackendRequest {
  Endpoint endpoint;
  nlohmann::json body;

  /// Canonical bytes of {"body": ..., "endpoint": ...}.
  std::string canonical() const;
  Sha256 hash() const;
};

enum class Provenance { Live, Cache, Fixture };
std::string_view to_string(Provenance provenance);

struct BackendResponse {
  nlohmann::json body;
  Provenance provenance;
};

/// Byte offsets [start, end) into a UTF-8 text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct GenerateParams {
  std::string prompt;
  int num_samples = 1;
  int max_new_tokens = 15;
  double temperature = 0.9;
  std::int64_t seed = 0;
  std::string model;
};

struct InfillParams {
  std::string text;
  std::vector<Span> spans;
  std::string control_code;
  int num_samples = 1;
  double temperature = 1.0;
  std::int64_t seed = 0;
  std::string model;
};

struct SrlFrame {
  Span verb;
  std::optional<Span> arg0;
  std::optional<Span> arg1;
};

// Request builders validate preconditions and produce the wire body.
BackendRequest make_fill_mask_request(std::string_view templ, const std::vector<std::string>& candidates,
                                      std::string_view model);
BackendRequest make_generate_request(const GenerateParams& params);
BackendRequest make_infill_request(const InfillParams& params);
BackendRequest make_score_tokens_request(std::string_view text, std::string_view model);
BackendRequest make_pseudo_loglik_request(std::string_view text, std::string_view model);
BackendRequest make_srl_request(std::string_view text);

/// Checks `spans` against a text of `text_size` bytes: at least one span,
/// each non-empty and in bounds, none overlapping.
void validate_spans(const std::vector<Span>& spans, std::size_t text_size);

/// Cuts a raw generation to a single event: first sentence, at most
/// `max_words` whitespace-separated words, trimmed.
std::string truncate_generation(std::string_view text, int max_words);

/// Something that can answer a request over the network (or pretend to).
class Transport {
 public:
  virtual ~Transport() = default;
  virtual nlohmann::json post(Endpoint endpoint, const std::string& canonical_body) = 0;
};

/// JSON over HTTP POST to `<base_url>/v1/<endpoint>`.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::string base_url,
                         std::chrono::seconds timeout = std::chrono::seconds(120));
  nlohmann::json post(Endpoint endpoint, const std::string& canonical_body) override;

 private:
  std::string base_url_;
  std::chrono::seconds timeout_;
};

enum class BackendMode { Live, Record, Replay };
std::string_view to_string(BackendMode mode);
BackendMode parse_backend_mode(std::string_view name);

/// Uniform client for all language-model calls.
///
/// - Live: store (optional) acts as a cache; misses go to the transport.
/// - Record: like live, but a store is mandatory so every response is kept.
/// - Replay: answers only from the store; a miss is FixtureMiss and the
///   transport is never touched.
class Client {
 public:
  Client(BackendMode mode, std::shared_ptr<ScoreCache> store, std::shared_ptr<Transport> transport);

  BackendMode mode() const noexcept { return mode_; }

  BackendResponse send(const BackendRequest& request);

  /// Full-vocabulary probability of each candidate at the mask position.
  std::map<std::string, double> fill_mask(std::string_view templ,
                                          const std::vector<std::string>& candidates,
                                          std::string_view model);
  std::vector<std::string> generate(const GenerateParams& params);
  std::vector<std::string> infill(const InfillParams& params);
  std::vector<double> score_tokens(std::string_view text, std::string_view model);
  double pseudo_loglik(std::string_view text, std::string_view model);
  SrlFrame srl(std::string_view text);

  struct Counters {
    std::uint64_t live = 0;
    std::uint64_t cache = 0;
    std::uint64_t fixture = 0;
  };
  Counters counters() const;

 private:
  nlohmann::json postprocess(const BackendRequest& request, nlohmann::json body) const;

  BackendMode mode_;
  std::shared_ptr<ScoreCache> store_;
  std::shared_ptr<Transport> transport_;
  std::atomic<std::uint64_t> live_{0};
  std::atomic<std::uint64_t> cache_{0};
  std::atomic<std::uint64_t> fixture_{0};
};

}  // namespace cola
