#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "cola/backend.hpp"
#include "cola/pipeline.hpp"

namespace cola {

struct ModelIds {
  std::string temporal = "bert-large-temporal";
  std::string generator = "gpt-j-6b";
  std::string infill = "polyjuice";
  std::string clm = "gpt2-large";
  std::string cloze = "roberta-large";
};

struct BackendConfig {
  BackendMode mode = BackendMode::Replay;
  std::string base_url = "http://127.0.0.1:8000";
  int timeout_seconds = 120;
  ModelIds models;
};

/// Everything a CLI run needs. The JSON form is
///   {"backend": {"mode", "base_url", "timeout_seconds", "models": {...}},
///    "sampler": {...}, "interventions": {...}, "match": {...},
///    "parallelism", "cache_dir", "seed"}
/// with every key optional.
struct EngineConfig {
  BackendConfig backend;
  PipelineConfig pipeline;
  std::size_t parallelism = 1;
  std::filesystem::path cache_dir = ".cola-cache";
  std::uint64_t seed = 0;
  /// Unset means the per-model default for the temporal predictor.
  std::optional<double> epsilon;

  /// Copies models, seed and epsilon into the pipeline config.
  void resolve();
  nlohmann::json to_json() const;
};

/// Rejects unknown keys; missing keys keep `base`.
EngineConfig engine_config_from_json(const nlohmann::json& doc, EngineConfig base = {});

/// Reads `file` if given, then applies COLA_CACHE_DIR from the environment.
EngineConfig load_engine_config(const std::optional<std::filesystem::path>& file);

}  // namespace cola
