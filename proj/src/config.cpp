#include "cola/config.hpp"

#include <cstdlib>
#include <fstream>

#include "cola/causal_estimator.hpp"
#include "cola/error.hpp"

namespace cola {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad value for config key '") + key + "'");
  }
}

void reject_unknown(const json& doc, const char* where, std::initializer_list<std::string_view> allowed) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, std::string(where) + " must be an object");
  for (const auto& item : doc.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw Error(ErrorCode::InvalidArgument, "unknown key '" + item.key() + "' in " + where);
  }
}

}  // namespace

void EngineConfig::resolve() {
  pipeline.temporal_model = backend.models.temporal;
  pipeline.sampler.model = backend.models.generator;
  pipeline.interventions.model = backend.models.infill;
  pipeline.sampler.seed = static_cast<std::int64_t>(seed);
  pipeline.interventions.seed = static_cast<std::int64_t>(seed);
  pipeline.match.epsilon = epsilon.value_or(default_epsilon(backend.models.temporal));
}

json EngineConfig::to_json() const {
  json doc = cola::to_json(pipeline);
  doc.erase("temporal_model");
  doc["sampler"].erase("model");
  doc["sampler"].erase("seed");
  doc["interventions"].erase("model");
  doc["interventions"].erase("seed");
  doc["backend"] = {{"mode", std::string(to_string(backend.mode))},
                    {"base_url", backend.base_url},
                    {"timeout_seconds", backend.timeout_seconds},
                    {"models",
                     {{"temporal", backend.models.temporal},
                      {"generator", backend.models.generator},
                      {"infill", backend.models.infill},
                      {"clm", backend.models.clm},
                      {"cloze", backend.models.cloze}}}};
  doc["parallelism"] = parallelism;
  doc["cache_dir"] = cache_dir.string();
  doc["seed"] = seed;
  return doc;
}

EngineConfig engine_config_from_json(const json& doc, EngineConfig c) {
  reject_unknown(doc, "config", {"backend", "sampler", "interventions", "match", "parallelism", "cache_dir", "seed"});
  if (doc.contains("backend")) {
    const auto& b = doc.at("backend");
    reject_unknown(b, "backend", {"mode", "base_url", "timeout_seconds", "models"});
    if (b.contains("mode")) c.backend.mode = parse_backend_mode(b.at("mode").get<std::string>());
    read(b, "base_url", c.backend.base_url);
    read(b, "timeout_seconds", c.backend.timeout_seconds);
    if (b.contains("models")) {
      const auto& m = b.at("models");
      reject_unknown(m, "backend.models", {"temporal", "generator", "infill", "clm", "cloze"});
      read(m, "temporal", c.backend.models.temporal);
      read(m, "generator", c.backend.models.generator);
      read(m, "infill", c.backend.models.infill);
      read(m, "clm", c.backend.models.clm);
      read(m, "cloze", c.backend.models.cloze);
    }
  }
  json pipeline = json::object();
  for (const char* key : {"sampler", "interventions", "match"}) {
    if (!doc.contains(key)) continue;
    pipeline[key] = doc.at(key);
    for (const char* owned : {"model", "seed"}) {
      if (pipeline[key].is_object() && pipeline[key].contains(owned) && std::string(key) != "match")
        throw Error(ErrorCode::InvalidArgument,
                    std::string("'") + owned + "' is set under backend.models / top-level seed, not " + key);
    }
  }
  c.pipeline = pipeline_config_from_json(pipeline, c.pipeline);
  if (doc.contains("match") && doc.at("match").contains("epsilon")) c.epsilon = c.pipeline.match.epsilon;
  read(doc, "parallelism", c.parallelism);
  if (doc.contains("cache_dir")) c.cache_dir = doc.at("cache_dir").get<std::string>();
  read(doc, "seed", c.seed);
  if (c.parallelism == 0) throw Error(ErrorCode::InvalidArgument, "parallelism must be >= 1");
  return c;
}

EngineConfig load_engine_config(const std::optional<std::filesystem::path>& file) {
  EngineConfig c;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + file->string());
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::InvalidArgument, "config " + file->string() + " is not valid JSON: " + e.what());
    }
    c = engine_config_from_json(doc, c);
  }
  if (const char* dir = std::getenv("COLA_CACHE_DIR"); dir && *dir) c.cache_dir = dir;
  return c;
}

}  // namespace cola
