#include "cola/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "cola/canonical.hpp"
#include "cola/config.hpp"
#include "cola/covariate_sampler.hpp"
#include "cola/error.hpp"
#include "cola/event_model.hpp"
#include "cola/finetune_corpus.hpp"
#include "cola/intervention_generator.hpp"
#include "cola/pipeline.hpp"
#include "cola/score_cache.hpp"
#include "cola/task_runner.hpp"

namespace cola {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct EngineFlags {
  std::string config;
  std::string mode;
  std::string cache_dir;
  std::string base_url;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  double epsilon = 0.0;
  std::string normalizations;
  bool keep_all = false;
  bool no_interventions = false;
  bool single_stamp = false;
  std::string sampling_mode;
  std::size_t n = 0;
  std::string codes;
  std::string span_method;
  std::string temporal_model;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* parallelism_opt = nullptr;
  CLI::Option* epsilon_opt = nullptr;
  CLI::Option* norm_opt = nullptr;
  CLI::Option* n_opt = nullptr;

  /// With `mode_is_sampling`, --mode selects union/intersection sampling and
  /// the backend mode is only reachable as --backend-mode.
  void attach(CLI::App* app, bool mode_is_sampling = false) {
    app->add_option("--config", config, "JSON config file");
    const auto backend_modes = CLI::IsMember({"live", "record", "replay"});
    if (mode_is_sampling) {
      app->add_option("--backend-mode", mode, "backend mode")->check(backend_modes);
      app->add_option("--mode,--sampling", sampling_mode, "covariate sampling")
          ->check(CLI::IsMember({"union", "intersection"}));
      n_opt = app->add_option("--n,--covariates", n, "covariate set size")->check(CLI::PositiveNumber);
    } else {
      app->add_option("--mode,--backend-mode", mode, "backend mode")->check(backend_modes);
      app->add_option("--sampling", sampling_mode, "covariate sampling")
          ->check(CLI::IsMember({"union", "intersection"}));
      n_opt = app->add_option("--covariates", n, "covariate set size")->check(CLI::PositiveNumber);
    }
    app->add_option("--cache-dir", cache_dir, "fixture / cache directory");
    app->add_option("--base-url", base_url, "backend base URL");
    seed_opt = app->add_option("--seed", seed, "global seed");
    parallelism_opt = app->add_option("--parallelism", parallelism, "concurrent pairs")->check(CLI::PositiveNumber);
    epsilon_opt = app->add_option("--epsilon", epsilon, "matching threshold")->check(CLI::NonNegativeNumber);
    norm_opt = app->add_option("--normalizations", normalizations, "subset of DSQCE");
    app->add_flag("--keep-all", keep_all, "average over every intervention");
    app->add_flag("--no-interventions", no_interventions, "score by temporal precedence only");
    app->add_flag("--single-timestamp", single_stamp, "sample covariates before the treatment event only");
    app->add_option("--codes,--control-codes", codes, "comma-separated control codes");
    app->add_option("--span-method", span_method, "heuristic or remote_srl");
    app->add_option("--temporal-model", temporal_model, "temporal predictor model id");
  }

  EngineConfig resolve() const {
    std::optional<fs::path> file;
    if (!config.empty()) file = config;
    auto c = load_engine_config(file);
    if (!mode.empty()) c.backend.mode = parse_backend_mode(mode);
    if (!cache_dir.empty()) c.cache_dir = cache_dir;
    if (!base_url.empty()) c.backend.base_url = base_url;
    if (seed_opt->count()) c.seed = seed;
    if (parallelism_opt->count()) c.parallelism = parallelism;
    if (epsilon_opt->count()) c.epsilon = epsilon;
    if (norm_opt->count()) c.pipeline.match.normalizations = Normalizations::parse(normalizations);
    if (keep_all) c.pipeline.match.keep_all = true;
    if (no_interventions) c.pipeline.interventions.enabled = false;
    if (single_stamp) c.pipeline.sampler.multistamp = false;
    if (!sampling_mode.empty()) c.pipeline.sampler.mode = parse_sampling_mode(sampling_mode);
    if (n_opt->count()) c.pipeline.sampler.n = n;
    if (!codes.empty()) c.pipeline.interventions.codes = parse_control_codes(codes);
    if (!span_method.empty()) c.pipeline.interventions.span_method = parse_span_method(span_method);
    if (!temporal_model.empty()) c.backend.models.temporal = temporal_model;
    c.resolve();
    return c;
  }
};

struct Session {
  EngineConfig config;
  std::shared_ptr<ScoreCache> store;
  std::unique_ptr<Client> client;
};

Session open_session(const EngineConfig& config, const CliEnvironment& env) {
  Session s{config, nullptr, nullptr};
  std::shared_ptr<Transport> transport;
  if (config.backend.mode == BackendMode::Replay) {
    if (!fs::exists(config.cache_dir / ScoreCache::kLogName))
      throw Error(ErrorCode::FixtureMiss, "replay mode needs an existing fixture store at " + config.cache_dir.string());
  } else {
    transport = env.transport ? env.transport
                              : std::make_shared<HttpTransport>(config.backend.base_url,
                                                                std::chrono::seconds(config.backend.timeout_seconds));
  }
  if (config.backend.mode != BackendMode::Live) s.store = std::make_shared<ScoreCache>(config.cache_dir);
  s.client = std::make_unique<Client>(config.backend.mode, s.store, transport);
  return s;
}

void log_counters(const Client& client, std::ostream& err) {
  const auto c = client.counters();
  err << "backend responses: live=" << c.live << " cache=" << c.cache << " fixture=" << c.fixture << "\n";
}

const EventSequence& find_sequence(const std::vector<EventSequence>& dataset, const std::string& id) {
  for (const auto& s : dataset)
    if (s.id == id) return s;
  throw Error(ErrorCode::InvalidArgument, "no sequence with id '" + id + "'");
}

void emit(std::ostream& out, const json& doc) { out << canonical_json(doc) << "\n"; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

json covariates_json(const CovariateSet& set) {
  json cov = json::array();
  for (const auto& e : set.covariates) cov.push_back(e.text());
  json sources = json::object();
  for (const auto& [text, stamps] : set.source_timestamps) sources[text] = stamps;
  return {{"target", set.target}, {"covariates", cov}, {"source_timestamps", sources}};
}

json baseline_json(const std::string& split, const std::vector<EventSequence>& seqs, std::size_t trials,
                   std::uint64_t seed) {
  const auto counts = split_counts(seqs);
  const auto analytic = random_baseline_expectation(counts);
  json per_k = json::object();
  for (const auto& [k, acc] : analytic.per_k_accuracy) per_k[std::to_string(k)] = acc;
  json doc = {{"split", split},
              {"sequences", counts.sequences()},
              {"positives", counts.positives},
              {"negatives", counts.negatives},
              {"analytic",
               {{"accuracy", analytic.accuracy},
                {"f1", analytic.f1},
                {"f1_undefined", analytic.f1_undefined},
                {"per_k_accuracy", per_k}}}};
  if (trials > 0) {
    const auto mc = monte_carlo_random_baseline(seqs, trials, seed);
    doc["monte_carlo"] = {{"trials", mc.trials}, {"accuracy", mc.accuracy}, {"f1", mc.f1}};
  }
  return doc;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const CliEnvironment& env) {
  CLI::App app{"COLA contextualized commonsense causal reasoning"};
  app.name("cola");
  app.require_subcommand(1);

  // eval
  auto* eval = app.add_subcommand("eval", "score, rank and evaluate a labeled dataset");
  EngineFlags eval_flags;
  eval_flags.attach(eval);
  std::string eval_dataset, eval_scorer = "cola", eval_split = "all", eval_trace, eval_report;
  eval->add_option("--dataset", eval_dataset, "dataset JSONL")->required();
  eval->add_option("--scorer", eval_scorer, "pair scorer")->check(CLI::IsMember({"cola", "clm", "cloze", "random"}));
  eval->add_option("--split", eval_split, "restrict to one split")
      ->check(CLI::IsMember({"validation", "testing", "unsplit", "all"}));
  eval->add_option("--trace", eval_trace, "per-pair trace JSONL output");
  eval->add_option("--report", eval_report, "also write the report here");

  // score-pair
  auto* score_pair = app.add_subcommand("score-pair", "estimate one pair and print the full diagnostics");
  EngineFlags sp_flags;
  sp_flags.attach(score_pair);
  std::string sp_dataset, sp_id;
  std::size_t sp_index = 0;
  score_pair->add_option("--dataset", sp_dataset, "dataset JSONL")->required();
  score_pair->add_option("--sequence-id", sp_id, "sequence id")->required();
  score_pair->add_option("--index", sp_index, "1-based cause index")->required();

  // sample-covariates
  auto* sample = app.add_subcommand("sample-covariates", "sample the covariate set for one treatment event");
  EngineFlags sc_flags;
  sc_flags.attach(sample, true);
  std::string sc_dataset, sc_id;
  std::size_t sc_index = 0;
  sample->add_option("--dataset", sc_dataset, "dataset JSONL")->required();
  sample->add_option("--sequence-id", sc_id, "sequence id")->required();
  sample->add_option("--index", sc_index, "1-based treatment index")->required();

  // gen-interventions
  auto* gen = app.add_subcommand("gen-interventions", "generate interventions for one event");
  EngineFlags gi_flags;
  gi_flags.attach(gen);
  std::string gi_event;
  gen->add_option("--text,--event", gi_event, "event text")->required();

  // build-corpus
  auto* corpus = app.add_subcommand("build-corpus", "build the temporal fine-tuning corpus from stories");
  std::string bc_stories, bc_output;
  CorpusOptions bc_options;
  corpus->add_option("--stories", bc_stories, "story corpus JSONL")->required();
  corpus->add_option("--output", bc_output, "output JSONL")->required();
  corpus->add_option("--target-size", bc_options.target_size, "examples to emit (0 = all)");
  corpus->add_option("--negative-ratio", bc_options.negative_ratio, "negatives per positive")
      ->check(CLI::PositiveNumber);
  corpus->add_option("--seed", bc_options.seed, "seed");

  // cache-stats
  auto* stats = app.add_subcommand("cache-stats", "describe a fixture / cache directory");
  std::string cs_config, cs_dir;
  stats->add_option("--config", cs_config, "JSON config file");
  stats->add_option("--cache-dir", cs_dir, "cache directory");

  // random-baseline
  auto* baseline = app.add_subcommand("random-baseline", "analytic and Monte-Carlo random baseline");
  std::string rb_dataset;
  std::size_t rb_trials = 10000;
  std::uint64_t rb_seed = 0;
  baseline->add_option("--dataset", rb_dataset, "dataset JSONL")->required();
  baseline->add_option("--trials", rb_trials, "Monte-Carlo trials (0 skips)");
  baseline->add_option("--seed", rb_seed, "seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (eval->parsed()) {
      const auto config = eval_flags.resolve();
      auto dataset = load_dataset(eval_dataset);
      if (eval_split != "all") {
        const auto want = parse_split(eval_split);
        std::erase_if(dataset, [&](const EventSequence& s) { return s.split != want; });
      }
      auto session = open_session(config, env);
      Engine engine(*session.client, config.pipeline);
      Scorer scorer;
      if (eval_scorer == "cola") scorer = cola_scorer(engine);
      else if (eval_scorer == "clm") scorer = clm_scorer(*session.client, config.backend.models.clm);
      else if (eval_scorer == "cloze") scorer = cloze_scorer(*session.client, config.backend.models.cloze);
      else scorer = random_scorer(config.seed);

      ExperimentOptions options;
      options.parallelism = config.parallelism;
      options.config = config.to_json();
      options.config["scorer"] = eval_scorer;
      options.config["split"] = eval_split;
      options.config["dataset"] = fs::path(eval_dataset).filename().string();
      err << "scoring " << enumerate_pairs(dataset).size() << " pairs from " << dataset.size() << " sequences\n";
      const auto result = run_experiment(dataset, scorer, options);
      log_counters(*session.client, err);
      const auto report = canonical_json(result.reports_json()) + "\n";
      out << report;
      if (!eval_report.empty()) write_text(eval_report, report);
      if (!eval_trace.empty()) {
        std::string lines;
        for (const auto& t : result.traces) lines += canonical_json(t) + "\n";
        write_text(eval_trace, lines);
      }
    } else if (score_pair->parsed()) {
      const auto config = sp_flags.resolve();
      const auto dataset = load_dataset(sp_dataset);
      const auto& seq = find_sequence(dataset, sp_id);
      auto session = open_session(config, env);
      Engine engine(*session.client, config.pipeline);
      auto est = engine.estimate_pair(seq, sp_index);
      est.config_snapshot = config.to_json();
      log_counters(*session.client, err);
      emit(out, est.to_json());
    } else if (sample->parsed()) {
      const auto config = sc_flags.resolve();
      const auto dataset = load_dataset(sc_dataset);
      const auto& seq = find_sequence(dataset, sc_id);
      auto session = open_session(config, env);
      CovariateSet set;
      try {
        set = sample_covariates(*session.client, seq, sc_index, config.pipeline.sampler);
      } catch (const Error& e) {
        throw e.with_stage("covariates");
      }
      log_counters(*session.client, err);
      err << "covariate sources: " << canonical_json(covariates_json(set)["source_timestamps"]) << "\n";
      json cov = json::array();
      for (const auto& e : set.covariates) cov.push_back(e.text());
      emit(out, cov);
    } else if (gen->parsed()) {
      const auto config = gi_flags.resolve();
      const Event event(gi_event);
      auto session = open_session(config, env);
      const auto set = [&] {
        try {
          return generate_interventions(*session.client, event, config.pipeline.interventions);
        } catch (const Error& e) {
          throw e.with_stage("interventions");
        }
      }();
      log_counters(*session.client, err);
      json ints = json::array();
      for (const auto& e : set.interventions) ints.push_back(e.text());
      emit(out, ints);
    } else if (corpus->parsed()) {
      const auto stories = load_story_corpus(bc_stories);
      const auto examples = build_finetune_corpus(stories, bc_options);
      std::string lines;
      std::size_t positives = 0;
      std::map<std::string, std::size_t> splits;
      for (const auto& ex : examples) {
        lines += to_corpus_record(ex) + "\n";
        if (ex.polarity == Polarity::Positive) ++positives;
        ++splits[ex.split];
      }
      write_text(bc_output, lines);
      emit(out, {{"stories", stories.sequences.size()},
                 {"examples", examples.size()},
                 {"positives", positives},
                 {"negatives", examples.size() - positives},
                 {"splits", splits},
                 {"seed", bc_options.seed},
                 {"negative_ratio", bc_options.negative_ratio}});
    } else if (stats->parsed()) {
      std::optional<fs::path> file;
      if (!cs_config.empty()) file = cs_config;
      auto config = load_engine_config(file);
      if (!cs_dir.empty()) config.cache_dir = cs_dir;
      if (!fs::exists(config.cache_dir / ScoreCache::kLogName))
        throw Error(ErrorCode::Io, "no cache at " + config.cache_dir.string());
      ScoreCache cache(config.cache_dir);
      const auto s = cache.stats();
      emit(out, {{"cache_dir", config.cache_dir.string()},
                 {"entries", s.entries},
                 {"log_bytes", s.log_bytes},
                 {"index_rebuilt", s.index_rebuilt}});
    } else if (baseline->parsed()) {
      const auto dataset = load_dataset(rb_dataset);
      std::map<Split, std::vector<EventSequence>> by_split;
      for (const auto& s : dataset) by_split[s.split].push_back(s);
      json reports = json::array();
      for (const auto& [split, seqs] : by_split)
        reports.push_back(baseline_json(std::string(to_string(split)), seqs, rb_trials, rb_seed));
      reports.push_back(baseline_json("all", dataset, rb_trials, rb_seed));
      emit(out, reports);
    }
  } catch (const Error& e) {
    err << "error";
    if (!e.stage().empty()) err << " [" << e.stage() << "]";
    err << ": " << e.what() << "\n";
    return category(e.code()) == ErrorCategory::Backend ? kExitBackend : kExitData;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace cola
