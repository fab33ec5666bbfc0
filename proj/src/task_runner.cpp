#include "cola/task_runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

#include "cola/error.hpp"
#include "cola/random.hpp"
#include "cola/text.hpp"

namespace cola {

using nlohmann::json;

std::vector<Prediction> rank_and_label(const EventSequence& sequence, std::span<const double> scores) {
  if (!sequence.labeled()) throw Error(ErrorCode::KUnknown, "sequence " + sequence.id + " has no gold labels");
  if (scores.size() != sequence.candidate_count())
    throw Error(ErrorCode::LengthMismatch, "sequence " + sequence.id + " has " +
                                               std::to_string(sequence.candidate_count()) + " candidates but " +
                                               std::to_string(scores.size()) + " scores");
  const std::size_t k = sequence.k();
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<Prediction> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i].pair = {sequence.id, i + 1, sequence.size(), sequence.labels[i]};
    out[i].score = scores[i];
  }
  for (std::size_t r = 0; r < k && r < order.size(); ++r) out[order[r]].label = true;
  return out;
}

ClassMetrics metrics_from(const Confusion& c) {
  ClassMetrics m;
  const auto total = c.total();
  m.accuracy = total == 0 ? 0.0 : double(c.tp + c.tn) / double(total);
  m.precision = c.tp + c.fp == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fp);
  m.recall = c.tp + c.fn == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fn);
  const auto pos_den = 2 * c.tp + c.fp + c.fn;
  const auto neg_den = 2 * c.tn + c.fp + c.fn;
  m.f1_undefined = pos_den == 0;
  m.f1 = pos_den == 0 ? 0.0 : double(2 * c.tp) / double(pos_den);
  const double neg_f1 = neg_den == 0 ? 0.0 : double(2 * c.tn) / double(neg_den);
  m.macro_f1 = (m.f1 + neg_f1) / 2.0;
  return m;
}

namespace {

void tally(Confusion& c, bool predicted, bool gold) {
  if (predicted && gold) ++c.tp;
  else if (predicted) ++c.fp;
  else if (gold) ++c.fn;
  else ++c.tn;
}

json confusion_json(const Confusion& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

}  // namespace

MetricsReport evaluate(const std::vector<Prediction>& predictions, const std::vector<bool>& gold) {
  if (predictions.size() != gold.size())
    throw Error(ErrorCode::Misaligned, std::to_string(predictions.size()) + " predictions vs " +
                                           std::to_string(gold.size()) + " gold labels");
  std::map<std::string, std::size_t> k_of;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    auto& k = k_of[predictions[i].pair.sequence_id];
    if (gold[i]) ++k;
  }
  MetricsReport report;
  std::map<std::size_t, std::set<std::string>> seqs_per_k;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    tally(report.confusion, p.label, gold[i]);
    const auto k = k_of[p.pair.sequence_id];
    tally(report.per_k[k].confusion, p.label, gold[i]);
    seqs_per_k[k].insert(p.pair.sequence_id);
  }
  report.metrics = metrics_from(report.confusion);
  for (auto& [k, row] : report.per_k) {
    row.sequences = seqs_per_k[k].size();
    row.metrics = metrics_from(row.confusion);
  }
  return report;
}

MetricsReport evaluate(const std::vector<Prediction>& predictions) {
  std::vector<bool> gold;
  gold.reserve(predictions.size());
  for (const auto& p : predictions) {
    if (!p.pair.gold)
      throw Error(ErrorCode::Misaligned, "pair " + p.pair.sequence_id + ":" + std::to_string(p.pair.cause_index) +
                                             " has no gold label");
    gold.push_back(*p.pair.gold);
  }
  return evaluate(predictions, gold);
}

json MetricsReport::to_json() const {
  json per = json::object();
  for (const auto& [k, row] : per_k) {
    per[std::to_string(k)] = {{"sequences", row.sequences},
                              {"accuracy", row.metrics.accuracy},
                              {"f1", row.metrics.f1},
                              {"macro_f1", row.metrics.macro_f1},
                              {"f1_undefined", row.metrics.f1_undefined},
                              {"confusion", confusion_json(row.confusion)}};
  }
  return {{"split", split},
          {"accuracy", metrics.accuracy},
          {"f1", metrics.f1},
          {"macro_f1", metrics.macro_f1},
          {"precision", metrics.precision},
          {"recall", metrics.recall},
          {"f1_undefined", metrics.f1_undefined},
          {"confusion", confusion_json(confusion)},
          {"config", config},
          {"per_k", std::move(per)}};
}

BaselineExpectation random_baseline_expectation(const SplitCounts& counts) {
  constexpr std::size_t kCandidates = 4;
  for (auto c : counts.candidate_counts) {
    if (c != kCandidates)
      throw Error(ErrorCode::UnsupportedSequenceLength,
                  "random baseline expectation needs 4 candidates per sequence, found " + std::to_string(c));
  }
  BaselineExpectation out;
  double correct = 0.0, tp = 0.0, pairs = 0.0, positives = 0.0;
  for (const auto& [k, n] : counts.sequences_per_k) {
    if (k > kCandidates) throw Error(ErrorCode::InvalidArgument, "k exceeds candidate count");
    // A uniform k-subset hits each gold cause with probability k/4.
    const double e_tp = double(k * k) / double(kCandidates);
    const double e_fp = double(k) - e_tp;
    const double acc = (double(kCandidates) - 2.0 * e_fp) / double(kCandidates);
    out.per_k_accuracy[k] = acc;
    correct += double(n) * acc * kCandidates;
    pairs += double(n) * kCandidates;
    tp += double(n) * e_tp;
    positives += double(n) * double(k);
  }
  out.accuracy = pairs == 0.0 ? 0.0 : correct / pairs;
  out.f1_undefined = positives == 0.0;
  out.f1 = positives == 0.0 ? 0.0 : tp / positives;
  return out;
}

MonteCarloEstimate monte_carlo_random_baseline(const std::vector<EventSequence>& dataset, std::size_t trials,
                                               std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  for (const auto& s : dataset) {
    validate(s);
    if (!s.labeled()) throw Error(ErrorCode::KUnknown, "sequence " + s.id + " has no gold labels");
  }
  MonteCarloEstimate out;
  out.trials = trials;
  std::vector<double> scores;
  for (std::size_t t = 0; t < trials; ++t) {
    auto rng = make_rng(seed, t);
    Confusion c;
    for (const auto& s : dataset) {
      scores.resize(s.candidate_count());
      for (auto& x : scores) x = uniform_unit(rng);
      for (const auto& p : rank_and_label(s, scores)) tally(c, p.label, *p.pair.gold);
    }
    const auto m = metrics_from(c);
    out.accuracy += m.accuracy;
    out.f1 += m.f1;
  }
  out.accuracy /= double(trials);
  out.f1 /= double(trials);
  return out;
}

std::string baseline_prompt(const EventSequence& sequence, std::size_t index) {
  std::vector<std::string> texts;
  texts.reserve(sequence.size());
  for (const auto& e : sequence.events) texts.push_back(e.text());
  return "If " + text::join(texts, ", ") + ", " + sequence.last().text() + " because " + sequence.event(index).text();
}

double perplexity(std::span<const double> logprobs) {
  if (logprobs.empty()) throw Error(ErrorCode::InvalidArgument, "perplexity of an empty token list");
  const double mean = std::accumulate(logprobs.begin(), logprobs.end(), 0.0) / double(logprobs.size());
  return std::exp(-mean);
}

Scorer cola_scorer(Engine& engine) {
  return [&engine](const EventSequence& seq, std::size_t index) {
    auto est = engine.estimate_pair(seq, index);
    auto trace = est.to_json();
    trace.erase("config");
    return ScoredPair{est.delta, std::move(trace)};
  };
}

Scorer clm_scorer(Client& client, std::string model) {
  return [&client, model](const EventSequence& seq, std::size_t index) {
    const auto prompt = baseline_prompt(seq, index);
    const auto logprobs = client.score_tokens(prompt, model);
    const double mean = std::accumulate(logprobs.begin(), logprobs.end(), 0.0) / double(logprobs.size());
    return ScoredPair{mean, {{"prompt", prompt}, {"perplexity", perplexity(logprobs)}}};
  };
}

Scorer cloze_scorer(Client& client, std::string model) {
  return [&client, model](const EventSequence& seq, std::size_t index) {
    const auto prompt = baseline_prompt(seq, index);
    const double pll = client.pseudo_loglik(prompt, model);
    return ScoredPair{pll, {{"prompt", prompt}}};
  };
}

Scorer random_scorer(std::uint64_t seed) {
  return [seed](const EventSequence& seq, std::size_t index) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : seq.id) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    auto rng = make_rng(seed ^ h, index);
    return ScoredPair{uniform_unit(rng), json::object()};
  };
}

json ExperimentResult::reports_json() const {
  json out = json::array();
  for (const auto& r : reports) out.push_back(r.to_json());
  return out;
}

ExperimentResult run_experiment(const std::vector<EventSequence>& dataset, const Scorer& scorer,
                                const ExperimentOptions& options) {
  std::vector<const EventSequence*> seqs;
  for (const auto& s : dataset) {
    validate(s);
    if (!s.labeled()) throw Error(ErrorCode::KUnknown, "sequence " + s.id + " has no gold labels");
    seqs.push_back(&s);
  }
  std::sort(seqs.begin(), seqs.end(), [](auto* a, auto* b) { return a->id < b->id; });

  struct Job {
    const EventSequence* seq;
    std::size_t index;
  };
  std::vector<Job> jobs;
  for (auto* s : seqs)
    for (std::size_t i = 1; i <= s->candidate_count(); ++i) jobs.push_back({s, i});

  std::vector<ScoredPair> scored(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size() && !failed; j = next++) {
      try {
        scored[j] = scorer(*jobs[j].seq, jobs[j].index);
      } catch (...) {
        errors[j] = std::current_exception();
        failed = true;
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(options.parallelism, 1, std::max<std::size_t>(jobs.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentResult result;
  std::map<Split, std::vector<Prediction>> by_split;
  std::size_t j = 0;
  for (auto* s : seqs) {
    std::vector<double> scores;
    for (std::size_t i = 0; i < s->candidate_count(); ++i) scores.push_back(scored[j + i].score);
    auto preds = rank_and_label(*s, scores);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      json trace = {{"sequence_id", s->id},
                    {"cause_index", preds[i].pair.cause_index},
                    {"split", std::string(to_string(s->split))},
                    {"score", preds[i].score},
                    {"label", preds[i].label},
                    {"gold", *preds[i].pair.gold}};
      for (auto& [key, value] : scored[j + i].trace.items())
        if (!trace.contains(key)) trace[key] = value;
      result.traces.push_back(std::move(trace));
    }
    j += preds.size();
    auto& bucket = by_split[s->split];
    bucket.insert(bucket.end(), preds.begin(), preds.end());
    result.predictions.insert(result.predictions.end(), preds.begin(), preds.end());
  }
  for (const auto& [split, preds] : by_split) {
    auto report = evaluate(preds);
    report.split = std::string(to_string(split));
    report.config = options.config;
    result.reports.push_back(std::move(report));
  }
  auto all = evaluate(result.predictions);
  all.split = "all";
  all.config = options.config;
  result.reports.push_back(std::move(all));
  return result;
}

}  // namespace cola
