#pragma once

#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "cola/backend.hpp"
#include "cola/event_model.hpp"

namespace cola {

inline constexpr const char* kBeforeToken = "before";
inline constexpr const char* kAfterToken = "after";
inline constexpr const char* kNoneToken = "[none]";

/// Raw connective probabilities for the prompt "<first> <MASK> <second>".
struct TemporalScore {
  double before = 0.0;
  double after = 0.0;
  double none = 0.0;
};

/// A temporal score plus whether it fell back on a degenerate denominator.
struct ScoreValue {
  double value = 0.0;
  bool degenerate = false;
};

/// Bidirectional average: (f_b(x, y) + f_a(y, x)) / 2 given the scores of
/// "x <MASK> y" (forward) and "y <MASK> x" (backward).
double average_direction(const TemporalScore& forward, const TemporalScore& backward);

/// Before/after-only simplification:
///   (f_b(x,y) + f_a(y,x)) / (f_b(x,y) + f_a(x,y) + f_b(y,x) + f_a(y,x)).
/// A zero denominator yields 0.5 flagged as degenerate.
ScoreValue simplified(const TemporalScore& forward, const TemporalScore& backward);

/// Prompt "<first> <MASK> <second>".
std::string temporal_template(const Event& first, const Event& second);

/// Scores event pairs through the fill-mask endpoint. Results are memoized
/// per (first, second) so repeated pairs cost one backend call.
class TemporalPredictor {
 public:
  TemporalPredictor(Client& client, std::string model) : client_(client), model_(std::move(model)) {}

  TemporalScore raw_scores(const Event& first, const Event& second);

  /// f(x, y); with `simplify` the before/after-only form is used instead.
  ScoreValue score(const Event& x, const Event& y, bool simplify = false);

  const std::string& model() const noexcept { return model_; }

 private:
  Client& client_;
  std::string model_;
  std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, TemporalScore> memo_;
};

}  // namespace cola
