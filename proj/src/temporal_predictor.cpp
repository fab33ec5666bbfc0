#include "cola/temporal_predictor.hpp"

#include <vector>

namespace cola {

double average_direction(const TemporalScore& forward, const TemporalScore& backward) {
  return 0.5 * (forward.before + backward.after);
}

ScoreValue simplified(const TemporalScore& forward, const TemporalScore& backward) {
  const double numerator = forward.before + backward.after;
  const double denominator = forward.before + forward.after + backward.before + backward.after;
  if (denominator <= 0.0) return {0.5, true};
  return {numerator / denominator, false};
}

std::string temporal_template(const Event& first, const Event& second) {
  return first.text() + " " + std::string(kMaskToken) + " " + second.text();
}

TemporalScore TemporalPredictor::raw_scores(const Event& first, const Event& second) {
  auto key = std::make_pair(first.text(), second.text());
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  static const std::vector<std::string> candidates = {kBeforeToken, kAfterToken, kNoneToken};
  const auto probs = client_.fill_mask(temporal_template(first, second), candidates, model_);
  const TemporalScore score{probs.at(kBeforeToken), probs.at(kAfterToken), probs.at(kNoneToken)};
  std::lock_guard lock(mutex_);
  memo_.emplace(std::move(key), score);
  return score;
}

ScoreValue TemporalPredictor::score(const Event& x, const Event& y, bool simplify) {
  const auto forward = raw_scores(x, y);
  const auto backward = raw_scores(y, x);
  if (simplify) return simplified(forward, backward);
  return {average_direction(forward, backward), false};
}

}  // namespace cola
