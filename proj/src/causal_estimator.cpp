#include "cola/causal_estimator.hpp"

#include <cmath>
#include <numeric>

#include "cola/error.hpp"
#include "cola/text.hpp"

namespace cola {

Normalizations Normalizations::parse(std::string_view letters) {
  Normalizations n;
  for (char c : letters) {
    switch (c) {
      case 'D': n.direct = true; break;
      case 'S': n.simplify = true; break;
      case 'Q': n.covariate = true; break;
      case 'C': n.cooccurrence = true; break;
      case 'E': n.estimand = true; break;
      case ',': case ' ': break;
      default:
        throw Error(ErrorCode::InvalidArgument, std::string("unknown normalization '") + c + "'");
    }
  }
  n.validate();
  return n;
}

std::string Normalizations::letters() const {
  std::string out;
  if (direct) out += 'D';
  if (simplify) out += 'S';
  if (covariate) out += 'Q';
  if (cooccurrence) out += 'C';
  if (estimand) out += 'E';
  return out;
}

void Normalizations::validate() const {
  if (direct && covariate)
    throw Error(ErrorCode::InvalidArgument, "normalizations D and Q are mutually exclusive");
  if (cooccurrence && estimand)
    throw Error(ErrorCode::InvalidArgument, "normalizations C and E are mutually exclusive");
}

PropensityVector propensity_from_scores(std::span<const double> joint, std::span<const double> marginal,
                                        bool covariate_normalization) {
  if (joint.size() != marginal.size())
    throw Error(ErrorCode::LengthMismatch, "joint and marginal score vectors differ in length");
  double joint_sum = 1.0;
  double marginal_sum = 1.0;
  if (covariate_normalization) {
    joint_sum = std::accumulate(joint.begin(), joint.end(), 0.0);
    marginal_sum = std::accumulate(marginal.begin(), marginal.end(), 0.0);
  }
  PropensityVector q;
  q.values.reserve(joint.size());
  for (std::size_t l = 0; l < joint.size(); ++l) {
    const double num = joint_sum > 0.0 ? joint[l] / joint_sum : 0.0;
    const double den = marginal_sum > 0.0 ? marginal[l] / marginal_sum : 0.0;
    if (den > 0.0) {
      q.values.push_back(num / den);
    } else {
      q.values.push_back(0.0);
      ++q.zero_denominators;
    }
  }
  return q;
}

double scaled_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::LengthMismatch, "propensity vectors differ in length (" + std::to_string(a.size()) +
                                               " vs " + std::to_string(b.size()) + ")");
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum) / static_cast<double>(a.size());
}

std::vector<Match> matched_set(const PropensityVector& treatment,
                               const std::vector<PropensityVector>& candidates, double epsilon) {
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be >= 0");
  std::vector<Match> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double d = scaled_distance(candidates[i].values, treatment.values);
    if (d <= epsilon) out.push_back({i, d});
  }
  return out;
}

OutcomeScore outcome_score(double forward, double backward, const Normalizations& norms) {
  if (norms.cooccurrence) return {(forward + backward) / 2.0, false};
  if (norms.estimand) {
    const double sum = forward + backward;
    if (sum <= 0.0) return {0.5, true};
    return {forward / sum, false};
  }
  return {forward, false};
}

double estimand(double treatment_score, std::span<const double> matched_scores) {
  if (matched_scores.empty()) return treatment_score;
  double sum = 0.0;
  for (double s : matched_scores) sum += s;
  return treatment_score - sum / static_cast<double>(matched_scores.size());
}

double default_epsilon(std::string_view model_id) {
  const auto id = text::to_lower(model_id);
  if (id.find("deberta-large") != std::string::npos) return 0.014;
  if (id.find("roberta-large") != std::string::npos) return 0.001;
  if (id.find("bert-large") != std::string::npos) return 0.006;
  return 0.01;
}

}  // namespace cola
