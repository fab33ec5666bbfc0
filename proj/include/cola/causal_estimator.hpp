#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cola {

/// Optional normalizations, written as letters:
///  D  propensity vector is the raw score vector (f(subject, X)) for X in the covariates
///  S  propensity scores use the before/after-only simplification
///  Q  scores are normalized over the covariate set before dividing
///  C  outcome scores become (f(a, b) + f(b, a)) / 2
///  E  outcome scores become f(a, b) / (f(a, b) + f(b, a))
/// D excludes Q (D replaces the ratio Q would normalize); C excludes E
/// (together they collapse every outcome score to 1/2).
struct Normalizations {
  bool direct = false;
  bool simplify = false;
  bool covariate = false;
  bool cooccurrence = false;
  bool estimand = false;

  static Normalizations parse(std::string_view letters);
  std::string letters() const;
  void validate() const;

  friend bool operator==(const Normalizations&, const Normalizations&) = default;
};

struct PropensityVector {
  std::vector<double> values;
  /// Components whose denominator was zero; those are set to 0.
  std::size_t zero_denominators = 0;
};

/// q[l] = joint[l] / marginal[l], where joint[l] = f(X_l, subject) and
/// marginal[l] = f(X_l, treatment). With `covariate_normalization` both
/// vectors are first divided by their sums over the covariate set.
PropensityVector propensity_from_scores(std::span<const double> joint, std::span<const double> marginal,
                                        bool covariate_normalization);

/// ||a - b||_2 / |a|. Note the 1/|X| scaling, not 1/sqrt(|X|). Empty vectors
/// are at distance 0. Throws LengthMismatch.
double scaled_distance(std::span<const double> a, std::span<const double> b);

struct Match {
  std::size_t index;  // position in the candidate list
  double distance;
};

/// Candidates within `epsilon` of the treatment vector, in input order.
std::vector<Match> matched_set(const PropensityVector& treatment,
                               const std::vector<PropensityVector>& candidates, double epsilon);

struct OutcomeScore {
  double value = 0.0;
  bool degenerate = false;
};

/// Applies C or E to f(a, b) given the reverse score f(b, a). Under E a zero
/// sum gives 1/2, flagged degenerate.
OutcomeScore outcome_score(double forward, double backward, const Normalizations& norms);

/// treatment - mean(matched); the treatment score itself when nothing matched.
double estimand(double treatment_score, std::span<const double> matched_scores);

/// Best threshold per temporal-predictor family (bert-large 0.006,
/// roberta-large 0.001, deberta-large 0.014); 0.01 for anything else.
double default_epsilon(std::string_view model_id);

}  // namespace cola
