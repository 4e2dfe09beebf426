#pragma once

// Weight-selection methods for prompt classifiers:
//
//   baseline     identity weights (raw label-word probabilities)
//   null_input   reciprocal of the null-input word probabilities, optionally
//                scaled by a non-uniform target prior (zero-resource)
//   prior_match  weights whose induced marginal class distribution equals a
//                target prior (unsupervised, needs unlabelled inputs)
//   optimal      accuracy-maximizing weights on labelled data (oracle)

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptcal/model.hpp"

namespace promptcal {

enum class Method { baseline, null_input, prior_match, optimal };

inline constexpr Method kAllMethods[] = {Method::baseline, Method::null_input,
                                         Method::prior_match, Method::optimal};

// "baseline", "null_input", "prior_match", "optimal".
std::string_view to_string(Method method) noexcept;
// Accepts the underscore names above and their hyphenated forms.
std::optional<Method> parse_method(std::string_view name);

struct CalibrationResult {
  SettingKey setting;
  Method method = Method::baseline;
  WeightVector weights = WeightVector::identity(2);
  // Keys: "iterations", "prior_gap_l1", "evaluations", "correct",
  // "accuracy" depending on the method.
  std::map<std::string, double> diagnostics;
};

WeightVector baseline_weights(std::size_t num_classes);

// alpha_k = prior_k / probe_k (probe clamped at the probability floor),
// rescaled to canonical form.
WeightVector null_input_weights(std::span<const double> null_probe,
                                const TargetPrior& prior);

struct PriorMatchOptions {
  double tolerance = 1e-10;          // stop once the L1 gap is at most this
  double acceptance_gap = 1e-8;      // largest gap reported as converged
  std::size_t max_iterations = 10'000;
};

// Multiplicative fixed-point iteration
//   alpha_k <- alpha_k * prior_k / marginal_k(alpha)
// renormalized to alpha_0 = 1 after every step. Its fixed points are exactly
// the weights whose marginal matches `prior`.
//
// Throws EmptyDataset for no scored records and NoConvergence when the gap is
// still above `acceptance_gap` after `max_iterations` or weights overflow.
CalibrationResult prior_match_solve(std::span<const ProbabilityRecord> records,
                                    const TargetPrior& prior,
                                    const PriorMatchOptions& options = {});

// Accuracy-maximizing weights over labelled records.
//
// Accuracy is piecewise constant in each weight with the others fixed, so a
// single coordinate is optimized exactly by sorting the per-record decision
// thresholds and scoring every interval between them. For two classes one
// such sweep is the global optimum. For three or more classes the search runs
// coordinate ascent from every seed and keeps the best result, so it never
// does worse than any seed but is not guaranteed globally optimal.
//
// Among equal-accuracy candidates the one with the smallest log-weight L2
// norm wins. Identity weights are always added to the seed list.
//
// Throws UnlabelledRecord if any scored record has no label.
CalibrationResult optimal_weight_search(
    std::span<const ProbabilityRecord> records, std::size_t num_classes,
    std::span<const WeightVector> seeds = {});

// Number of records whose prediction under `alphas` matches the label.
std::size_t count_correct(const ClassProbMatrix& probs,
                          std::span<const double> alphas);

namespace detail {

// One record's behaviour along a single weight coordinate: the record is
// predicted as the swept class once the weight exceeds `threshold`.
struct ThresholdItem {
  double threshold;
  bool correct_above;
  bool correct_below;
};

struct SweepChoice {
  double weight;           // representative weight inside the best interval
  std::size_t correct;     // correct count predicted by the sweep
};

// Scores every interval between distinct thresholds and returns the best,
// ties resolved toward the smallest |log weight|. Intervals containing 1 in
// their interior are represented by 1, the others by their geometric
// midpoint, and the two unbounded end intervals by boundary / 2 and
// boundary * 2.
SweepChoice best_interval(std::vector<ThresholdItem> items);

}  // namespace detail

}  // namespace promptcal
