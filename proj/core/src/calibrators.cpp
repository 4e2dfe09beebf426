#include "promptcal/calibrators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "promptcal/errors.hpp"

namespace promptcal {

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::baseline: return "baseline";
    case Method::null_input: return "null_input";
    case Method::prior_match: return "prior_match";
    case Method::optimal: return "optimal";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    std::string hyphenated(to_string(m));
    std::replace(hyphenated.begin(), hyphenated.end(), '_', '-');
    if (name == to_string(m) || name == hyphenated) return m;
  }
  return std::nullopt;
}

WeightVector baseline_weights(std::size_t num_classes) {
  if (num_classes < 2) {
    throw Error(ErrorCode::InvalidArgument, "need at least two classes");
  }
  return WeightVector::identity(num_classes);
}

WeightVector null_input_weights(std::span<const double> null_probe,
                                const TargetPrior& prior) {
  if (null_probe.size() != prior.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "null probe and prior lengths differ");
  }
  std::vector<double> alphas(null_probe.size());
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    alphas[k] = prior[k] / std::max(null_probe[k], kProbabilityFloor);
  }
  return WeightVector::canonical(std::move(alphas));
}

namespace {

double l1_gap(std::span<const double> a, std::span<const double> b) {
  double gap = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) gap += std::abs(a[k] - b[k]);
  return gap;
}

}  // namespace

CalibrationResult prior_match_solve(std::span<const ProbabilityRecord> records,
                                    const TargetPrior& prior,
                                    const PriorMatchOptions& options) {
  const ClassProbMatrix probs(records);
  const std::size_t num_classes = probs.cols();
  if (prior.size() != num_classes) {
    throw Error(ErrorCode::InvalidArgument,
                "prior length does not match the number of classes");
  }

  std::vector<double> alphas(num_classes, 1.0);
  auto marginal = estimate_prior(probs, alphas);
  double gap = l1_gap(marginal, prior.probs());
  std::size_t iterations = 0;

  while (gap > options.tolerance && iterations < options.max_iterations) {
    for (std::size_t k = 0; k < num_classes; ++k) {
      alphas[k] *= prior[k] / marginal[k];
    }
    const double first = alphas[0];
    for (double& a : alphas) a /= first;
    alphas[0] = 1.0;
    ++iterations;

    if (!std::all_of(alphas.begin(), alphas.end(), [](double a) {
          return std::isfinite(a) && a > 0.0;
        })) {
      throw Error(ErrorCode::NoConvergence,
                  "weights left the representable range after " +
                      std::to_string(iterations) + " iterations");
    }
    marginal = estimate_prior(probs, alphas);
    gap = l1_gap(marginal, prior.probs());
  }

  if (!(gap <= options.acceptance_gap)) {
    throw Error(ErrorCode::NoConvergence,
                "prior gap " + std::to_string(gap) + " after " +
                    std::to_string(iterations) + " iterations");
  }

  CalibrationResult result;
  result.setting = records.front().setting;
  result.method = Method::prior_match;
  result.weights = WeightVector::canonical(std::move(alphas));
  result.diagnostics["iterations"] = static_cast<double>(iterations);
  result.diagnostics["prior_gap_l1"] = gap;
  return result;
}

std::size_t count_correct(const ClassProbMatrix& probs,
                          std::span<const double> alphas) {
  std::size_t correct = 0;
  const auto labels = probs.labels();
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    if (static_cast<int>(predict(probs.row(i), alphas)) == labels[i]) ++correct;
  }
  return correct;
}

namespace detail {

SweepChoice best_interval(std::vector<ThresholdItem> items) {
  std::sort(items.begin(), items.end(),
            [](const ThresholdItem& a, const ThresholdItem& b) {
              return a.threshold < b.threshold;
            });

  // Walking up the sorted thresholds, every item left behind switches from
  // its "below" outcome to its "above" outcome.
  std::size_t correct = 0;
  for (const auto& item : items) correct += item.correct_below ? 1 : 0;

  auto representative = [](double lo, double hi) {
    // lo == 0 and hi == inf encode the unbounded end intervals.
    if (lo < 1.0 && 1.0 < hi) return 1.0;
    if (lo == 0.0) return hi / 2.0;
    if (std::isinf(hi)) return lo * 2.0;
    return std::exp(0.5 * (std::log(lo) + std::log(hi)));
  };

  SweepChoice best{1.0, 0};
  double best_norm = std::numeric_limits<double>::infinity();
  auto consider = [&](double weight, std::size_t count) {
    const double norm = std::abs(std::log(weight));
    if (count > best.correct || (count == best.correct && norm < best_norm)) {
      best = {weight, count};
      best_norm = norm;
    }
  };

  double lower = 0.0;
  std::size_t i = 0;
  while (true) {
    const double upper = i < items.size()
                             ? items[i].threshold
                             : std::numeric_limits<double>::infinity();
    consider(representative(lower, upper), correct);
    if (i >= items.size()) break;
    // Cross every item sharing this threshold value.
    const double t = items[i].threshold;
    while (i < items.size() && items[i].threshold == t) {
      correct += items[i].correct_above ? 1 : 0;
      correct -= items[i].correct_below ? 1 : 0;
      ++i;
    }
    lower = t;
  }
  return best;
}

}  // namespace detail

namespace {

struct SearchOutcome {
  std::vector<double> alphas;
  std::size_t correct = 0;
  std::size_t evaluations = 0;
  std::size_t passes = 0;
};

std::vector<detail::ThresholdItem> threshold_items(
    const ClassProbMatrix& probs, std::span<const double> alphas,
    std::size_t coord) {
  std::vector<detail::ThresholdItem> items;
  items.reserve(probs.rows());
  const auto labels = probs.labels();
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    std::size_t rival = coord == 0 ? 1 : 0;
    double rival_score = -1.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == coord) continue;
      const double score = alphas[c] * row[c];
      if (score > rival_score) {
        rival = c;
        rival_score = score;
      }
    }
    items.push_back({rival_score / row[coord],
                     labels[i] == static_cast<int>(coord),
                     labels[i] == static_cast<int>(rival)});
  }
  return items;
}

SearchOutcome coordinate_ascent(const ClassProbMatrix& probs,
                                std::vector<double> alphas) {
  constexpr std::size_t kMaxPasses = 1000;
  SearchOutcome out;
  out.correct = count_correct(probs, alphas);
  out.evaluations = 1;

  for (; out.passes < kMaxPasses; ++out.passes) {
    bool gained = false;
    for (std::size_t k = 1; k < alphas.size(); ++k) {
      const auto choice =
          detail::best_interval(threshold_items(probs, alphas, k));
      if (choice.weight == alphas[k]) continue;

      auto candidate = alphas;
      candidate[k] = choice.weight;
      const std::size_t correct = count_correct(probs, candidate);
      ++out.evaluations;

      // Accuracy is re-measured directly; the sweep count only proposes.
      const bool better = correct > out.correct;
      const bool simpler = correct == out.correct &&
                           std::abs(std::log(candidate[k])) <
                               std::abs(std::log(alphas[k]));
      if (better || simpler) {
        alphas = std::move(candidate);
        out.correct = correct;
        gained = gained || better;
      }
    }
    if (!gained) {
      ++out.passes;
      break;
    }
  }
  out.alphas = std::move(alphas);
  return out;
}

}  // namespace

CalibrationResult optimal_weight_search(
    std::span<const ProbabilityRecord> records, std::size_t num_classes,
    std::span<const WeightVector> seeds) {
  if (num_classes < 2) {
    throw Error(ErrorCode::InvalidArgument, "need at least two classes");
  }
  for (const auto& r : records) {
    if (!r.is_null_probe && !r.label) {
      throw Error(ErrorCode::UnlabelledRecord,
                  "record '" + r.example_id + "' has no label");
    }
  }
  const ClassProbMatrix probs(records);
  if (probs.cols() != num_classes) {
    throw Error(ErrorCode::InvalidArgument,
                "records do not have the declared number of classes");
  }

  std::vector<WeightVector> starts{WeightVector::identity(num_classes)};
  for (const auto& s : seeds) {
    if (s.size() != num_classes) {
      throw Error(ErrorCode::InvalidArgument,
                  "seed length does not match the number of classes");
    }
    if (std::find(starts.begin(), starts.end(), s) == starts.end()) {
      starts.push_back(s);
    }
  }

  std::optional<SearchOutcome> best;
  double best_norm = 0.0;
  std::size_t evaluations = 0;
  for (const auto& start : starts) {
    auto outcome = coordinate_ascent(
        probs, std::vector<double>(start.alphas().begin(), start.alphas().end()));
    evaluations += outcome.evaluations;
    const double norm =
        WeightVector::canonical(outcome.alphas).log_norm();
    if (!best || outcome.correct > best->correct ||
        (outcome.correct == best->correct && norm < best_norm)) {
      best = std::move(outcome);
      best_norm = norm;
    }
  }

  CalibrationResult result;
  result.setting = records.front().setting;
  result.method = Method::optimal;
  result.weights = WeightVector::canonical(best->alphas);
  result.diagnostics["evaluations"] = static_cast<double>(evaluations);
  result.diagnostics["correct"] = static_cast<double>(best->correct);
  result.diagnostics["accuracy"] =
      static_cast<double>(best->correct) / static_cast<double>(probs.rows());
  result.diagnostics["starts"] = static_cast<double>(starts.size());
  return result;
}

}  // namespace promptcal
