#include "promptcal/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "promptcal/errors.hpp"

namespace promptcal {

namespace {

ClassProbMatrix labelled_matrix(std::span<const ProbabilityRecord> records) {
  for (const auto& r : records) {
    if (!r.is_null_probe && !r.label) {
      throw Error(ErrorCode::UnlabelledRecord,
                  "record '" + r.example_id + "' has no label");
    }
  }
  return ClassProbMatrix(records);
}

}  // namespace

double accuracy(std::span<const ProbabilityRecord> records,
                const WeightVector& weights) {
  const auto probs = labelled_matrix(records);
  return static_cast<double>(count_correct(probs, weights.alphas())) /
         static_cast<double>(probs.rows());
}

SettingReport score_setting(std::span<const ProbabilityRecord> records,
                            const CalibrationResult& calibration) {
  const auto probs = labelled_matrix(records);
  SettingReport report;
  report.setting = calibration.setting;
  report.method = calibration.method;
  report.weights = calibration.weights;
  report.correct = count_correct(probs, calibration.weights.alphas());
  report.n_examples = probs.rows();
  report.accuracy = static_cast<double>(report.correct) /
                    static_cast<double>(report.n_examples);
  return report;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) {
    throw Error(ErrorCode::InvalidArgument, "quantile of empty data");
  }
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BoxplotSummary boxplot(std::vector<double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "boxplot of empty data");
  }
  std::sort(values.begin(), values.end());
  BoxplotSummary box;
  box.count = values.size();
  box.min = values.front();
  box.max = values.back();
  box.q1 = quantile_sorted(values, 0.25);
  box.median = quantile_sorted(values, 0.5);
  box.q3 = quantile_sorted(values, 0.75);
  const double iqr = box.q3 - box.q1;
  const double low_fence = box.q1 - 1.5 * iqr;
  const double high_fence = box.q3 + 1.5 * iqr;
  box.whisker_low = box.max;
  box.whisker_high = box.min;
  for (double v : values) {
    if (v < low_fence || v > high_fence) {
      box.outliers.push_back(v);
    } else {
      box.whisker_low = std::min(box.whisker_low, v);
      box.whisker_high = std::max(box.whisker_high, v);
    }
  }
  return box;
}

std::vector<AggregateReport> aggregate(std::span<const SettingReport> reports) {
  if (reports.empty()) {
    throw Error(ErrorCode::EmptyReportSet, "no setting reports to aggregate");
  }
  std::vector<AggregateReport> out;
  for (Method method : kAllMethods) {
    std::vector<double> accs;
    std::map<std::string, std::vector<double>> by_prompt;
    for (const auto& r : reports) {
      if (r.method != method) continue;
      accs.push_back(r.accuracy);
      by_prompt[r.setting.prompt_id].push_back(r.accuracy);
    }
    if (accs.empty()) continue;

    // Summing in sorted order makes the result independent of input order.
    std::sort(accs.begin(), accs.end());
    const double n = static_cast<double>(accs.size());
    const double mean = std::accumulate(accs.begin(), accs.end(), 0.0) / n;
    double sq = 0.0;
    for (double a : accs) sq += (a - mean) * (a - mean);

    AggregateReport agg;
    agg.method = method;
    agg.n_settings = accs.size();
    agg.mean_accuracy = mean;
    agg.std_accuracy = std::sqrt(sq / n);
    for (auto& [prompt, values] : by_prompt) {
      agg.per_prompt_boxplots[prompt] = boxplot(std::move(values));
    }
    out.push_back(std::move(agg));
  }
  return out;
}

double pearson_correlation(std::span<const double> x,
                           std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::InvalidArgument,
                "correlation needs two equal-length series of length >= 2");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

AlignmentReport weight_alignment(std::span<const CalibrationTriple> triples) {
  if (triples.size() < 3) {
    throw Error(ErrorCode::InsufficientPairs,
                "weight alignment needs at least 3 settings, got " +
                    std::to_string(triples.size()));
  }
  AlignmentReport report;
  report.n_settings = triples.size();
  std::vector<double> opt_pm, pm, opt_null, null;
  for (const auto& t : triples) {
    if (!(t.optimal.setting == t.prior_match.setting &&
          t.optimal.setting == t.null_input.setting)) {
      throw Error(ErrorCode::InvalidArgument,
                  "calibration triple mixes settings");
    }
    const std::size_t k_classes = t.optimal.weights.size();
    if (t.prior_match.weights.size() != k_classes ||
        t.null_input.weights.size() != k_classes) {
      throw Error(ErrorCode::InvalidArgument,
                  "calibration triple mixes class counts");
    }
    for (std::size_t k = 1; k < k_classes; ++k) {
      const double lo = std::log(t.optimal.weights[k]);
      const double lp = std::log(t.prior_match.weights[k]);
      const double ln = std::log(t.null_input.weights[k]);
      report.prior_match_pairs.push_back({t.optimal.setting, k, lo, lp});
      report.null_input_pairs.push_back({t.optimal.setting, k, lo, ln});
      opt_pm.push_back(lo);
      pm.push_back(lp);
      opt_null.push_back(lo);
      null.push_back(ln);
    }
  }
  report.prior_match_correlation = pearson_correlation(opt_pm, pm);
  report.null_input_correlation = pearson_correlation(opt_null, null);
  return report;
}

}  // namespace promptcal
