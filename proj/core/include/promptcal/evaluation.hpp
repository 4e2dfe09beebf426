#pragma once

// Scoring of calibration methods per prompt setting, aggregation across
// settings, boxplot summaries, and alignment between weight estimates.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "promptcal/calibrators.hpp"
#include "promptcal/model.hpp"

namespace promptcal {

struct SettingReport {
  SettingKey setting;
  Method method = Method::baseline;
  double accuracy = 0.0;  // correct / n_examples
  std::size_t correct = 0;
  std::size_t n_examples = 0;
  WeightVector weights = WeightVector::identity(2);
};

struct BoxplotSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  // Most extreme data points inside the 1.5 x IQR fences.
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
  std::size_t count = 0;
};

struct AggregateReport {
  Method method = Method::baseline;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population standard deviation
  std::size_t n_settings = 0;
  std::map<std::string, BoxplotSummary> per_prompt_boxplots;
};

struct AlignmentPoint {
  SettingKey setting;
  std::size_t class_index = 0;
  double log_optimal = 0.0;
  double log_other = 0.0;
};

struct AlignmentReport {
  std::vector<AlignmentPoint> prior_match_pairs;
  std::vector<AlignmentPoint> null_input_pairs;
  // NaN when either series is constant.
  double prior_match_correlation = 0.0;
  double null_input_correlation = 0.0;
  std::size_t n_settings = 0;
};

// The three weight estimates for one setting.
struct CalibrationTriple {
  CalibrationResult optimal;
  CalibrationResult prior_match;
  CalibrationResult null_input;
};

// Fraction of records predicted correctly. Throws UnlabelledRecord for any
// unlabelled scored record and EmptyDataset when no scored record remains.
double accuracy(std::span<const ProbabilityRecord> records,
                const WeightVector& weights);

SettingReport score_setting(std::span<const ProbabilityRecord> records,
                            const CalibrationResult& calibration);

// One report per method present, ordered by method. Throws EmptyReportSet for
// an empty input.
std::vector<AggregateReport> aggregate(std::span<const SettingReport> reports);

// Throws InsufficientPairs when fewer than three settings are supplied.
AlignmentReport weight_alignment(std::span<const CalibrationTriple> triples);

// Quantile by linear interpolation between closest ranks on sorted data.
double quantile_sorted(std::span<const double> sorted, double q);
BoxplotSummary boxplot(std::vector<double> values);
double pearson_correlation(std::span<const double> x,
                           std::span<const double> y);

}  // namespace promptcal
