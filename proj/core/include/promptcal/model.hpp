#pragma once

// Probability data model for prompt-based classifiers and the basic
// classifier math: class-probability normalization, weighted
// renormalization, argmax decisions and marginal-prior estimation.
//
// Raw label-word probabilities are stored as produced by the language model
// and normalized on demand, so per-example records and null-input probes
// share one schema.

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace promptcal {

// Raw word probabilities are clamped below at this floor before use.
inline constexpr double kProbabilityFloor = 1e-12;

// A prompt template x label-word set pair, i.e. one prompt classifier.
struct SettingKey {
  std::string prompt_id;
  std::string label_words_id;

  auto operator<=>(const SettingKey&) const = default;
  bool operator==(const SettingKey&) const = default;

  // "prompt_id::label_words_id", used as a JSON object key.
  std::string str() const;
};

struct ProbabilityRecord {
  std::string example_id;
  SettingKey setting;
  std::vector<double> word_probs;
  std::optional<int> label;
  bool is_null_probe = false;
};

// Per-class positive weights in canonical form (first entry exactly 1).
class WeightVector {
 public:
  // Identity weights for `num_classes` classes.
  static WeightVector identity(std::size_t num_classes);

  // Validates positivity/finiteness and divides through by the first entry.
  // Throws Error(InvalidArgument) on empty, non-positive or non-finite input.
  static WeightVector canonical(std::vector<double> alphas);

  static WeightVector from_log(std::span<const double> log_alphas);

  std::span<const double> alphas() const noexcept { return alphas_; }
  std::size_t size() const noexcept { return alphas_.size(); }
  double operator[](std::size_t k) const { return alphas_[k]; }

  std::vector<double> log_alphas() const;
  // L2 norm of the log-weight vector; 0 for identity weights.
  double log_norm() const;

  bool operator==(const WeightVector&) const = default;

 private:
  explicit WeightVector(std::vector<double> alphas)
      : alphas_(std::move(alphas)) {}
  std::vector<double> alphas_;
};

// Target marginal class distribution.
class TargetPrior {
 public:
  static TargetPrior uniform(std::size_t num_classes);
  // Entries must be strictly positive and sum to 1 within 1e-12.
  static TargetPrior from(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t k) const { return probs_[k]; }

 private:
  explicit TargetPrior(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

struct Manifest {
  std::string task;
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;
  std::map<std::string, std::string> prompts;
  std::map<std::string, std::vector<std::string>> label_word_sets;
  std::optional<std::vector<double>> target_prior;
  // Unrecognized top-level manifest keys, kept as serialized JSON so they
  // survive a load/write cycle (e.g. label-word tokenizations).
  std::map<std::string, std::string> extra_fields;

  bool operator==(const Manifest&) const = default;
};

struct Dataset {
  Manifest manifest;
  // Scored records only; null probes live in `null_probes`.
  std::vector<ProbabilityRecord> records;
  std::map<SettingKey, std::vector<double>> null_probes;

  std::size_t num_classes() const noexcept { return manifest.num_classes; }

  // Distinct settings referenced by scored records, in sorted order.
  std::vector<SettingKey> settings() const;
  std::vector<ProbabilityRecord> records_for(const SettingKey& setting) const;
  bool is_labelled() const;
};

// Class probabilities: clamped word probabilities divided by their
// sum. Throws AllZeroProbabilities when every entry is below the floor.
std::vector<double> normalize_class_probs(std::span<const double> word_probs);
std::vector<double> normalize_class_probs(const ProbabilityRecord& record);

// alpha_k p_k / sum_i alpha_i p_i. Accepts unnormalized (non-canonical)
// weights; the result is invariant to positive scaling of `alphas`.
std::vector<double> reweight(std::span<const double> tilde_probs,
                             std::span<const double> alphas);
std::vector<double> reweight(std::span<const double> tilde_probs,
                             const WeightVector& weights);

// Argmax of the reweighted distribution; ties go to the lowest index.
std::size_t predict(std::span<const double> tilde_probs,
                    std::span<const double> alphas);
std::size_t predict(std::span<const double> tilde_probs,
                    const WeightVector& weights);

// Mean over records of the reweighted class distribution. Throws
// EmptyDataset if no scored records remain after dropping null probes.
std::vector<double> estimate_prior(std::span<const ProbabilityRecord> records,
                                   const WeightVector& weights);

// Ratio-of-expectations form alpha_k E[w_k] / E[Z] on raw (clamped) word
// probabilities. Equals estimate_prior exactly when every record carries the
// same word probabilities; otherwise a first-order approximation of it.
std::vector<double> ratio_of_expectations_prior(
    std::span<const ProbabilityRecord> records, const WeightVector& weights);

// Dense N x K matrix of normalized class probabilities, row per record.
class ClassProbMatrix {
 public:
  ClassProbMatrix() = default;
  // Null probes are skipped. Throws EmptyDataset if nothing remains.
  explicit ClassProbMatrix(std::span<const ProbabilityRecord> records);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const int> labels() const noexcept { return labels_; }
  bool fully_labelled() const noexcept { return fully_labelled_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  std::vector<int> labels_;  // -1 where unlabelled
  bool fully_labelled_ = true;
};

std::vector<double> estimate_prior(const ClassProbMatrix& probs,
                                   std::span<const double> alphas);

}  // namespace promptcal
