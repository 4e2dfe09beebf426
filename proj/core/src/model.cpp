#include "promptcal/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "promptcal/errors.hpp"

namespace promptcal {

std::string SettingKey::str() const { return prompt_id + "::" + label_words_id; }

WeightVector WeightVector::identity(std::size_t num_classes) {
  return WeightVector(std::vector<double>(num_classes, 1.0));
}

WeightVector WeightVector::canonical(std::vector<double> alphas) {
  if (alphas.empty()) {
    throw Error(ErrorCode::InvalidArgument, "weight vector is empty");
  }
  for (double a : alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw Error(ErrorCode::InvalidArgument,
                  "weights must be strictly positive and finite");
    }
  }
  const double first = alphas.front();
  for (double& a : alphas) a /= first;
  alphas.front() = 1.0;
  for (double a : alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw Error(ErrorCode::InvalidArgument,
                  "weights overflow after canonical rescaling");
    }
  }
  return WeightVector(std::move(alphas));
}

WeightVector WeightVector::from_log(std::span<const double> log_alphas) {
  if (log_alphas.empty()) {
    throw Error(ErrorCode::InvalidArgument, "weight vector is empty");
  }
  std::vector<double> alphas(log_alphas.size());
  for (std::size_t k = 0; k < log_alphas.size(); ++k) {
    alphas[k] = std::exp(log_alphas[k] - log_alphas[0]);
  }
  return canonical(std::move(alphas));
}

std::vector<double> WeightVector::log_alphas() const {
  std::vector<double> out(alphas_.size());
  std::transform(alphas_.begin(), alphas_.end(), out.begin(),
                 [](double a) { return std::log(a); });
  return out;
}

double WeightVector::log_norm() const {
  double sq = 0.0;
  for (double a : alphas_) {
    const double l = std::log(a);
    sq += l * l;
  }
  return std::sqrt(sq);
}

TargetPrior TargetPrior::uniform(std::size_t num_classes) {
  if (num_classes == 0) {
    throw Error(ErrorCode::InvalidArgument, "prior needs at least one class");
  }
  return TargetPrior(std::vector<double>(num_classes, 1.0 / num_classes));
}

TargetPrior TargetPrior::from(std::vector<double> probs) {
  if (probs.empty()) {
    throw Error(ErrorCode::InvalidArgument, "prior is empty");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::InvalidArgument,
                  "prior entries must be strictly positive");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "prior must sum to 1");
  }
  return TargetPrior(std::move(probs));
}

std::vector<SettingKey> Dataset::settings() const {
  std::set<SettingKey> seen;
  for (const auto& r : records) seen.insert(r.setting);
  return {seen.begin(), seen.end()};
}

std::vector<ProbabilityRecord> Dataset::records_for(
    const SettingKey& setting) const {
  std::vector<ProbabilityRecord> out;
  for (const auto& r : records) {
    if (r.setting == setting) out.push_back(r);
  }
  return out;
}

bool Dataset::is_labelled() const {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(),
                     [](const ProbabilityRecord& r) { return r.label.has_value(); });
}

std::vector<double> normalize_class_probs(std::span<const double> word_probs) {
  if (word_probs.empty()) {
    throw Error(ErrorCode::InvalidArgument, "word_probs is empty");
  }
  bool any_above_floor = false;
  std::vector<double> out(word_probs.size());
  for (std::size_t k = 0; k < word_probs.size(); ++k) {
    if (word_probs[k] >= kProbabilityFloor) any_above_floor = true;
    out[k] = std::max(word_probs[k], kProbabilityFloor);
  }
  if (!any_above_floor) {
    throw Error(ErrorCode::AllZeroProbabilities,
                "every word probability is below the clamp floor");
  }
  const double sum = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& p : out) p /= sum;
  return out;
}

std::vector<double> normalize_class_probs(const ProbabilityRecord& record) {
  try {
    return normalize_class_probs(record.word_probs);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllZeroProbabilities) throw;
    throw Error(e.code(), "record '" + record.example_id + "' in setting " +
                              record.setting.str());
  }
}

std::vector<double> reweight(std::span<const double> tilde_probs,
                             std::span<const double> alphas) {
  if (tilde_probs.size() != alphas.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "probability and weight lengths differ");
  }
  std::vector<double> out(tilde_probs.size());
  double z = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = alphas[k] * tilde_probs[k];
    z += out[k];
  }
  for (double& p : out) p /= z;
  return out;
}

std::vector<double> reweight(std::span<const double> tilde_probs,
                             const WeightVector& weights) {
  return reweight(tilde_probs, weights.alphas());
}

std::size_t predict(std::span<const double> tilde_probs,
                    std::span<const double> alphas) {
  if (tilde_probs.size() != alphas.size() || tilde_probs.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "probability and weight lengths differ");
  }
  // The shared normalizer does not change the argmax, so compare the
  // unnormalized products directly.
  std::size_t best = 0;
  double best_score = alphas[0] * tilde_probs[0];
  for (std::size_t k = 1; k < tilde_probs.size(); ++k) {
    const double score = alphas[k] * tilde_probs[k];
    if (score > best_score) {
      best = k;
      best_score = score;
    }
  }
  return best;
}

std::size_t predict(std::span<const double> tilde_probs,
                    const WeightVector& weights) {
  return predict(tilde_probs, weights.alphas());
}

ClassProbMatrix::ClassProbMatrix(std::span<const ProbabilityRecord> records) {
  for (const auto& r : records) {
    if (r.is_null_probe) continue;
    if (rows_ == 0) {
      cols_ = r.word_probs.size();
    } else if (r.word_probs.size() != cols_) {
      throw Error(ErrorCode::InvalidArgument,
                  "records disagree on the number of classes");
    }
    const auto probs = normalize_class_probs(r);
    data_.insert(data_.end(), probs.begin(), probs.end());
    labels_.push_back(r.label ? *r.label : -1);
    if (!r.label) fully_labelled_ = false;
    ++rows_;
  }
  if (rows_ == 0) {
    throw Error(ErrorCode::EmptyDataset, "no scored records");
  }
}

std::vector<double> estimate_prior(const ClassProbMatrix& probs,
                                   std::span<const double> alphas) {
  if (alphas.size() != probs.cols()) {
    throw Error(ErrorCode::InvalidArgument,
                "weight length does not match the number of classes");
  }
  std::vector<double> mean(probs.cols(), 0.0);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    double z = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) z += alphas[k] * row[k];
    for (std::size_t k = 0; k < row.size(); ++k) {
      mean[k] += alphas[k] * row[k] / z;
    }
  }
  for (double& m : mean) m /= static_cast<double>(probs.rows());
  return mean;
}

std::vector<double> estimate_prior(std::span<const ProbabilityRecord> records,
                                   const WeightVector& weights) {
  return estimate_prior(ClassProbMatrix(records), weights.alphas());
}

std::vector<double> ratio_of_expectations_prior(
    std::span<const ProbabilityRecord> records, const WeightVector& weights) {
  const std::size_t k_classes = weights.size();
  std::vector<double> mean_scaled(k_classes, 0.0);
  double mean_z = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.is_null_probe) continue;
    if (r.word_probs.size() != k_classes) {
      throw Error(ErrorCode::InvalidArgument,
                  "weight length does not match the number of classes");
    }
    for (std::size_t k = 0; k < k_classes; ++k) {
      const double scaled =
          weights[k] * std::max(r.word_probs[k], kProbabilityFloor);
      mean_scaled[k] += scaled;
      mean_z += scaled;
    }
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::EmptyDataset, "no scored records");
  std::vector<double> out(k_classes);
  for (std::size_t k = 0; k < k_classes; ++k) out[k] = mean_scaled[k] / mean_z;
  return out;
}

}  // namespace promptcal
