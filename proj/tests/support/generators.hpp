#pragma once

// Hand-rolled random generators for property tests.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "promptcal/model.hpp"

namespace promptcal::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

  // Raw word probabilities, each in [1e-6, 1) and summing below 1.
  std::vector<double> word_probs(std::size_t k) {
    std::vector<double> p(k);
    double sum = 0.0;
    for (auto& v : p) {
      v = std::exp(uniform(-6.0, 0.0));
      sum += v;
    }
    const double mass = uniform(0.05, 0.99);
    for (auto& v : p) v = v / sum * mass;
    return p;
  }

  std::vector<double> distribution(std::size_t k) {
    auto p = word_probs(k);
    double sum = 0.0;
    for (double v : p) sum += v;
    for (auto& v : p) v /= sum;
    return p;
  }

  std::vector<double> alphas(std::size_t k, double log_range = 5.0) {
    std::vector<double> a(k);
    for (auto& v : a) v = std::exp(uniform(-log_range, log_range));
    return a;
  }

  std::vector<ProbabilityRecord> records(std::size_t n, std::size_t k,
                                         bool labelled) {
    std::vector<ProbabilityRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
      ProbabilityRecord r;
      r.example_id = "r" + std::to_string(i);
      r.setting = {"p", "w"};
      r.word_probs = word_probs(k);
      if (labelled) r.label = static_cast<int>(index(k));
      out.push_back(std::move(r));
    }
    return out;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline ProbabilityRecord record(std::vector<double> probs,
                                std::optional<int> label = std::nullopt,
                                std::string id = "x") {
  ProbabilityRecord r;
  r.example_id = std::move(id);
  r.setting = {"p", "w"};
  r.word_probs = std::move(probs);
  r.label = label;
  return r;
}

}  // namespace promptcal::testing
