#pragma once

// Synthetic biased-classifier datasets with known ground truth.
//
// Each example draws a class y from the class prior and gets logits
//   l_k = separation * [k == y] + bias_k + noise_k,  noise_k ~ U[-s, s]
// and word probabilities 0.9 * softmax(l), so the label-word mass stays
// below 1 like a real language-model dump. The null probe of a setting uses
// the bias alone as logits.
//
// Random draws come straight from std::mt19937_64 output (no standard
// distributions), so datasets are bit-identical across standard libraries.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "promptcal/model.hpp"

namespace promptcal {

inline constexpr double kSynthWordMass = 0.9;

struct SynthConfig {
  std::size_t num_classes = 2;
  std::size_t n_examples = 100;
  double separation = 2.0;
  std::vector<double> bias;  // empty means all zero
  double noise_scale = 0.0;
  std::uint64_t seed = 7;
  std::optional<TargetPrior> class_prior;  // uniform when unset
};

// Single-setting dataset ("p0", "w0") with labels and one null probe.
Dataset generate(const SynthConfig& config);

// A grid of prompt x label-word settings scored on the same labelled
// examples. Every setting draws its own bias direction (bias_0 = 0, others
// uniform) scaled so that its infinity norm is uniform in
// [bias_min, bias_max], and its own noise.
struct SuiteConfig {
  std::size_t num_classes = 2;
  std::size_t n_examples = 200;
  std::size_t n_prompts = 4;
  std::size_t n_label_word_sets = 5;
  double separation = 2.0;
  double noise_scale = 1.0;
  double bias_min = 2.0;
  double bias_max = 6.0;
  std::uint64_t seed = 7;
  std::optional<TargetPrior> class_prior;
};

struct SynthSuite {
  Dataset dataset;
  std::map<SettingKey, std::vector<double>> biases;
};

SynthSuite generate_suite(const SuiteConfig& config);

// 0.9 * softmax(logits).
std::vector<double> synth_word_probs(std::span<const double> logits);

}  // namespace promptcal
