#include "promptcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "promptcal/errors.hpp"

namespace promptcal {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<int> draw_labels(std::size_t n, const TargetPrior& prior, Rng& rng) {
  std::vector<int> labels(n);
  for (auto& y : labels) {
    const double u = rng.uniform();
    double cdf = 0.0;
    y = static_cast<int>(prior.size() - 1);
    for (std::size_t k = 0; k < prior.size(); ++k) {
      cdf += prior[k];
      if (u < cdf) {
        y = static_cast<int>(k);
        break;
      }
    }
  }
  return labels;
}

std::string example_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ex%06zu", i);
  return buf;
}

void append_setting(Dataset& dataset, const SettingKey& setting,
                    std::span<const int> labels, std::span<const double> bias,
                    double separation, double noise_scale, Rng& rng) {
  const std::size_t k_classes = bias.size();
  std::vector<double> logits(k_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t k = 0; k < k_classes; ++k) {
      const double noise =
          noise_scale > 0.0 ? rng.uniform(-noise_scale, noise_scale) : 0.0;
      logits[k] = (static_cast<int>(k) == labels[i] ? separation : 0.0) +
                  bias[k] + noise;
    }
    dataset.records.push_back(
        {example_id(i), setting, synth_word_probs(logits), labels[i], false});
  }
  dataset.null_probes[setting] = synth_word_probs(bias);
}

std::string describe(double separation, double noise_scale,
                     std::span<const double> bias) {
  std::ostringstream os;
  os.precision(17);
  os << "synthetic setting: separation=" << separation << " noise=U[-"
     << noise_scale << "," << noise_scale << "] bias=[";
  for (std::size_t k = 0; k < bias.size(); ++k) {
    os << (k ? "," : "") << bias[k];
  }
  os << "]";
  return os.str();
}

Manifest base_manifest(std::size_t k_classes,
                       const std::optional<TargetPrior>& prior) {
  Manifest m;
  m.task = "synthetic";
  m.num_classes = k_classes;
  for (std::size_t k = 0; k < k_classes; ++k) {
    m.class_names.push_back("class" + std::to_string(k));
  }
  if (prior) {
    m.target_prior = std::vector<double>(prior->probs().begin(),
                                         prior->probs().end());
  }
  return m;
}

std::vector<std::string> label_words(const std::string& set_id,
                                     std::size_t k_classes) {
  std::vector<std::string> words;
  for (std::size_t k = 0; k < k_classes; ++k) {
    words.push_back(set_id + "_" + std::to_string(k));
  }
  return words;
}

void validate_common(std::size_t k_classes, std::size_t n_examples,
                     double separation, double noise_scale,
                     const std::optional<TargetPrior>& prior) {
  if (k_classes < 2) {
    throw Error(ErrorCode::InvalidArgument, "synthetic data needs K >= 2");
  }
  if (n_examples < 1) {
    throw Error(ErrorCode::InvalidArgument, "synthetic data needs n >= 1");
  }
  if (!(separation > 0.0) || !std::isfinite(separation)) {
    throw Error(ErrorCode::InvalidArgument, "separation must be positive");
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw Error(ErrorCode::InvalidArgument, "noise scale must be >= 0");
  }
  if (prior && prior->size() != k_classes) {
    throw Error(ErrorCode::InvalidArgument, "class prior length must be K");
  }
}

}  // namespace

std::vector<double> synth_word_probs(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - peak);
    sum += out[k];
  }
  for (double& p : out) p = kSynthWordMass * p / sum;
  return out;
}

Dataset generate(const SynthConfig& config) {
  validate_common(config.num_classes, config.n_examples, config.separation,
                  config.noise_scale, config.class_prior);
  std::vector<double> bias = config.bias;
  if (bias.empty()) bias.assign(config.num_classes, 0.0);
  if (bias.size() != config.num_classes) {
    throw Error(ErrorCode::InvalidArgument, "bias length must be K");
  }
  const TargetPrior prior =
      config.class_prior.value_or(TargetPrior::uniform(config.num_classes));

  Rng rng(config.seed);
  const auto labels = draw_labels(config.n_examples, prior, rng);

  Dataset dataset;
  dataset.manifest = base_manifest(config.num_classes, config.class_prior);
  const SettingKey setting{"p0", "w0"};
  dataset.manifest.prompts["p0"] =
      describe(config.separation, config.noise_scale, bias);
  dataset.manifest.label_word_sets["w0"] = label_words("w0", config.num_classes);
  append_setting(dataset, setting, labels, bias, config.separation,
                 config.noise_scale, rng);
  return dataset;
}

SynthSuite generate_suite(const SuiteConfig& config) {
  validate_common(config.num_classes, config.n_examples, config.separation,
                  config.noise_scale, config.class_prior);
  if (config.n_prompts < 1 || config.n_label_word_sets < 1) {
    throw Error(ErrorCode::InvalidArgument, "suite needs at least one setting");
  }
  if (!(config.bias_min >= 0.0) || !(config.bias_max >= config.bias_min)) {
    throw Error(ErrorCode::InvalidArgument,
                "bias range must satisfy 0 <= bias_min <= bias_max");
  }
  const TargetPrior prior =
      config.class_prior.value_or(TargetPrior::uniform(config.num_classes));

  Rng label_rng(config.seed);
  const auto labels = draw_labels(config.n_examples, prior, label_rng);

  SynthSuite suite;
  Dataset& dataset = suite.dataset;
  dataset.manifest = base_manifest(config.num_classes, config.class_prior);
  for (std::size_t w = 0; w < config.n_label_word_sets; ++w) {
    const std::string id = "w" + std::to_string(w);
    dataset.manifest.label_word_sets[id] = label_words(id, config.num_classes);
  }

  std::size_t index = 0;
  for (std::size_t p = 0; p < config.n_prompts; ++p) {
    const std::string prompt_id = "p" + std::to_string(p);
    std::ostringstream prompt_text;
    prompt_text << "synthetic prompt " << p << ": separation="
                << config.separation << " noise=U[-" << config.noise_scale
                << "," << config.noise_scale << "]";
    dataset.manifest.prompts[prompt_id] = prompt_text.str();

    for (std::size_t w = 0; w < config.n_label_word_sets; ++w, ++index) {
      const SettingKey setting{prompt_id, "w" + std::to_string(w)};
      Rng rng(splitmix64(config.seed ^ splitmix64(index + 1)));

      std::vector<double> bias(config.num_classes, 0.0);
      double largest = 0.0;
      for (std::size_t k = 1; k < bias.size(); ++k) {
        bias[k] = rng.uniform(-1.0, 1.0);
        largest = std::max(largest, std::abs(bias[k]));
      }
      if (largest == 0.0) {
        bias[1] = 1.0;
        largest = 1.0;
      }
      const double magnitude = rng.uniform(config.bias_min, config.bias_max);
      for (double& b : bias) b *= magnitude / largest;

      append_setting(dataset, setting, labels, bias, config.separation,
                     config.noise_scale, rng);
      suite.biases[setting] = std::move(bias);
    }
  }
  return suite;
}

}  // namespace promptcal
