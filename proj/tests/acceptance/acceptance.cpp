// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Tolerances are fixed here and nowhere else.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "promptcal/calibrators.hpp"
#include "promptcal/errors.hpp"
#include "promptcal/evaluation.hpp"
#include "promptcal/io.hpp"
#include "promptcal/oracle.hpp"
#include "promptcal/sweep.hpp"
#include "promptcal/synth.hpp"

using namespace promptcal;
namespace fs = std::filesystem;

namespace {

constexpr double kPriorGapTol = 1e-8;
constexpr double kPriorMatchSeconds = 10.0;
constexpr double kClosedFormTol = 1e-6;
constexpr double kMinGain = 0.10;
constexpr double kMinStdRatio = 2.0;
constexpr double kMinAlignment = 0.9;
// Pinned from the brute-force reference pipeline on the default suite.
constexpr double kPinnedAlignment = 0.999783;
constexpr double kAlignmentRegressionTol = 2e-3;
constexpr double kInvariantTol = 1e-12;
constexpr int kInvariantChecks = 10'000;

struct Outcome {
  bool pass;
  std::string detail;
};

class Rand {
 public:
  explicit Rand(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }
  std::vector<double> word_probs(std::size_t k) {
    std::vector<double> p(k);
    double sum = 0.0;
    for (auto& v : p) sum += v = std::exp(uniform(-6.0, 0.0));
    const double mass = uniform(0.05, 0.99);
    for (auto& v : p) v = v / sum * mass;
    return p;
  }
  std::vector<ProbabilityRecord> records(std::size_t n, std::size_t k) {
    std::vector<ProbabilityRecord> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i].example_id = "r" + std::to_string(i);
      out[i].setting = {"p", "w"};
      out[i].word_probs = word_probs(k);
      out[i].label = static_cast<int>(index(0, k - 1));
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome prior_match_exactness() {
  Rand rng(101);
  double worst = 0.0;
  int failures = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 100; ++i) {
    SynthConfig cfg;
    cfg.num_classes = 2 + (i % 2);
    cfg.n_examples = rng.index(10, 500);
    cfg.noise_scale = 1.0;
    cfg.seed = 1000 + i;
    cfg.bias.assign(cfg.num_classes, 0.0);
    for (std::size_t k = 1; k < cfg.num_classes; ++k) cfg.bias[k] = rng.uniform(-4.0, 4.0);
    const auto ds = generate(cfg);
    const auto prior = TargetPrior::uniform(cfg.num_classes);
    try {
      const auto r = prior_match_solve(ds.records, prior);
      const auto marginal = estimate_prior(ds.records, r.weights);
      double gap = 0.0;
      for (std::size_t k = 0; k < marginal.size(); ++k) gap += std::abs(marginal[k] - prior[k]);
      worst = std::max(worst, gap);
      if (gap > kPriorGapTol) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {failures == 0 && secs < kPriorMatchSeconds,
          fmt("100 datasets, worst gap %.3g, failures %d, %.2f s", worst, failures, secs)};
}

Outcome closed_form() {
  std::vector<ProbabilityRecord> recs(2);
  recs[0].word_probs = {0.9, 0.1};
  recs[1].word_probs = {0.5, 0.5};
  const auto r = prior_match_solve(recs, TargetPrior::uniform(2));
  const double err = std::abs(r.weights[1] - 3.0);
  return {err <= kClosedFormTol, fmt("alpha_2 = %.12f", r.weights[1])};
}

Outcome oracle_exactness() {
  Rand rng(202);
  int mismatches = 0;
  for (int i = 0; i < 50; ++i) {
    const auto recs = rng.records(rng.index(1, 50), 2);
    const auto o = oracle::brute_force_optimal(recs);
    const auto r = optimal_weight_search(recs, 2);
    const std::size_t got = count_correct(ClassProbMatrix(recs), r.weights.alphas());
    if (got != o.correct) ++mismatches;
  }
  return {mismatches == 0, fmt("50 instances, %d mismatches", mismatches)};
}

Outcome dominance() {
  int violations = 0, checks = 0;
  for (std::size_t k : {2u, 3u}) {
    SuiteConfig cfg;
    cfg.num_classes = k;
    const auto suite = generate_suite(cfg);
    const auto& ds = suite.dataset;
    const auto prior = TargetPrior::uniform(k);
    for (const auto& s : ds.settings()) {
      const auto recs = ds.records_for(s);
      const std::vector<WeightVector> others{
          baseline_weights(k), null_input_weights(ds.null_probes.at(s), prior),
          prior_match_solve(recs, prior).weights};
      for (const auto& w : others) {
        const std::vector<WeightVector> seed{w};
        const auto opt = optimal_weight_search(recs, k, seed);
        ++checks;
        if (accuracy(recs, opt.weights) < accuracy(recs, w)) ++violations;
      }
    }
  }
  return {violations == 0, fmt("%d checks, %d violations", checks, violations)};
}

// The default suite: seed 7, separation 2, noise 1, bias norm in [2, 6],
// 4 prompts x 5 label-word sets.
SweepOutcome default_sweep() {
  const auto ds = generate_suite(SuiteConfig{}).dataset;
  return sweep_dataset(ds, {std::begin(kAllMethods), std::end(kAllMethods)},
                       TargetPrior::uniform(2), 4);
}

Outcome directional(const SweepOutcome& out) {
  std::map<Method, const AggregateReport*> by;
  for (const auto& a : out.aggregates) by[a.method] = &a;
  const auto& base = *by.at(Method::baseline);
  const auto& pm = *by.at(Method::prior_match);
  const double gain = pm.mean_accuracy - base.mean_accuracy;
  const bool std_ok = base.std_accuracy >= kMinStdRatio * pm.std_accuracy &&
                      base.std_accuracy > 0.0;
  return {gain >= kMinGain && std_ok && base.n_settings == 20,
          fmt("baseline %.4f +- %.4f, prior_match %.4f +- %.4f, gain %.4f",
              base.mean_accuracy, base.std_accuracy, pm.mean_accuracy,
              pm.std_accuracy, gain)};
}

Outcome alignment(const SweepOutcome& out) {
  if (!out.alignment) return {false, out.alignment_skipped};
  const double r = out.alignment->prior_match_correlation;
  const bool ok = r >= kMinAlignment &&
                  std::abs(r - kPinnedAlignment) <= kAlignmentRegressionTol;
  return {ok, fmt("pearson(log prior_match, log optimal) = %.6f, pinned %.6f", r,
                  kPinnedAlignment)};
}

Outcome invariants() {
  Rand rng(303);
  int failures = 0;
  for (int i = 0; i < kInvariantChecks; ++i) {
    const std::size_t k = rng.index(2, 6);
    const auto raw = rng.word_probs(k);
    const auto p = normalize_class_probs(raw);

    double sum = 0.0;
    for (double v : p) sum += v;
    if (std::abs(sum - 1.0) > kInvariantTol) ++failures;

    std::vector<double> alphas(k);
    for (auto& a : alphas) a = std::exp(rng.uniform(-5.0, 5.0));
    const double c = std::exp(rng.uniform(-5.0, 5.0));
    std::vector<double> scaled(alphas);
    for (auto& a : scaled) a *= c;
    const auto r1 = reweight(p, alphas);
    const auto r2 = reweight(p, scaled);
    for (std::size_t j = 0; j < k; ++j) {
      if (std::abs(r1[j] - r2[j]) > kInvariantTol) ++failures;
    }

    const std::vector<double> ones(k, 1.0);
    const auto id = reweight(p, ones);
    for (std::size_t j = 0; j < k; ++j) {
      if (std::abs(id[j] - p[j]) > kInvariantTol) ++failures;
    }

    // Ties: equal scores resolve to the lowest index, every time.
    std::vector<double> tied(k, 1.0 / static_cast<double>(k));
    const std::size_t lead = rng.index(0, k - 2);
    tied[lead] = tied[lead + 1] = 0.5;
    if (predict(tied, ones) != lead || predict(tied, ones) != lead) ++failures;
  }
  return {failures == 0, fmt("%d checks, %d failures", kInvariantChecks, failures)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome round_trip() {
  const fs::path root = fs::temp_directory_path() / "promptcal_acceptance";
  fs::remove_all(root);
  SuiteConfig cfg;
  cfg.n_examples = 60;
  const auto ds = generate_suite(cfg).dataset;
  io::write_dataset(ds, root / "manifest.json", root / "records.jsonl");
  const auto back = io::load_dataset(root / "manifest.json", root / "records.jsonl");
  bool ok = back.manifest == ds.manifest &&
            io::records_to_jsonl(back) == slurp(root / "records.jsonl") &&
            back.null_probes == ds.null_probes;
  for (std::size_t i = 0; ok && i < ds.records.size(); ++i) {
    ok = back.records[i].word_probs == ds.records[i].word_probs &&
         back.records[i].label == ds.records[i].label;
  }

  std::size_t compared = 0;
  std::vector<fs::path> dirs{root / "run1", root / "run2"};
  for (const auto& d : dirs) {
    RunConfig run;
    run.manifest_path = root / "manifest.json";
    run.records_path = root / "records.jsonl";
    run.out_dir = d;
    run.svg = true;
    run.jobs = d == dirs[0] ? 1 : 4;
    run_sweep(run);
  }
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const auto name = entry.path().filename();
    ok = ok && fs::exists(dirs[1] / name) &&
         slurp(entry.path()) == slurp(dirs[1] / name);
    ++compared;
  }
  const auto weights = io::read_json_file(dirs[0] / artifacts::kWeights);
  ok = ok && io::weights_to_json(io::weights_from_json(weights)) == weights;
  fs::remove_all(root);
  return {ok && compared >= 7, fmt("dataset round-trip, %zu artifacts byte-identical",
                                   compared)};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  };

  report("prior-match exactness", prior_match_exactness);
  report("closed-form two-record weight", closed_form);
  report("K=2 oracle exactness", oracle_exactness);
  report("optimal dominance", dominance);
  const auto sweep = default_sweep();
  report("directional gain and spread", [&] { return directional(sweep); });
  report("weight alignment", [&] { return alignment(sweep); });
  report("scale and identity invariants", invariants);
  report("round-trip and byte-stability", round_trip);
  return failed == 0 ? 0 : 1;
}
