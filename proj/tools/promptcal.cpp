// promptcal: calibrate prompt-based zero-shot classifiers from label-word
// probability dumps.
//
//   promptcal synth     --out-dir DIR [--seed N] [generator flags]
//   promptcal calibrate --manifest M --records R --out-dir DIR [--methods ...]
//   promptcal evaluate  --manifest M --records R --out-dir DIR
//   promptcal report    --out-dir DIR [--svg]
//   promptcal sweep     --manifest M --records R --out-dir DIR [--svg]
//
// Exit codes: 0 success, 1 internal error, 2 input or validation error.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "promptcal/errors.hpp"
#include "promptcal/io.hpp"
#include "promptcal/sweep.hpp"
#include "promptcal/synth.hpp"

namespace fs = std::filesystem;
using namespace promptcal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

struct CommonOptions {
  std::string manifest;
  std::string records;
  std::string out_dir;
  std::vector<std::string> methods{"baseline", "null-input", "prior-match",
                                   "optimal"};
  std::string prior = "uniform";
  bool svg = false;
  std::size_t jobs = 1;
  std::uint64_t seed = 7;
};

struct SynthOptions {
  std::size_t classes = 2;
  std::size_t examples = 200;
  std::size_t prompts = 4;
  std::size_t label_word_sets = 5;
  double separation = 2.0;
  double noise = 1.0;
  double bias_min = 2.0;
  double bias_max = 6.0;
};

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) {
    const auto m = parse_method(n);
    if (!m) {
      throw Error(ErrorCode::InvalidArgument,
                  "unknown method '" + n +
                      "' (expected baseline, null-input, prior-match, optimal)");
    }
    out.push_back(*m);
  }
  return out;
}

RunConfig make_config(const CommonOptions& o) {
  RunConfig c;
  c.manifest_path = o.manifest;
  c.records_path = o.records;
  c.out_dir = o.out_dir;
  c.methods = parse_methods(o.methods);
  if (o.prior == "uniform") {
    c.prior_source = PriorSource::uniform;
  } else if (o.prior == "manifest") {
    c.prior_source = PriorSource::manifest;
  } else {
    c.prior_source = PriorSource::file;
    c.prior_path = o.prior;
  }
  c.svg = o.svg;
  c.jobs = o.jobs;
  c.seed = o.seed;
  return c;
}

// No timestamps: two identical runs must write identical bytes.
void write_run_meta(const fs::path& out_dir, const std::string& command,
                    const CommonOptions& o) {
  std::vector<std::string> methods;
  for (Method m : make_config(o).methods) methods.emplace_back(to_string(m));
  nlohmann::json meta = {{"tool", "promptcal"},
                         {"command", command},
                         {"manifest", o.manifest},
                         {"records", o.records},
                         {"methods", methods},
                         {"prior", o.prior},
                         {"jobs", o.jobs},
                         {"seed", o.seed},
                         {"svg", o.svg}};
  io::write_json_file(out_dir / artifacts::kRunMeta, meta);
}

void print_aggregates(const std::vector<AggregateReport>& aggregates) {
  for (const auto& a : aggregates) {
    std::printf("%-12s mean %.4f  std %.4f  (%zu settings)\n",
                std::string(to_string(a.method)).c_str(), a.mean_accuracy,
                a.std_accuracy, a.n_settings);
  }
}

void print_failures(const std::vector<io::SettingFailure>& failures) {
  for (const auto& f : failures) {
    std::cerr << "warning: " << f.setting.str() << " " << to_string(f.method)
              << " failed: " << f.reason << "\n";
  }
}

int cmd_synth(const CommonOptions& o, const SynthOptions& s) {
  SuiteConfig config;
  config.num_classes = s.classes;
  config.n_examples = s.examples;
  config.n_prompts = s.prompts;
  config.n_label_word_sets = s.label_word_sets;
  config.separation = s.separation;
  config.noise_scale = s.noise;
  config.bias_min = s.bias_min;
  config.bias_max = s.bias_max;
  config.seed = o.seed;
  const auto suite = generate_suite(config);
  const fs::path out(o.out_dir);
  io::write_dataset(suite.dataset, out / "manifest.json", out / "records.jsonl");
  std::printf("wrote %zu records and %zu null probes to %s\n",
              suite.dataset.records.size(), suite.dataset.null_probes.size(),
              out.string().c_str());
  return kExitOk;
}

int cmd_calibrate(const CommonOptions& o) {
  const auto config = make_config(o);
  io::LoadOptions load;
  load.require_null_probes =
      std::find(config.methods.begin(), config.methods.end(),
                Method::null_input) != config.methods.end();
  const auto dataset = io::load_dataset(config.manifest_path, config.records_path, load);
  const auto prior = resolve_prior(config, dataset.manifest);
  const auto run = calibrate_dataset(dataset, config.methods, prior, config.jobs);

  fs::create_directories(config.out_dir);
  io::write_json_file(config.out_dir / artifacts::kWeights,
                      io::weights_to_json(run.results));
  io::write_json_file(config.out_dir / "calibration_failures.json",
                      io::settings_to_json({}, run.failures));
  print_failures(run.failures);
  write_run_meta(config.out_dir, "calibrate", o);
  std::printf("calibrated %zu setting/method pairs (%zu failed)\n",
              run.results.size(), run.failures.size());
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& o) {
  const auto config = make_config(o);
  const auto dataset = io::load_dataset(config.manifest_path, config.records_path);
  auto results =
      io::weights_from_json(io::read_json_file(config.out_dir / artifacts::kWeights));
  std::erase_if(results, [&](const CalibrationResult& r) {
    return std::find(config.methods.begin(), config.methods.end(), r.method) ==
           config.methods.end();
  });
  auto run = evaluate_dataset(dataset, results, config.jobs);

  std::vector<io::SettingFailure> failures;
  const fs::path cal_failures = config.out_dir / "calibration_failures.json";
  if (fs::exists(cal_failures)) {
    failures = io::failures_from_json(io::read_json_file(cal_failures));
  }
  failures.insert(failures.end(), run.failures.begin(), run.failures.end());
  io::write_json_file(config.out_dir / artifacts::kSettings,
                      io::settings_to_json(run.reports, failures));
  print_failures(run.failures);
  write_run_meta(config.out_dir, "evaluate", o);
  std::printf("scored %zu setting/method pairs (%zu failed)\n", run.reports.size(),
              run.failures.size());
  return kExitOk;
}

int cmd_report(const CommonOptions& o) {
  const fs::path out(o.out_dir);
  const auto settings = io::read_json_file(out / artifacts::kSettings);
  CalibrationRun calibration;
  calibration.results =
      io::weights_from_json(io::read_json_file(out / artifacts::kWeights));
  EvaluationRun evaluation;
  evaluation.reports = io::setting_reports_from_json(settings);
  evaluation.failures = io::failures_from_json(settings);
  const auto outcome = summarize(std::move(calibration), std::move(evaluation));
  write_report_artifacts(outcome, out, o.svg);
  write_run_meta(out, "report", o);
  print_aggregates(outcome.aggregates);
  return kExitOk;
}

int cmd_sweep(const CommonOptions& o) {
  const auto outcome = run_sweep(make_config(o));
  auto failures = outcome.calibration.failures;
  failures.insert(failures.end(), outcome.evaluation.failures.begin(),
                  outcome.evaluation.failures.end());
  print_failures(failures);
  write_run_meta(o.out_dir, "sweep", o);
  print_aggregates(outcome.aggregates);
  if (outcome.alignment) {
    std::printf("log-weight correlation with optimal: prior_match %.4f, "
                "null_input %.4f\n",
                outcome.alignment->prior_match_correlation,
                outcome.alignment->null_input_correlation);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrate prompt-based zero-shot classifiers"};
  app.require_subcommand(1);
  CommonOptions opts;
  SynthOptions synth;

  auto add_data = [&](CLI::App* sub, bool records_required) {
    sub->add_option("--manifest", opts.manifest, "Dataset manifest (JSON)")
        ->required(records_required)
        ->check(CLI::ExistingFile);
    sub->add_option("--records", opts.records, "Probability records (JSONL)")
        ->required(records_required)
        ->check(CLI::ExistingFile);
  };
  auto add_run = [&](CLI::App* sub) {
    sub->add_option("--out-dir", opts.out_dir, "Output directory")->required();
    sub->add_option("--methods", opts.methods,
                    "Methods: baseline null-input prior-match optimal")
        ->delimiter(',');
    sub->add_option("--prior", opts.prior,
                    "Target prior: uniform, manifest, or a JSON array file");
    sub->add_option("--jobs", opts.jobs, "Settings processed concurrently")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", opts.seed, "Seed recorded with the run");
  };

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic biased dataset");
  synth_cmd->add_option("--out-dir", opts.out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", opts.seed, "Generator seed");
  synth_cmd->add_option("--classes", synth.classes, "Number of classes")
      ->check(CLI::Range(2, 64));
  synth_cmd->add_option("--examples", synth.examples, "Examples per setting")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--prompts", synth.prompts, "Number of prompts")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--label-word-sets", synth.label_word_sets,
                        "Number of label-word sets")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--separation", synth.separation, "True-class logit boost");
  synth_cmd->add_option("--noise", synth.noise, "Uniform logit noise half-width");
  synth_cmd->add_option("--bias-min", synth.bias_min, "Smallest bias infinity norm");
  synth_cmd->add_option("--bias-max", synth.bias_max, "Largest bias infinity norm");

  auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit weights per setting");
  add_data(calibrate_cmd, true);
  add_run(calibrate_cmd);

  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Score weights.json from --out-dir on labelled records");
  add_data(evaluate_cmd, true);
  add_run(evaluate_cmd);

  auto* report_cmd =
      app.add_subcommand("report", "Aggregate settings.json from --out-dir");
  report_cmd->add_option("--out-dir", opts.out_dir, "Run directory")->required();
  report_cmd->add_flag("--svg", opts.svg, "Also render SVG plots");

  auto* sweep_cmd = app.add_subcommand("sweep", "Calibrate, evaluate and report");
  add_data(sweep_cmd, true);
  add_run(sweep_cmd);
  sweep_cmd->add_flag("--svg", opts.svg, "Also render SVG plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*synth_cmd) return cmd_synth(opts, synth);
    if (*calibrate_cmd) return cmd_calibrate(opts);
    if (*evaluate_cmd) return cmd_evaluate(opts);
    if (*report_cmd) return cmd_report(opts);
    if (*sweep_cmd) return cmd_sweep(opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_input_error() ? kExitInput : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
