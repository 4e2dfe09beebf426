#include "promptcal/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <thread>
#include <tuple>

#include "promptcal/errors.hpp"
#include "promptcal/svg.hpp"

namespace promptcal {

namespace {

template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  auto worker = [&](std::size_t w) {
    try {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    } catch (...) {
      errors[w] = std::current_exception();
      next.store(n);
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<Method> normalized_methods(const std::vector<Method>& methods) {
  std::vector<Method> out;
  for (Method m : kAllMethods) {
    if (std::find(methods.begin(), methods.end(), m) != methods.end()) {
      out.push_back(m);
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no calibration methods requested");
  }
  return out;
}

bool contains(const std::vector<Method>& methods, Method m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

io::SettingFailure failure_from(const SettingKey& setting, Method method,
                                const Error& e) {
  return {setting, method, std::string(to_string(e.code())), e.what()};
}

std::map<SettingKey, std::vector<ProbabilityRecord>> group_by_setting(
    const Dataset& dataset) {
  std::map<SettingKey, std::vector<ProbabilityRecord>> groups;
  for (const auto& r : dataset.records) groups[r.setting].push_back(r);
  return groups;
}

}  // namespace

TargetPrior resolve_prior(const RunConfig& config, const Manifest& manifest) {
  switch (config.prior_source) {
    case PriorSource::uniform:
      return TargetPrior::uniform(manifest.num_classes);
    case PriorSource::manifest:
      if (!manifest.target_prior) {
        throw Error(ErrorCode::SchemaError,
                    "--prior manifest requested but the manifest has no "
                    "target_prior");
      }
      return TargetPrior::from(*manifest.target_prior);
    case PriorSource::file:
      return io::load_prior(config.prior_path, manifest.num_classes);
  }
  return TargetPrior::uniform(manifest.num_classes);
}

CalibrationRun calibrate_dataset(const Dataset& dataset,
                                 const std::vector<Method>& requested,
                                 const TargetPrior& prior, std::size_t jobs) {
  const auto methods = normalized_methods(requested);
  const std::size_t k_classes = dataset.num_classes();
  if (prior.size() != k_classes) {
    throw Error(ErrorCode::InvalidArgument,
                "prior length does not match the number of classes");
  }
  if (dataset.records.empty()) {
    throw Error(ErrorCode::EmptyDataset, "dataset has no scored records");
  }
  if (contains(methods, Method::optimal) && !dataset.is_labelled()) {
    throw Error(ErrorCode::UnlabelledRecord,
                "the optimal method needs every record labelled");
  }
  const auto groups = group_by_setting(dataset);
  if (contains(methods, Method::null_input)) {
    for (const auto& [setting, _] : groups) {
      if (!dataset.null_probes.contains(setting)) {
        throw Error(ErrorCode::MissingNullProbe,
                    "no null probe for setting " + setting.str());
      }
    }
  }

  std::vector<const std::pair<const SettingKey, std::vector<ProbabilityRecord>>*>
      items;
  for (const auto& g : groups) items.push_back(&g);

  std::vector<CalibrationRun> per_setting(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto& [setting, records] = *items[i];
    auto& out = per_setting[i];
    for (Method m : methods) {
      try {
        CalibrationResult r;
        switch (m) {
          case Method::baseline:
            r.weights = baseline_weights(k_classes);
            break;
          case Method::null_input:
            r.weights = null_input_weights(dataset.null_probes.at(setting), prior);
            break;
          case Method::prior_match:
            r = prior_match_solve(records, prior);
            break;
          case Method::optimal: {
            std::vector<WeightVector> seeds;
            for (const auto& done : out.results) seeds.push_back(done.weights);
            r = optimal_weight_search(records, k_classes, seeds);
            break;
          }
        }
        r.setting = setting;
        r.method = m;
        out.results.push_back(std::move(r));
      } catch (const Error& e) {
        out.failures.push_back(failure_from(setting, m, e));
      }
    }
  });

  CalibrationRun run;
  for (auto& s : per_setting) {
    std::move(s.results.begin(), s.results.end(), std::back_inserter(run.results));
    std::move(s.failures.begin(), s.failures.end(),
              std::back_inserter(run.failures));
  }
  return run;
}

EvaluationRun evaluate_dataset(const Dataset& dataset,
                               const std::vector<CalibrationResult>& results,
                               std::size_t jobs) {
  const auto groups = group_by_setting(dataset);
  std::vector<const CalibrationResult*> ordered;
  for (const auto& r : results) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const CalibrationResult* a, const CalibrationResult* b) {
                     return std::tie(a->setting, a->method) <
                            std::tie(b->setting, b->method);
                   });

  std::vector<std::optional<SettingReport>> reports(ordered.size());
  std::vector<std::optional<io::SettingFailure>> failures(ordered.size());
  parallel_for(ordered.size(), jobs, [&](std::size_t i) {
    const auto& r = *ordered[i];
    try {
      const auto it = groups.find(r.setting);
      if (it == groups.end()) {
        throw Error(ErrorCode::EmptyDataset,
                    "no records for setting " + r.setting.str());
      }
      if (r.weights.size() != dataset.num_classes()) {
        throw Error(ErrorCode::InvalidArgument,
                    "weights do not match the number of classes");
      }
      reports[i] = score_setting(it->second, r);
    } catch (const Error& e) {
      failures[i] = failure_from(r.setting, r.method, e);
    }
  });

  EvaluationRun run;
  for (auto& r : reports) {
    if (r) run.reports.push_back(std::move(*r));
  }
  for (auto& f : failures) {
    if (f) run.failures.push_back(std::move(*f));
  }
  return run;
}

SweepOutcome summarize(CalibrationRun calibration, EvaluationRun evaluation) {
  SweepOutcome out;
  out.aggregates = aggregate(evaluation.reports);

  std::map<SettingKey, std::map<Method, const CalibrationResult*>> by_setting;
  for (const auto& r : calibration.results) by_setting[r.setting][r.method] = &r;
  std::vector<CalibrationTriple> triples;
  for (const auto& [setting, methods] : by_setting) {
    if (methods.contains(Method::optimal) &&
        methods.contains(Method::prior_match) &&
        methods.contains(Method::null_input)) {
      triples.push_back({*methods.at(Method::optimal),
                         *methods.at(Method::prior_match),
                         *methods.at(Method::null_input)});
    }
  }
  if (triples.size() >= 3) {
    out.alignment = weight_alignment(triples);
  } else {
    out.alignment_skipped =
        "alignment needs optimal, prior_match and null_input results for at "
        "least 3 settings; found " +
        std::to_string(triples.size());
  }
  out.calibration = std::move(calibration);
  out.evaluation = std::move(evaluation);
  return out;
}

SweepOutcome sweep_dataset(const Dataset& dataset,
                           const std::vector<Method>& methods,
                           const TargetPrior& prior, std::size_t jobs) {
  if (!dataset.is_labelled()) {
    throw Error(ErrorCode::UnlabelledRecord,
                "evaluation needs every record labelled");
  }
  auto calibration = calibrate_dataset(dataset, methods, prior, jobs);
  auto evaluation = evaluate_dataset(dataset, calibration.results, jobs);
  return summarize(std::move(calibration), std::move(evaluation));
}

void write_report_artifacts(const SweepOutcome& outcome,
                            const std::filesystem::path& out_dir, bool svg) {
  io::write_json_file(out_dir / artifacts::kAggregate,
                      io::aggregate_to_json(outcome.aggregates));
  const auto boxplots = io::boxplots_to_json(outcome.aggregates);
  io::write_json_file(out_dir / artifacts::kBoxplots, boxplots);

  nlohmann::json alignment;
  if (outcome.alignment) {
    alignment = io::alignment_to_json(*outcome.alignment);
  } else {
    alignment = {{"skipped", outcome.alignment_skipped}};
  }
  io::write_json_file(out_dir / artifacts::kAlignment, alignment);

  if (svg) {
    io::write_text_file(out_dir / artifacts::kBoxplotsSvg,
                        svg::render_boxplots(boxplots));
    if (outcome.alignment) {
      io::write_text_file(out_dir / artifacts::kAlignmentSvg,
                          svg::render_alignment(alignment));
    }
  }
}

SweepOutcome run_sweep(const RunConfig& config) {
  const auto methods = normalized_methods(config.methods);
  io::LoadOptions options;
  options.require_null_probes = contains(methods, Method::null_input);
  const Dataset dataset =
      io::load_dataset(config.manifest_path, config.records_path, options);
  const TargetPrior prior = resolve_prior(config, dataset.manifest);

  auto outcome = sweep_dataset(dataset, methods, prior, config.jobs);

  std::filesystem::create_directories(config.out_dir);
  io::write_json_file(config.out_dir / artifacts::kWeights,
                      io::weights_to_json(outcome.calibration.results));
  auto failures = outcome.calibration.failures;
  failures.insert(failures.end(), outcome.evaluation.failures.begin(),
                  outcome.evaluation.failures.end());
  io::write_json_file(config.out_dir / artifacts::kSettings,
                      io::settings_to_json(outcome.evaluation.reports, failures));
  write_report_artifacts(outcome, config.out_dir, config.svg);
  return outcome;
}

}  // namespace promptcal
