#pragma once

// Calibration and evaluation across every prompt setting of a dataset, and
// the on-disk artifacts of a run.
//
// Settings are processed concurrently; results are assembled in
// (prompt_id, label_words_id, method) order so outputs do not depend on
// scheduling. A setting/method pair that fails is recorded with its reason
// and left out of the aggregates.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "promptcal/calibrators.hpp"
#include "promptcal/evaluation.hpp"
#include "promptcal/io.hpp"
#include "promptcal/model.hpp"

namespace promptcal {

enum class PriorSource { uniform, manifest, file };

struct RunConfig {
  std::filesystem::path manifest_path;
  std::filesystem::path records_path;
  std::filesystem::path out_dir;
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  PriorSource prior_source = PriorSource::uniform;
  std::filesystem::path prior_path;  // when prior_source == file
  bool svg = false;
  std::size_t jobs = 1;
  std::uint64_t seed = 7;
};

TargetPrior resolve_prior(const RunConfig& config, const Manifest& manifest);

struct CalibrationRun {
  std::vector<CalibrationResult> results;
  std::vector<io::SettingFailure> failures;
};

struct EvaluationRun {
  std::vector<SettingReport> reports;
  std::vector<io::SettingFailure> failures;
};

struct SweepOutcome {
  CalibrationRun calibration;
  EvaluationRun evaluation;
  std::vector<AggregateReport> aggregates;
  std::optional<AlignmentReport> alignment;
  std::string alignment_skipped;  // reason when `alignment` is empty
};

// Runs the requested methods on every setting. The optimal search is seeded
// with the weights of every other method computed for the same setting.
// Throws UnlabelledRecord up front if `optimal` is requested on unlabelled
// data and MissingNullProbe if `null_input` is requested without probes.
CalibrationRun calibrate_dataset(const Dataset& dataset,
                                 const std::vector<Method>& methods,
                                 const TargetPrior& prior, std::size_t jobs = 1);

// Scores each calibration result on its setting's labelled records.
EvaluationRun evaluate_dataset(const Dataset& dataset,
                               const std::vector<CalibrationResult>& results,
                               std::size_t jobs = 1);

// Aggregates and weight alignment from already-scored results.
SweepOutcome summarize(CalibrationRun calibration, EvaluationRun evaluation);

SweepOutcome sweep_dataset(const Dataset& dataset,
                           const std::vector<Method>& methods,
                           const TargetPrior& prior, std::size_t jobs = 1);

// File names written into the output directory.
namespace artifacts {
inline constexpr const char* kWeights = "weights.json";
inline constexpr const char* kSettings = "settings.json";
inline constexpr const char* kAggregate = "aggregate.json";
inline constexpr const char* kBoxplots = "boxplots.json";
inline constexpr const char* kAlignment = "alignment.json";
inline constexpr const char* kBoxplotsSvg = "boxplots.svg";
inline constexpr const char* kAlignmentSvg = "alignment.svg";
inline constexpr const char* kRunMeta = "run_meta.json";
}  // namespace artifacts

// Writes aggregate, boxplot, alignment and (optionally) SVG artifacts.
void write_report_artifacts(const SweepOutcome& outcome,
                            const std::filesystem::path& out_dir, bool svg);

// Full pipeline from files: load, calibrate, evaluate, aggregate, write.
SweepOutcome run_sweep(const RunConfig& config);

}  // namespace promptcal
