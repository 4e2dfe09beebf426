#pragma once

// Wire formats.
//
//   manifest.json   task description: classes, prompts, label-word sets and
//                   an optional target prior
//   records.jsonl   one probability record per line:
//                     {"example_id": "...", "prompt_id": "...",
//                      "label_words_id": "...", "word_probs": [...],
//                      "label": 1 | null, "is_null_probe": false}
//                   null probes use example_id "__null__"
//   weights.json    setting -> method -> {"alphas": [...], "diagnostics": {}}
//   settings.json   per-setting accuracy reports and recorded failures
//   aggregate.json  per-method mean/std and per-prompt boxplot summaries
//   boxplots.json   method -> prompt -> boxplot summary (plot input)
//   alignment.json  paired log-weights and their correlations
//
// JSON numbers are written in shortest round-trip form, so every double
// survives a write/read cycle bit-exactly. Object keys are sorted, which
// keeps output byte-stable for identical inputs.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptcal/calibrators.hpp"
#include "promptcal/evaluation.hpp"
#include "promptcal/model.hpp"

namespace promptcal::io {

inline constexpr std::string_view kNullExampleId = "__null__";

struct LoadOptions {
  // Fail with MissingNullProbe when a scored setting has no null probe.
  bool require_null_probes = false;
};

Manifest parse_manifest(const nlohmann::json& j);
nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest load_manifest(const std::filesystem::path& path);

// Parses JSONL records against `manifest`. Errors name the 1-based line.
Dataset parse_dataset(Manifest manifest, std::istream& records,
                      const LoadOptions& options = {});
Dataset load_dataset(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& records_path,
                     const LoadOptions& options = {});

// Scored records in dataset order, then null probes in setting order.
std::string records_to_jsonl(const Dataset& dataset);
void write_dataset(const Dataset& dataset,
                   const std::filesystem::path& manifest_path,
                   const std::filesystem::path& records_path);

// A JSON array of K probabilities.
TargetPrior load_prior(const std::filesystem::path& path,
                       std::size_t num_classes);

// Inverse of SettingKey::str().
SettingKey parse_setting_key(std::string_view key);

nlohmann::json weights_to_json(const std::vector<CalibrationResult>& results);
std::vector<CalibrationResult> weights_from_json(const nlohmann::json& j);

struct SettingFailure {
  SettingKey setting;
  Method method = Method::baseline;
  std::string code;
  std::string reason;
};

nlohmann::json settings_to_json(const std::vector<SettingReport>& reports,
                                const std::vector<SettingFailure>& failures);
std::vector<SettingReport> setting_reports_from_json(const nlohmann::json& j);
std::vector<SettingFailure> failures_from_json(const nlohmann::json& j);

nlohmann::json boxplot_to_json(const BoxplotSummary& box);
nlohmann::json aggregate_to_json(const std::vector<AggregateReport>& aggregates);
nlohmann::json boxplots_to_json(const std::vector<AggregateReport>& aggregates);
nlohmann::json alignment_to_json(const AlignmentReport& report);

nlohmann::json read_json_file(const std::filesystem::path& path);
// Writes `j.dump(2)` plus a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace promptcal::io
