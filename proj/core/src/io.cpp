#include "promptcal/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "promptcal/errors.hpp"

namespace promptcal::io {

using nlohmann::json;

namespace {

constexpr std::string_view kKeySeparator = "::";

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::SchemaError, where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key,
                           const std::string& where, bool non_empty = true) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) {
    schema_error(where, std::string("field '") + key + "' must be a string");
  }
  auto s = v.get<std::string>();
  if (non_empty && s.empty()) {
    schema_error(where, std::string("field '") + key + "' must be non-empty");
  }
  return s;
}

void check_id(const std::string& id, const std::string& where) {
  if (id.empty()) schema_error(where, "identifiers must be non-empty");
  if (id.find(kKeySeparator) != std::string::npos) {
    schema_error(where, "identifier '" + id + "' must not contain '::'");
  }
}

json number_or_null(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

std::vector<double> to_vector(std::span<const double> s) {
  return {s.begin(), s.end()};
}

Method require_method(const std::string& name, const std::string& where) {
  const auto m = parse_method(name);
  if (!m) schema_error(where, "unknown method '" + name + "'");
  return *m;
}

}  // namespace

Manifest parse_manifest(const json& j) {
  const std::string where = "manifest";
  if (!j.is_object()) schema_error(where, "must be a JSON object");
  Manifest m;
  m.task = require_string(j, "task", where);

  const json& k = require(j, "num_classes", where);
  if (!k.is_number_integer() || k.get<long long>() < 2) {
    schema_error(where, "'num_classes' must be an integer >= 2");
  }
  m.num_classes = k.get<std::size_t>();

  const json& names = require(j, "class_names", where);
  if (!names.is_array() || names.size() != m.num_classes) {
    schema_error(where, "'class_names' must be an array of num_classes strings");
  }
  for (const auto& n : names) {
    if (!n.is_string()) schema_error(where, "'class_names' entries must be strings");
    m.class_names.push_back(n.get<std::string>());
  }

  const json& prompts = require(j, "prompts", where);
  if (!prompts.is_object() || prompts.empty()) {
    schema_error(where, "'prompts' must be a non-empty object");
  }
  for (const auto& [id, text] : prompts.items()) {
    check_id(id, where + ".prompts");
    if (!text.is_string()) schema_error(where, "prompt '" + id + "' must be a string");
    m.prompts[id] = text.get<std::string>();
  }

  const json& sets = require(j, "label_word_sets", where);
  if (!sets.is_object() || sets.empty()) {
    schema_error(where, "'label_word_sets' must be a non-empty object");
  }
  for (const auto& [id, words] : sets.items()) {
    check_id(id, where + ".label_word_sets");
    if (!words.is_array() || words.size() != m.num_classes) {
      schema_error(where, "label-word set '" + id + "' must have num_classes words");
    }
    std::vector<std::string> ws;
    for (const auto& w : words) {
      if (!w.is_string()) schema_error(where, "label words must be strings");
      ws.push_back(w.get<std::string>());
    }
    m.label_word_sets[id] = std::move(ws);
  }

  if (const auto it = j.find("target_prior"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != m.num_classes) {
      schema_error(where, "'target_prior' must be an array of num_classes numbers");
    }
    std::vector<double> prior;
    for (const auto& p : *it) {
      if (!p.is_number()) schema_error(where, "'target_prior' entries must be numbers");
      prior.push_back(p.get<double>());
    }
    try {
      TargetPrior::from(prior);
    } catch (const Error& e) {
      schema_error(where, std::string("'target_prior' invalid: ") + e.what());
    }
    m.target_prior = std::move(prior);
  }

  static const std::set<std::string> known{"task", "num_classes", "class_names",
                                           "prompts", "label_word_sets",
                                           "target_prior"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) m.extra_fields[key] = value.dump();
  }
  return m;
}

json manifest_to_json(const Manifest& m) {
  json j = json::object();
  for (const auto& [key, text] : m.extra_fields) j[key] = json::parse(text);
  j["task"] = m.task;
  j["num_classes"] = m.num_classes;
  j["class_names"] = m.class_names;
  j["prompts"] = m.prompts;
  j["label_word_sets"] = m.label_word_sets;
  if (m.target_prior) j["target_prior"] = *m.target_prior;
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

Manifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_json_file(path));
}

Dataset parse_dataset(Manifest manifest, std::istream& in,
                      const LoadOptions& options) {
  Dataset ds;
  ds.manifest = std::move(manifest);
  const std::size_t k_classes = ds.manifest.num_classes;
  std::set<std::pair<std::string, SettingKey>> seen;

  static const std::set<std::string> allowed{"example_id",     "prompt_id",
                                             "label_words_id", "word_probs",
                                             "label",          "is_null_probe"};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);

    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, where + ": " + e.what());
    }
    if (!j.is_object()) schema_error(where, "record must be a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (!allowed.contains(key)) schema_error(where, "unknown field '" + key + "'");
    }

    ProbabilityRecord r;
    r.example_id = require_string(j, "example_id", where);
    r.setting.prompt_id = require_string(j, "prompt_id", where);
    r.setting.label_words_id = require_string(j, "label_words_id", where);
    if (!ds.manifest.prompts.contains(r.setting.prompt_id)) {
      schema_error(where, "prompt_id '" + r.setting.prompt_id +
                              "' is not declared in the manifest");
    }
    if (!ds.manifest.label_word_sets.contains(r.setting.label_words_id)) {
      schema_error(where, "label_words_id '" + r.setting.label_words_id +
                              "' is not declared in the manifest");
    }

    const json& probs = require(j, "word_probs", where);
    if (!probs.is_array()) schema_error(where, "field 'word_probs' must be an array");
    if (probs.size() != k_classes) {
      schema_error(where, "field 'word_probs' has length " +
                              std::to_string(probs.size()) + ", expected " +
                              std::to_string(k_classes));
    }
    for (const auto& p : probs) {
      if (!p.is_number()) schema_error(where, "field 'word_probs' must hold numbers");
      const double v = p.get<double>();
      if (!(v >= 0.0 && v <= 1.0)) {
        schema_error(where, "field 'word_probs' entries must lie in [0, 1]");
      }
      r.word_probs.push_back(v);
    }

    if (const auto it = j.find("label"); it != j.end() && !it->is_null()) {
      if (!it->is_number_integer()) {
        schema_error(where, "field 'label' must be an integer or null");
      }
      const auto label = it->get<long long>();
      if (label < 0 || label >= static_cast<long long>(k_classes)) {
        schema_error(where, "field 'label' out of range [0, num_classes)");
      }
      r.label = static_cast<int>(label);
    }

    if (const auto it = j.find("is_null_probe"); it != j.end()) {
      if (!it->is_boolean()) schema_error(where, "field 'is_null_probe' must be a boolean");
      r.is_null_probe = it->get<bool>();
    }
    if (r.is_null_probe != (r.example_id == kNullExampleId)) {
      schema_error(where, "null probes must use example_id '__null__' and set "
                          "is_null_probe");
    }
    if (r.is_null_probe && r.label) {
      schema_error(where, "a null probe must not carry a label");
    }

    if (!seen.emplace(r.example_id, r.setting).second) {
      throw Error(ErrorCode::DuplicateRecord,
                  where + ": duplicate record for example '" + r.example_id +
                      "' in setting " + r.setting.str());
    }
    if (r.is_null_probe) {
      ds.null_probes[r.setting] = std::move(r.word_probs);
    } else {
      ds.records.push_back(std::move(r));
    }
  }

  if (options.require_null_probes) {
    for (const auto& s : ds.settings()) {
      if (!ds.null_probes.contains(s)) {
        throw Error(ErrorCode::MissingNullProbe,
                    "no null probe for setting " + s.str());
      }
    }
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& records_path,
                     const LoadOptions& options) {
  auto manifest = load_manifest(manifest_path);
  std::ifstream in(records_path);
  if (!in) {
    throw Error(ErrorCode::ParseError, "cannot open " + records_path.string());
  }
  return parse_dataset(std::move(manifest), in, options);
}

std::string records_to_jsonl(const Dataset& dataset) {
  std::ostringstream out;
  auto emit = [&out](const std::string& id, const SettingKey& s,
                     const std::vector<double>& probs,
                     const std::optional<int>& label, bool null_probe) {
    nlohmann::ordered_json j;
    j["example_id"] = id;
    j["prompt_id"] = s.prompt_id;
    j["label_words_id"] = s.label_words_id;
    j["word_probs"] = probs;
    j["label"] = label ? json(*label) : json(nullptr);
    j["is_null_probe"] = null_probe;
    out << j.dump() << '\n';
  };
  for (const auto& r : dataset.records) {
    emit(r.example_id, r.setting, r.word_probs, r.label, false);
  }
  for (const auto& [setting, probs] : dataset.null_probes) {
    emit(std::string(kNullExampleId), setting, probs, std::nullopt, true);
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_dataset(const Dataset& dataset,
                   const std::filesystem::path& manifest_path,
                   const std::filesystem::path& records_path) {
  write_json_file(manifest_path, manifest_to_json(dataset.manifest));
  write_text_file(records_path, records_to_jsonl(dataset));
}

TargetPrior load_prior(const std::filesystem::path& path,
                       std::size_t num_classes) {
  const json j = read_json_file(path);
  const std::string where = path.string();
  if (!j.is_array() || j.size() != num_classes) {
    schema_error(where, "prior must be an array of num_classes numbers");
  }
  std::vector<double> probs;
  for (const auto& p : j) {
    if (!p.is_number()) schema_error(where, "prior entries must be numbers");
    probs.push_back(p.get<double>());
  }
  try {
    return TargetPrior::from(std::move(probs));
  } catch (const Error& e) {
    schema_error(where, e.what());
  }
}

SettingKey parse_setting_key(std::string_view key) {
  const auto pos = key.find(kKeySeparator);
  if (pos == std::string_view::npos || pos == 0 ||
      pos + kKeySeparator.size() >= key.size()) {
    schema_error("setting key '" + std::string(key) + "'",
                 "expected 'prompt_id::label_words_id'");
  }
  return {std::string(key.substr(0, pos)),
          std::string(key.substr(pos + kKeySeparator.size()))};
}

json weights_to_json(const std::vector<CalibrationResult>& results) {
  json j = json::object();
  for (const auto& r : results) {
    json entry;
    entry["alphas"] = to_vector(r.weights.alphas());
    json diag = json::object();
    for (const auto& [key, value] : r.diagnostics) diag[key] = number_or_null(value);
    entry["diagnostics"] = std::move(diag);
    j[r.setting.str()][std::string(to_string(r.method))] = std::move(entry);
  }
  return j;
}

std::vector<CalibrationResult> weights_from_json(const json& j) {
  if (!j.is_object()) schema_error("weights", "must be a JSON object");
  std::vector<CalibrationResult> out;
  for (const auto& [key, methods] : j.items()) {
    const SettingKey setting = parse_setting_key(key);
    const std::string where = "weights." + key;
    if (!methods.is_object()) schema_error(where, "must be an object");
    for (const auto& [name, entry] : methods.items()) {
      CalibrationResult r;
      r.setting = setting;
      r.method = require_method(name, where);
      const json& alphas = require(entry, "alphas", where + "." + name);
      if (!alphas.is_array()) schema_error(where, "'alphas' must be an array");
      try {
        r.weights = WeightVector::canonical(alphas.get<std::vector<double>>());
      } catch (const json::exception& e) {
        schema_error(where, e.what());
      } catch (const Error& e) {
        schema_error(where, e.what());
      }
      if (const auto d = entry.find("diagnostics"); d != entry.end()) {
        for (const auto& [dk, dv] : d->items()) {
          r.diagnostics[dk] = dv.is_number() ? dv.get<double>() : std::nan("");
        }
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

json settings_to_json(const std::vector<SettingReport>& reports,
                      const std::vector<SettingFailure>& failures) {
  json rs = json::array();
  for (const auto& r : reports) {
    rs.push_back({{"prompt_id", r.setting.prompt_id},
                  {"label_words_id", r.setting.label_words_id},
                  {"method", std::string(to_string(r.method))},
                  {"accuracy", r.accuracy},
                  {"correct", r.correct},
                  {"n_examples", r.n_examples},
                  {"alphas", to_vector(r.weights.alphas())}});
  }
  json fs = json::array();
  for (const auto& f : failures) {
    fs.push_back({{"prompt_id", f.setting.prompt_id},
                  {"label_words_id", f.setting.label_words_id},
                  {"method", std::string(to_string(f.method))},
                  {"code", f.code},
                  {"reason", f.reason}});
  }
  return {{"reports", std::move(rs)}, {"failures", std::move(fs)}};
}

std::vector<SettingReport> setting_reports_from_json(const json& j) {
  const std::string where = "settings";
  if (!j.is_object()) schema_error(where, "must be a JSON object");
  std::vector<SettingReport> out;
  for (const auto& e : require(j, "reports", where)) {
    SettingReport r;
    r.setting = {require_string(e, "prompt_id", where),
                 require_string(e, "label_words_id", where)};
    r.method = require_method(require_string(e, "method", where), where);
    try {
      r.correct = require(e, "correct", where).get<std::size_t>();
      r.n_examples = require(e, "n_examples", where).get<std::size_t>();
      r.weights = WeightVector::canonical(
          require(e, "alphas", where).get<std::vector<double>>());
    } catch (const json::exception& ex) {
      schema_error(where, ex.what());
    }
    if (r.n_examples == 0 || r.correct > r.n_examples) {
      schema_error(where, "inconsistent correct / n_examples");
    }
    r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.n_examples);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SettingFailure> failures_from_json(const json& j) {
  std::vector<SettingFailure> out;
  const auto it = j.find("failures");
  if (it == j.end()) return out;
  for (const auto& e : *it) {
    SettingFailure f;
    f.setting = {require_string(e, "prompt_id", "failures"),
                 require_string(e, "label_words_id", "failures")};
    f.method = require_method(require_string(e, "method", "failures"), "failures");
    f.code = require_string(e, "code", "failures");
    f.reason = require_string(e, "reason", "failures", false);
    out.push_back(std::move(f));
  }
  return out;
}

json boxplot_to_json(const BoxplotSummary& b) {
  return {{"min", b.min},
          {"q1", b.q1},
          {"median", b.median},
          {"q3", b.q3},
          {"max", b.max},
          {"whisker_low", b.whisker_low},
          {"whisker_high", b.whisker_high},
          {"outliers", b.outliers},
          {"count", b.count}};
}

json aggregate_to_json(const std::vector<AggregateReport>& aggregates) {
  json methods = json::array();
  for (const auto& a : aggregates) {
    json boxes = json::object();
    for (const auto& [prompt, box] : a.per_prompt_boxplots) {
      boxes[prompt] = boxplot_to_json(box);
    }
    methods.push_back({{"method", std::string(to_string(a.method))},
                       {"mean_accuracy", a.mean_accuracy},
                       {"std_accuracy", a.std_accuracy},
                       {"n_settings", a.n_settings},
                       {"per_prompt_boxplots", std::move(boxes)}});
  }
  return {{"methods", std::move(methods)}};
}

json boxplots_to_json(const std::vector<AggregateReport>& aggregates) {
  json methods = json::object();
  for (const auto& a : aggregates) {
    json boxes = json::object();
    for (const auto& [prompt, box] : a.per_prompt_boxplots) {
      boxes[prompt] = boxplot_to_json(box);
    }
    methods[std::string(to_string(a.method))] = std::move(boxes);
  }
  return {{"methods", std::move(methods)}};
}

json alignment_to_json(const AlignmentReport& report) {
  auto pairs = [](const std::vector<AlignmentPoint>& points) {
    json arr = json::array();
    for (const auto& p : points) {
      arr.push_back({{"prompt_id", p.setting.prompt_id},
                     {"label_words_id", p.setting.label_words_id},
                     {"class_index", p.class_index},
                     {"log_optimal", p.log_optimal},
                     {"log_other", p.log_other}});
    }
    return arr;
  };
  return {{"n_settings", report.n_settings},
          {"prior_match",
           {{"correlation", number_or_null(report.prior_match_correlation)},
            {"pairs", pairs(report.prior_match_pairs)}}},
          {"null_input",
           {{"correlation", number_or_null(report.null_input_correlation)},
            {"pairs", pairs(report.null_input_pairs)}}}};
}

}  // namespace promptcal::io
