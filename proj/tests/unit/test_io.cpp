#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>

#include "doctest.h"
#include "generators.hpp"
#include "promptcal/errors.hpp"
#include "promptcal/io.hpp"
#include "promptcal/synth.hpp"

using namespace promptcal;
using nlohmann::json;
using promptcal::testing::Gen;

namespace {

const char* kManifest = R"({
  "task": "sentiment",
  "num_classes": 2,
  "class_names": ["negative", "positive"],
  "prompts": {"p1": "classify the following review:"},
  "label_word_sets": {"w1": ["bad", "good"]}
})";

Manifest manifest() { return io::parse_manifest(json::parse(kManifest)); }

Dataset parse(const std::string& text, io::LoadOptions opts = {}) {
  std::istringstream in(text);
  return io::parse_dataset(manifest(), in, opts);
}

std::string line(const std::string& id, const std::string& probs,
                 const std::string& tail = R"(, "label": 0)") {
  return R"({"example_id": ")" + id +
         R"(", "prompt_id": "p1", "label_words_id": "w1", "word_probs": )" +
         probs + tail + "}\n";
}

const std::string kNull =
    R"({"example_id": "__null__", "prompt_id": "p1", "label_words_id": "w1", "word_probs": [0.3, 0.1], "is_null_probe": true})"
    "\n";

// Runs fn and returns the thrown Error's code and message.
std::pair<ErrorCode, std::string> error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return {e.code(), e.what()};
  }
  FAIL("no error thrown");
  return {ErrorCode::InvalidArgument, ""};
}

std::filesystem::path tmp_dir(const std::string& name) {
  auto dir = std::filesystem::path(PROMPTCAL_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("a four-line file yields three records and one null probe") {
  const auto ds = parse(line("a", "[0.1, 0.6]") + line("b", "[0.5, 0.2]", R"(, "label": 1)") +
                        line("c", "[0.3, 0.3]", "") + kNull);
  CHECK(ds.records.size() == 3);
  CHECK(ds.null_probes.size() == 1);
  CHECK(ds.null_probes.at({"p1", "w1"}) == std::vector<double>{0.3, 0.1});
  CHECK(ds.records[0].label == 0);
  CHECK(ds.records[1].label == 1);
  CHECK_FALSE(ds.records[2].label.has_value());
  CHECK_FALSE(ds.is_labelled());
}

TEST_CASE("blank lines are skipped") {
  const auto ds = parse("\n" + line("a", "[0.1, 0.6]") + "   \n");
  CHECK(ds.records.size() == 1);
}

TEST_CASE("schema errors name the line") {
  const auto [code, msg] = error_of([] {
    parse(line("a", "[0.1, 0.6]") + line("b", "[0.1, 0.6, 0.2]"));
  });
  CHECK(code == ErrorCode::SchemaError);
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("word_probs") != std::string::npos);
}

TEST_CASE("malformed JSON is a parse error with the line number") {
  const auto [code, msg] = error_of([] { parse(line("a", "[0.1, 0.6]") + "{not json\n"); });
  CHECK(code == ErrorCode::ParseError);
  CHECK(msg.find("line 2") != std::string::npos);
}

TEST_CASE("record validation") {
  CHECK(error_of([] { parse(line("a", "[0.1, 0.6]") + line("a", "[0.2, 0.6]")); }).first ==
        ErrorCode::DuplicateRecord);
  CHECK(error_of([] {
          parse(R"({"example_id": "a", "prompt_id": "zz", "label_words_id": "w1", "word_probs": [0.1, 0.2]})"
                "\n");
        }).first == ErrorCode::SchemaError);
  CHECK(error_of([] { parse(line("a", "[0.1, 0.6]", R"(, "label": 2)")); }).first ==
        ErrorCode::SchemaError);
  CHECK(error_of([] { parse(line("a", "[0.1, 1.6]")); }).first == ErrorCode::SchemaError);
  CHECK(error_of([] { parse(line("a", "[0.1, 0.6]", R"(, "extra": 1)")); }).first ==
        ErrorCode::SchemaError);
  CHECK(error_of([] {
          parse(line("__null__", "[0.1, 0.6]", R"(, "label": 1, "is_null_probe": true)"));
        }).first == ErrorCode::SchemaError);
  CHECK(error_of([] { parse(line("__null__", "[0.1, 0.6]", "")); }).first ==
        ErrorCode::SchemaError);
  CHECK(error_of([] { parse(line("a", "[0.1, 0.6]", R"(, "is_null_probe": true)")); }).first ==
        ErrorCode::SchemaError);
}

TEST_CASE("missing null probes are an error only when requested") {
  const std::string text = line("a", "[0.1, 0.6]");
  CHECK(parse(text).null_probes.empty());
  io::LoadOptions opts;
  opts.require_null_probes = true;
  CHECK(error_of([&] { parse(text, opts); }).first == ErrorCode::MissingNullProbe);
  CHECK(parse(text + kNull, opts).null_probes.size() == 1);
}

TEST_CASE("manifest validation") {
  auto bad = json::parse(kManifest);
  bad["class_names"] = {"only_one"};
  CHECK(error_of([&] { io::parse_manifest(bad); }).first == ErrorCode::SchemaError);

  bad = json::parse(kManifest);
  bad["prompts"] = {{"a::b", "text"}};
  CHECK(error_of([&] { io::parse_manifest(bad); }).first == ErrorCode::SchemaError);

  bad = json::parse(kManifest);
  bad["target_prior"] = {0.3, 0.3};
  CHECK(error_of([&] { io::parse_manifest(bad); }).first == ErrorCode::SchemaError);

  bad = json::parse(kManifest);
  bad.erase("task");
  CHECK(error_of([&] { io::parse_manifest(bad); }).first == ErrorCode::SchemaError);

  auto good = json::parse(kManifest);
  good["target_prior"] = {0.25, 0.75};
  good["tokenization"] = {{"bad", {123}}};
  const auto m = io::parse_manifest(good);
  REQUIRE(m.target_prior.has_value());
  CHECK((*m.target_prior)[1] == 0.75);
  CHECK(io::parse_manifest(io::manifest_to_json(m)) == m);
  CHECK(io::manifest_to_json(m).at("tokenization") == good.at("tokenization"));
}

TEST_CASE("setting keys") {
  CHECK(io::parse_setting_key("p1::w2") == SettingKey{"p1", "w2"});
  CHECK(SettingKey{"p1", "w2"}.str() == "p1::w2");
  CHECK_THROWS_AS(io::parse_setting_key("p1w2"), Error);
  CHECK_THROWS_AS(io::parse_setting_key("::w2"), Error);
  CHECK_THROWS_AS(io::parse_setting_key("p1::"), Error);
}

TEST_CASE("records round-trip losslessly") {
  Gen gen(3);
  for (int t = 0; t < 50; ++t) {
    SuiteConfig cfg;
    cfg.num_classes = 2 + gen.index(3);
    cfg.n_examples = 1 + gen.index(30);
    cfg.n_prompts = 1 + gen.index(3);
    cfg.n_label_word_sets = 1 + gen.index(3);
    cfg.seed = t;
    const auto ds = generate_suite(cfg).dataset;
    const std::string text = io::records_to_jsonl(ds);
    std::istringstream in(text);
    const auto back = io::parse_dataset(ds.manifest, in);
    REQUIRE(back.records.size() == ds.records.size());
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
      CHECK(back.records[i].example_id == ds.records[i].example_id);
      CHECK(back.records[i].setting == ds.records[i].setting);
      CHECK(back.records[i].word_probs == ds.records[i].word_probs);
      CHECK(back.records[i].label == ds.records[i].label);
    }
    CHECK(back.null_probes == ds.null_probes);
    CHECK(io::records_to_jsonl(back) == text);
  }
}

TEST_CASE("dataset files round-trip") {
  const auto dir = tmp_dir("io_roundtrip");
  SuiteConfig cfg;
  cfg.n_examples = 20;
  const auto ds = generate_suite(cfg).dataset;
  io::write_dataset(ds, dir / "manifest.json", dir / "records.jsonl");
  const auto back = io::load_dataset(dir / "manifest.json", dir / "records.jsonl");
  CHECK(back.manifest == ds.manifest);
  CHECK(io::records_to_jsonl(back) == io::records_to_jsonl(ds));
  CHECK(error_of([&] { io::load_dataset(dir / "missing.json", dir / "records.jsonl"); })
            .first == ErrorCode::ParseError);
}

TEST_CASE("weights round-trip") {
  Gen gen(17);
  std::vector<CalibrationResult> results;
  for (int i = 0; i < 10; ++i) {
    for (Method m : kAllMethods) {
      CalibrationResult r;
      r.setting = {"p" + std::to_string(i % 3), "w" + std::to_string(i)};
      r.method = m;
      r.weights = WeightVector::canonical(gen.alphas(3, 20.0));
      r.diagnostics["iterations"] = static_cast<double>(i);
      results.push_back(r);
    }
  }
  const auto j = io::weights_to_json(results);
  const auto back = io::weights_from_json(json::parse(j.dump()));
  REQUIRE(back.size() == results.size());
  for (const auto& r : results) {
    const auto it = std::find_if(back.begin(), back.end(), [&](const auto& b) {
      return b.setting == r.setting && b.method == r.method;
    });
    REQUIRE(it != back.end());
    CHECK(it->weights == r.weights);
    CHECK(it->diagnostics == r.diagnostics);
  }
  CHECK(io::weights_to_json(back).dump() == j.dump());
}

TEST_CASE("setting reports and failures round-trip") {
  SettingReport r;
  r.setting = {"p1", "w1"};
  r.method = Method::prior_match;
  r.correct = 7;
  r.n_examples = 9;
  r.accuracy = 7.0 / 9.0;
  r.weights = WeightVector::canonical({1.0, 0.123456789012345678});
  io::SettingFailure f{{"p2", "w1"}, Method::optimal, "UnlabelledRecord", "no label"};
  const auto j = json::parse(io::settings_to_json({r}, {f}).dump());
  const auto reps = io::setting_reports_from_json(j);
  REQUIRE(reps.size() == 1);
  CHECK(reps[0].accuracy == r.accuracy);
  CHECK(reps[0].weights == r.weights);
  const auto fails = io::failures_from_json(j);
  REQUIRE(fails.size() == 1);
  CHECK(fails[0].setting == f.setting);
  CHECK(fails[0].code == f.code);
}

TEST_CASE("target prior files") {
  const auto dir = tmp_dir("io_prior");
  io::write_text_file(dir / "prior.json", "[0.2, 0.8]");
  CHECK(io::load_prior(dir / "prior.json", 2)[1] == 0.8);
  CHECK(error_of([&] { io::load_prior(dir / "prior.json", 3); }).first ==
        ErrorCode::SchemaError);
  io::write_text_file(dir / "bad.json", "[0.2, 0.2]");
  CHECK(error_of([&] { io::load_prior(dir / "bad.json", 2); }).first ==
        ErrorCode::SchemaError);
}

TEST_CASE("shipped prompt banks load as manifests") {
  const std::filesystem::path banks = std::filesystem::path(PROMPTCAL_SOURCE_DIR) / "data/banks";
  const auto sentiment = io::load_manifest(banks / "sentiment.json");
  CHECK(sentiment.num_classes == 2);
  CHECK(sentiment.prompts.size() == 6);
  CHECK(sentiment.label_word_sets.size() == 25);
  CHECK(sentiment.prompts.at("p0") == "classify the following review:");
  CHECK(sentiment.label_word_sets.at("bad-good") ==
        std::vector<std::string>{"bad", "good"});

  const auto nli = io::load_manifest(banks / "nli.json");
  CHECK(nli.num_classes == 3);
  CHECK(nli.prompts.size() == 7);
  CHECK(nli.label_word_sets.size() == 64);
  CHECK(nli.class_names[1] == "neutral");

  const auto para = io::load_manifest(banks / "paraphrase.json");
  CHECK(para.num_classes == 2);
  CHECK(para.prompts.size() == 6);
  CHECK(para.label_word_sets.size() == 25);
}
