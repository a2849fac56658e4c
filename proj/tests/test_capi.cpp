// Exercises the shared library strictly through the C API header.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <filesystem>
#include <string>

#include "confrec.h"
#include "doctest.h"
#include "support/scratch.hpp"

using testsupport::scratch_path;

namespace {

std::string capi_config_text(const std::string& tag) {
  return R"({
    "seed": 11,
    "dataset": {"format": "generic", "name": "capi"},
    "synth": {"n_users": 15, "n_items": 12, "n_interactions": 150, "noise_sd": 0.2,
              "n_context_features": 1, "context_cardinality": 2},
    "model": {"kind": "biasedmf", "factors": 4, "epochs": 8},
    "conformal": {"epsilons": [0.1]},
    "output": {"model": ")" +
         scratch_path(tag + ".model") + R"(", "report": ")" + scratch_path(tag + ".report") +
         R"("}
  })";
}

struct ConfigHandle {
  cr_config* cfg = nullptr;
  ~ConfigHandle() { cr_config_free(cfg); }
};

}  // namespace

TEST_CASE("version and error strings are always available") {
  REQUIRE(cr_version() != nullptr);
  CHECK(std::string(cr_version()) == "0.1.0");
  CHECK(cr_last_error() != nullptr);
}

TEST_CASE("config parsing maps error categories to status codes") {
  ConfigHandle h;
  CHECK(cr_config_parse("{ not json", nullptr, 0, &h.cfg) == CR_ERR_CONFIG);
  CHECK(std::strlen(cr_last_error()) > 0);
  CHECK(h.cfg == nullptr);

  CHECK(cr_config_parse(R"({"unknown_key": 1})", nullptr, 0, &h.cfg) == CR_ERR_CONFIG);
  CHECK(std::string(cr_last_error()).find("unknown_key") != std::string::npos);

  CHECK(cr_config_load("/definitely/not/here.json", nullptr, 0, &h.cfg) == CR_ERR_CONFIG);

  CHECK(cr_config_parse(nullptr, nullptr, 0, &h.cfg) == CR_ERR_CONFIG);
  CHECK(cr_config_parse("{}", nullptr, 0, nullptr) == CR_ERR_CONFIG);

  const std::string text = capi_config_text("parse");
  CHECK(cr_config_parse(text.c_str(), nullptr, 0, &h.cfg) == CR_OK);
  REQUIRE(h.cfg != nullptr);
}

TEST_CASE("overrides pass through the C boundary") {
  const std::string text = capi_config_text("override");
  const char* overrides[] = {"model.kind=mf", "model.factors=2"};
  ConfigHandle h;
  REQUIRE(cr_config_parse(text.c_str(), overrides, 2, &h.cfg) == CR_OK);

  const char* bad[] = {"bogus.path=1"};
  cr_config* rejected = nullptr;
  CHECK(cr_config_parse(text.c_str(), bad, 1, &rejected) == CR_ERR_CONFIG);
  CHECK(rejected == nullptr);
}

TEST_CASE("dataset statistics through the C API") {
  const std::string text = capi_config_text("stats");
  ConfigHandle h;
  REQUIRE(cr_config_parse(text.c_str(), nullptr, 0, &h.cfg) == CR_OK);

  cr_dataset_stats stats{};
  REQUIRE(cr_dataset_stats_from_config(h.cfg, &stats) == CR_OK);
  CHECK(stats.users == 15);
  CHECK(stats.items == 12);
  CHECK(stats.interactions == 150);
  CHECK(stats.distinct_contexts >= 1);
  CHECK(stats.density_pairs > 0.0);
  CHECK(stats.density_triples > 0.0);
  CHECK(stats.mean_rating > 1.0);
  CHECK(stats.mean_rating < 5.0);

  char* text_out = nullptr;
  REQUIRE(cr_ingest_check(h.cfg, &text_out) == CR_OK);
  REQUIRE(text_out != nullptr);
  CHECK(std::string(text_out).find("users 15") != std::string::npos);
  cr_string_free(text_out);
}

TEST_CASE("full pipeline through the C API") {
  const std::string text = capi_config_text("pipeline");
  ConfigHandle h;
  REQUIRE(cr_config_parse(text.c_str(), nullptr, 0, &h.cfg) == CR_OK);
  std::filesystem::remove(scratch_path("pipeline.report"));

  REQUIRE(cr_train(h.cfg, 0) == CR_OK);
  CHECK(std::filesystem::exists(scratch_path("pipeline.model")));
  REQUIRE(cr_evaluate(h.cfg, 0) == CR_OK);
  REQUIRE(cr_conformal_eval(h.cfg, 0) == CR_OK);

  // predict with and without an interval
  char* out = nullptr;
  REQUIRE(cr_predict(h.cfg, "u1", "i1", nullptr, nullptr, 0, 0.0, &out) == CR_OK);
  REQUIRE(out != nullptr);
  CHECK(std::string(out).find("prediction ") == 0);
  CHECK(std::string(out).find("interval") == std::string::npos);
  cr_string_free(out);
  out = nullptr;

  const char* keys[] = {"f0"};
  const char* values[] = {"v1"};
  REQUIRE(cr_predict(h.cfg, "u1", "i1", keys, values, 1, 0.1, &out) == CR_OK);
  CHECK(std::string(out).find("interval [") != std::string::npos);
  cr_string_free(out);
  out = nullptr;

  CHECK(cr_predict(h.cfg, "nobody", "i1", nullptr, nullptr, 0, 0.0, &out) == CR_ERR_DATA);
  CHECK(std::string(cr_last_error()).find("unknown user") != std::string::npos);
  CHECK(out == nullptr);

  // report merge over the file the pipeline just wrote
  const std::string report_path = scratch_path("pipeline.report");
  const char* files[] = {report_path.c_str()};
  REQUIRE(cr_report(files, 1, nullptr, &out) == CR_OK);
  CHECK(std::string(out).find("biasedmf") != std::string::npos);
  cr_string_free(out);
  out = nullptr;

  const std::string missing = scratch_path("not-there.report");
  const char* bad_files[] = {missing.c_str()};
  CHECK(cr_report(bad_files, 1, nullptr, &out) == CR_ERR_DATA);
}

TEST_CASE("trained models load and predict through the C API") {
  const std::string text = capi_config_text("model");
  ConfigHandle h;
  REQUIRE(cr_config_parse(text.c_str(), nullptr, 0, &h.cfg) == CR_OK);
  REQUIRE(cr_train(h.cfg, 0) == CR_OK);

  cr_model* model = nullptr;
  const std::string model_path = scratch_path("model.model");
  REQUIRE(cr_model_load(model_path.c_str(), &model) == CR_OK);
  REQUIRE(model != nullptr);
  CHECK(std::string(cr_model_kind(model)) == "biasedmf");

  double rating = 0.0;
  REQUIRE(cr_model_predict(model, "u0", "i0", nullptr, nullptr, 0, &rating) == CR_OK);
  CHECK(rating >= 1.0);  // clipped to the rating scale
  CHECK(rating <= 5.0);

  CHECK(cr_model_predict(model, "ghost", "i0", nullptr, nullptr, 0, &rating) == CR_ERR_DATA);
  cr_model_free(model);

  CHECK(cr_model_load(scratch_path("absent.model").c_str(), &model) == CR_ERR_DATA);
  CHECK(model == nullptr);
}

TEST_CASE("training failures surface as CR_ERR_TRAIN") {
  const char* overrides[] = {"model.optimizer=sgd", "model.learning_rate=1e6"};
  const std::string text = capi_config_text("diverge");
  ConfigHandle h;
  REQUIRE(cr_config_parse(text.c_str(), overrides, 2, &h.cfg) == CR_OK);
  CHECK(cr_train(h.cfg, 0) == CR_ERR_TRAIN);
  CHECK(std::string(cr_last_error()).find("diverged") != std::string::npos);
}

TEST_CASE("synth through the C API writes the configured csv") {
  const std::string csv = scratch_path("capi-synth.csv");
  const std::string override_path = "dataset.path=" + csv;
  const char* overrides[] = {override_path.c_str()};
  const std::string text = capi_config_text("synth");
  ConfigHandle h;
  REQUIRE(cr_config_parse(text.c_str(), overrides, 1, &h.cfg) == CR_OK);

  char* out = nullptr;
  REQUIRE(cr_synth(h.cfg, &out) == CR_OK);
  REQUIRE(out != nullptr);
  CHECK(std::string(out).find("150 interactions") != std::string::npos);
  cr_string_free(out);
  CHECK(std::filesystem::exists(csv));

  // a synth-less config cannot run the synth command
  ConfigHandle plain;
  const char* no_synth_overrides[] = {};
  const std::string no_synth = R"({
    "dataset": {"format": "generic", "path": ")" + csv + R"("}
  })";
  REQUIRE(cr_config_parse(no_synth.c_str(), no_synth_overrides, 0, &plain.cfg) == CR_OK);
  char* sink = nullptr;
  CHECK(cr_synth(plain.cfg, &sink) == CR_ERR_CONFIG);
}

TEST_CASE("free functions tolerate NULL") {
  cr_config_free(nullptr);
  cr_model_free(nullptr);
  cr_string_free(nullptr);
}
