#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <random>
#include <sstream>

#include "core/harness.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace confrec;
using testsupport::near;
using testsupport::read_file;
using testsupport::scratch_path;
using testsupport::write_file;

namespace {

std::string flow_config_text(const std::string& tag) {
  return R"({
    "seed": 5,
    "dataset": {"format": "generic", "name": "flow"},
    "synth": {"n_users": 20, "n_items": 15, "n_interactions": 250, "noise_sd": 0.2,
              "n_context_features": 1, "context_cardinality": 2},
    "model": {"kind": "biasedmf", "factors": 4, "epochs": 10},
    "conformal": {"epsilons": [0.1, 0.5]},
    "output": {"model": ")" +
         scratch_path(tag + ".model") + R"(", "report": ")" + scratch_path(tag + ".report") +
         R"(", "log": ")" + scratch_path(tag + ".log") + R"("}
  })";
}

}  // namespace

TEST_CASE("config defaults and seed propagation") {
  ExperimentConfig c = parse_config_text(
      R"({"synth": {"n_users": 5, "n_items": 5, "n_interactions": 20}})", {});
  CHECK(c.seed == 42);
  CHECK(c.split.seed == 42);  // master seed drives the split
  CHECK(c.split.train_fraction == 0.7);
  CHECK(c.model.kind == ModelKind::biasedmf);
  CHECK(c.conformal.mode == NonconformityMode::residual);
  CHECK(c.conformal.epsilons == std::vector<double>{0.1, 0.05, 0.01});
  CHECK(c.conformal.window == 0);
  CHECK(c.has_synth);
  CHECK(c.synth.seed == 42);  // synth seed defaults to the master seed
  CHECK(c.output.model_path == "model.bin");
  CHECK(c.hash != 0);

  ExperimentConfig seeded = parse_config_text(
      R"({"seed": 9, "synth": {"n_users": 5, "n_items": 5, "n_interactions": 20}})", {});
  CHECK(seeded.split.seed == 9);
  CHECK(seeded.synth.seed == 9);

  ExperimentConfig own_seed = parse_config_text(
      R"({"seed": 9, "synth": {"n_users": 5, "n_items": 5, "n_interactions": 20, "seed": 3}})",
      {});
  CHECK(own_seed.synth.seed == 3);
}

TEST_CASE("config rejects unknown keys everywhere") {
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"sede": 1})", {}), doctest::Contains("sede"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config_text(R"({"dataset": {"paht": "x"}, "synth": {"n_interactions": 5}})", {}),
      doctest::Contains("paht"), ConfigError);
  // per-kind whitelists: knn's k is not a biasedmf key
  CHECK_THROWS_WITH_AS(parse_config_text(
                           R"({"model": {"kind": "biasedmf", "k": 5},
                               "synth": {"n_users": 5, "n_items": 5, "n_interactions": 20}})",
                           {}),
                       doctest::Contains("'k'"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"conformal": {"window": 10}})", {}), ConfigError);
}

TEST_CASE("config validation failures") {
  CHECK_THROWS_AS(parse_config_text(R"({})", {}), ConfigError);  // no path, no synth
  CHECK_THROWS_AS(parse_config_text(
                      R"({"conformal": {"epsilons": [1.5]},
                          "synth": {"n_users": 5, "n_items": 5, "n_interactions": 20}})",
                      {}),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text(
                      R"({"dataset": {"scale": {"min": 5, "max": 1}},
                          "synth": {"n_users": 5, "n_items": 5, "n_interactions": 20}})",
                      {}),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text(
                      R"({"conformal": {"window": -3},
                          "synth": {"n_users": 5, "n_items": 5, "n_interactions": 20}})",
                      {}),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text("{ not json", {}), ConfigError);
  CHECK_THROWS_AS(load_config(scratch_path("missing-config.json"), {}), ConfigError);
}

TEST_CASE("overrides walk dotted paths and parse values as json") {
  const std::string base =
      R"({"synth": {"n_users": 5, "n_items": 5, "n_interactions": 20}})";
  ExperimentConfig c = parse_config_text(
      base, {"model.kind=mf", "model.factors=7", "split.train=0.8", "split.cal=0.1",
             "split.test=0.1", "conformal.epsilons=[0.2]", "dataset.name=renamed",
             "model.learning_rate=0.5"});
  CHECK(c.model.kind == ModelKind::mf);
  CHECK(c.model.factorized.factors == 7);
  CHECK(c.split.train_fraction == 0.8);
  CHECK(c.conformal.epsilons == std::vector<double>{0.2});
  CHECK(c.dataset.load.name == "renamed");  // unquoted string falls back to a string value
  CHECK(c.model.factorized.learning_rate == 0.5);

  // overrides feed the hash, so distinct overrides give distinct hashes
  ExperimentConfig plain = parse_config_text(base, {});
  ExperimentConfig same = parse_config_text(base, {});
  CHECK(plain.hash == same.hash);
  CHECK(plain.hash != c.hash);

  CHECK_THROWS_AS(parse_config_text(base, {"nonsense.path=1"}), ConfigError);
  CHECK_THROWS_AS(parse_config_text(base, {"no-equals-sign"}), ConfigError);
}

TEST_CASE("autorec model kinds parse their own hyperparameters") {
  const std::string synth = R"("synth": {"n_users": 5, "n_items": 5, "n_interactions": 20})";
  ExperimentConfig u = parse_config_text(
      R"({"model": {"kind": "autorec_u", "hidden": [6, 3], "dense_refeeding": true}, )" + synth +
          "}",
      {});
  CHECK(u.model.autorec.hidden == std::vector<int>{6, 3});
  CHECK(u.model.autorec.dense_refeeding);
  CHECK_FALSE(u.model.autorec.item_based);

  ExperimentConfig i =
      parse_config_text(R"({"model": {"kind": "autorec_i"}, )" + synth + "}", {});
  CHECK(i.model.autorec.item_based);

  // deep_ae defaults to the wider stack with refeeding on
  ExperimentConfig d = parse_config_text(R"({"model": {"kind": "deep_ae"}, )" + synth + "}", {});
  CHECK(d.model.autorec.hidden == std::vector<int>{128, 64, 16});
  CHECK(d.model.autorec.dense_refeeding);

  ExperimentConfig p = parse_config_text(
      R"({"model": {"kind": "proposed", "d_user": 4, "ae_hidden": [10], "bottleneck": 5}, )" +
          synth + "}",
      {});
  CHECK(p.model.contextual.d_user == 4);
  CHECK(p.model.contextual.ae_hidden == std::vector<int>{10});
  CHECK(p.model.contextual.bottleneck == 5);
}

TEST_CASE("report files append, parse and merge") {
  const std::string r1 = scratch_path("r1.report");
  std::filesystem::remove(r1);

  Report a;
  a.seed = 42;
  a.config_hash = 0xabc;
  a.accuracy.push_back({"ds", "mf", 0.5, 0.7});
  append_report(a, r1);
  Report b;
  b.seed = 42;
  b.config_hash = 0xabc;
  b.conformal.push_back({"ds", "mf", "residual", 0.1, 1.25, 0.91});
  b.conformal.push_back({"ds", "mf", "residual", 0.05, 1.5, 0.96});
  append_report(b, r1);

  const std::string text = read_file(r1);
  CHECK(text.rfind("confrec-report v1\n", 0) == 0);  // header written exactly once
  CHECK(text.find("confrec-report", 1) == std::string::npos);

  Report back = read_report(r1);
  CHECK(back.seed == 42);
  CHECK(back.config_hash == 0xabc);
  REQUIRE(back.accuracy.size() == 1);
  REQUIRE(back.conformal.size() == 2);
  CHECK(back.accuracy[0].model == "mf");
  CHECK(back.conformal[0].epsilon == 0.1);
  CHECK(back.conformal[1].ecp == 0.96);

  Report c;
  c.seed = 42;
  c.accuracy.push_back({"a-ds", "zmodel", 0.1, 0.2});
  const std::string r2 = scratch_path("r2.report");
  std::filesystem::remove(r2);
  append_report(c, r2);

  Report merged = merge_reports({read_report(r1), read_report(r2)});
  REQUIRE(merged.accuracy.size() == 2);
  CHECK(merged.accuracy[0].dataset == "a-ds");  // sorted by (dataset, model)
  REQUIRE(merged.conformal.size() == 2);
  CHECK(merged.conformal[0].epsilon == 0.05);  // then by epsilon

  const std::string table = format_table(merged);
  CHECK(table.find("dataset") != std::string::npos);
  CHECK(table.find("zmodel") != std::string::npos);
  CHECK(table.find("residual") != std::string::npos);

  const std::string plot = scratch_path("plot.tsv");
  write_plot_data(merged, plot);
  const std::string tsv = read_file(plot);
  CHECK(tsv.find("dataset\tmodel\tmetric\tvalue\n") == 0);
  CHECK(tsv.find("ds\tmf\twidth:residual:0.1\t1.25") != std::string::npos);
  CHECK(tsv.find("a-ds\tzmodel\tmae\t0.1") != std::string::npos);
}

TEST_CASE("report writing is byte deterministic") {
  Report r;
  r.seed = 7;
  r.config_hash = 0x123456789abcdef0ULL;
  r.accuracy.push_back({"d", "m", 1.0 / 3.0, 2.0 / 3.0});
  r.conformal.push_back({"d", "m", "residual", 0.1, 0.123456789012345, 0.9});

  const std::string p1 = scratch_path("det1.report");
  const std::string p2 = scratch_path("det2.report");
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
  append_report(r, p1);
  append_report(r, p2);
  CHECK(read_file(p1) == read_file(p2));
}

TEST_CASE("report parser rejects malformed files") {
  const std::string bad1 = scratch_path("bad1.report");
  write_file(bad1, "not-a-report\n");
  CHECK_THROWS_WITH_AS(read_report(bad1), doctest::Contains("bad1"), DataError);

  const std::string bad2 = scratch_path("bad2.report");
  write_file(bad2, "confrec-report v1\nunknown-tag 1 2 3\n");
  CHECK_THROWS_AS(read_report(bad2), DataError);

  const std::string bad3 = scratch_path("bad3.report");
  write_file(bad3, "confrec-report v1\naccuracy ds m notanumber 2\n");
  CHECK_THROWS_AS(read_report(bad3), DataError);

  CHECK_THROWS_AS(read_report(scratch_path("absent.report")), DataError);
}

TEST_CASE("models save and load with bit-exact predictions") {
  const std::vector<std::vector<std::string>> variants = {
      {"model.kind=global_mean"},
      {"model.kind=itemknn", "model.k=5", "model.shrink=2"},
      {"model.kind=userknn", "model.k=5"},
      {"model.kind=mf", "model.factors=4", "model.epochs=5"},
      {"model.kind=biasedmf", "model.factors=4", "model.epochs=5"},
      {"model.kind=camfc", "model.factors=4", "model.epochs=5"},
      {"model.kind=autorec_u", "model.hidden=[6]", "model.epochs=3"},
      {"model.kind=autorec_i", "model.hidden=[6]", "model.epochs=3"},
      {"model.kind=deep_ae", "model.hidden=[8,4]", "model.epochs=2"},
      {"model.kind=neucmf0i", "model.d_user=3", "model.d_item=3", "model.d_context=2",
       "model.d_ui=3", "model.head_hidden=[4]", "model.epochs=2"},
      {"model.kind=proposed", "model.d_user=3", "model.d_item=3", "model.d_context=2",
       "model.bottleneck=3", "model.ae_hidden=[6]", "model.pretrain_epochs=1",
       "model.head_hidden=[4]", "model.epochs=2"},
  };

  // base config with an empty model section so every kind's whitelist applies
  const std::string base = R"({
    "seed": 5,
    "dataset": {"format": "generic", "name": "flow"},
    "synth": {"n_users": 20, "n_items": 15, "n_interactions": 250, "noise_sd": 0.2,
              "n_context_features": 1, "context_cardinality": 2}
  })";
  for (const auto& overrides : variants) {
    ExperimentConfig c = parse_config_text(base, overrides);
    LoadedData data = load_and_split(c);
    TrainedModel m = train_model(c, data.full, data.parts, c.seed);

    const std::string path = scratch_path("roundtrip.model");
    save_model(m, path);
    TrainedModel back = load_model(path);

    CHECK(back.kind == m.kind);
    CHECK(back.dataset_name == m.dataset_name);
    CHECK(back.users.ids == m.users.ids);
    CHECK(back.items.ids == m.items.ids);
    CHECK(back.schema.dimension() == m.schema.dimension());
    CHECK(back.norm == m.norm);
    CHECK(back.scale.min == m.scale.min);

    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(data.full.size()) - 1);
    for (int t = 0; t < 30; ++t) {
      const Interaction& x = data.full.interactions[static_cast<std::size_t>(pick(rng))];
      const double orig = m.predict(x.user, x.item, x.context);
      const double loaded = back.predict(x.user, x.item, x.context);
      CHECK(orig == loaded);  // bit-exact, not approximately equal
    }
  }
}

TEST_CASE("model loader rejects damaged files") {
  const std::string path = scratch_path("damaged.model");
  write_file(path, "definitely not msgpack");
  CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("damaged.model"), DataError);
  CHECK_THROWS_AS(load_model(scratch_path("missing.model")), DataError);
}

TEST_CASE("train, evaluate and conformal-eval round trip through files") {
  ExperimentConfig c = parse_config_text(flow_config_text("flow"), {});
  std::filesystem::remove(c.output.report_path);
  std::filesystem::remove(c.output.log_path);
  Logger log{c.output.log_path, 0};

  cmd_train(c, log);
  CHECK(std::filesystem::exists(c.output.model_path));

  cmd_evaluate(c, log);
  cmd_conformal_eval(c, log);
  Report r = read_report(c.output.report_path);
  REQUIRE(r.accuracy.size() == 1);
  CHECK(r.accuracy[0].dataset == "flow");
  CHECK(r.accuracy[0].model == "biasedmf");
  CHECK(r.accuracy[0].mae > 0.0);
  REQUIRE(r.conformal.size() == 2);
  CHECK(r.conformal[0].epsilon == 0.1);
  CHECK(r.conformal[0].width > 0.0);
  CHECK(r.conformal[0].ecp >= 0.0);
  CHECK(r.conformal[0].ecp <= 1.0);

  // the log captured progress lines; reports never carry wall-clock times
  const std::string logged = read_file(c.output.log_path);
  CHECK(logged.find("best_epoch") != std::string::npos);
  CHECK(logged.find("wall_ms") != std::string::npos);
  CHECK(read_file(c.output.report_path).find("wall_ms") == std::string::npos);
}

TEST_CASE("repeated runs emit byte-identical reports") {
  ExperimentConfig c = parse_config_text(flow_config_text("repeat"), {});
  Logger log{"", 0};

  std::filesystem::remove(c.output.report_path);
  cmd_train(c, log);
  cmd_evaluate(c, log);
  cmd_conformal_eval(c, log);
  const std::string first = read_file(c.output.report_path);

  std::filesystem::remove(c.output.report_path);
  std::filesystem::remove(c.output.model_path);
  cmd_train(c, log);
  cmd_evaluate(c, log);
  cmd_conformal_eval(c, log);
  const std::string second = read_file(c.output.report_path);

  CHECK(first == second);
  CHECK_FALSE(first.empty());
}

TEST_CASE("evaluate rejects a model trained on different data") {
  ExperimentConfig a = parse_config_text(flow_config_text("mismatch"), {});
  Logger log{"", 0};
  cmd_train(a, log);

  // same model file, dataset with a different user population
  ExperimentConfig b = parse_config_text(flow_config_text("mismatch"), {"synth.n_users=21"});
  CHECK_THROWS_AS(cmd_evaluate(b, log), DataError);
}

TEST_CASE("evaluate requires a previously trained model file") {
  ExperimentConfig c = parse_config_text(flow_config_text("nomodel"), {});
  std::filesystem::remove(c.output.model_path);
  Logger log{"", 0};
  CHECK_THROWS_AS(cmd_evaluate(c, log), DataError);
}

TEST_CASE("ingest-check prints dataset statistics") {
  ExperimentConfig c = parse_config_text(flow_config_text("ingest"), {});
  std::ostringstream out;
  cmd_ingest_check(c, out);
  const std::string s = out.str();
  CHECK(s.find("dataset flow\n") != std::string::npos);
  CHECK(s.find("users 20\n") != std::string::npos);
  CHECK(s.find("items 15\n") != std::string::npos);
  CHECK(s.find("interactions 250\n") != std::string::npos);
  CHECK(s.find("density_pairs") != std::string::npos);
  CHECK(s.find("density_triples") != std::string::npos);
  CHECK(s.find("mean_rating") != std::string::npos);
  CHECK(s.find("scale 1 5") != std::string::npos);
}

TEST_CASE("predict resolves ids and optionally attaches an interval") {
  ExperimentConfig c = parse_config_text(flow_config_text("predict"), {});
  Logger log{"", 0};
  cmd_train(c, log);

  std::ostringstream out;
  cmd_predict(c, "u3", "i5", {{"f0", "v1"}}, std::nullopt, out);
  CHECK(out.str().find("prediction ") == 0);
  CHECK(out.str().find("interval") == std::string::npos);

  std::ostringstream with_iv;
  cmd_predict(c, "u3", "i5", {{"f0", "v1"}}, 0.1, with_iv);
  CHECK(with_iv.str().find("prediction ") == 0);
  CHECK(with_iv.str().find("interval [") != std::string::npos);
  CHECK(with_iv.str().find("epsilon 0.1") != std::string::npos);

  std::ostringstream sink;
  CHECK_THROWS_WITH_AS(cmd_predict(c, "nobody", "i5", {}, std::nullopt, sink),
                       doctest::Contains("unknown user"), DataError);
  CHECK_THROWS_WITH_AS(cmd_predict(c, "u3", "widget", {}, std::nullopt, sink),
                       doctest::Contains("unknown item"), DataError);
  CHECK_THROWS_AS(cmd_predict(c, "u3", "i5", {{"bogus", "x"}}, std::nullopt, sink), DataError);
}

TEST_CASE("synth command writes a loadable csv") {
  ExperimentConfig c = parse_config_text(flow_config_text("synthcmd"),
                                         {"dataset.path=" + scratch_path("synthcmd.csv")});
  std::ostringstream out;
  cmd_synth(c, out);
  CHECK(out.str().find("250 interactions") != std::string::npos);
  CHECK(out.str().find("feature f0 nominal v0 v1") != std::string::npos);
  CHECK(std::filesystem::exists(scratch_path("synthcmd.csv")));

  // the written file round-trips through the normal loading path
  LoadedData data = load_and_split(c);
  CHECK(data.full.size() == 250);
  CHECK(data.full.num_users() == 20);

  ExperimentConfig no_path = parse_config_text(flow_config_text("synthcmd2"), {});
  std::ostringstream sink;
  CHECK_THROWS_AS(cmd_synth(no_path, sink), ConfigError);
}

TEST_CASE("report command merges files and writes plot data") {
  ExperimentConfig c = parse_config_text(flow_config_text("reportcmd"), {});
  Logger log{"", 0};
  std::filesystem::remove(c.output.report_path);
  cmd_train(c, log);
  cmd_evaluate(c, log);

  std::ostringstream out;
  const std::string plot = scratch_path("reportcmd-plot.tsv");
  cmd_report({c.output.report_path}, plot, out);
  CHECK(out.str().find("biasedmf") != std::string::npos);
  CHECK(read_file(plot).find("flow\tbiasedmf\tmae\t") != std::string::npos);

  CHECK_THROWS_AS(cmd_report({scratch_path("nope.report")}, "", out), DataError);
}

TEST_CASE("logger writes to its file regardless of verbosity") {
  const std::string path = scratch_path("logger.log");
  std::filesystem::remove(path);
  Logger quiet{path, 0};
  quiet.info("info-line");
  quiet.debug("debug-line");
  const std::string text = read_file(path);
  CHECK(text.find("info-line") != std::string::npos);
  CHECK(text.find("debug-line") != std::string::npos);
}

TEST_CASE("synth dataset honors an explicit display name") {
  ExperimentConfig c = parse_config_text(flow_config_text("named"), {});
  RatingsDataset ds = load_dataset(c);
  CHECK(ds.name == "flow");  // dataset.name wins over the generated default

  ExperimentConfig unnamed = parse_config_text(
      R"({"synth": {"n_users": 5, "n_items": 5, "n_interactions": 20}})", {});
  CHECK(load_dataset(unnamed).name == "synth");
}
