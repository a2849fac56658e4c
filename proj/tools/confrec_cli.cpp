// confrec command-line front end. Talks to the core exclusively through the
// C API so it doubles as a smoke test of the shared library surface.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "confrec.h"

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  int verbosity = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("-c,--config", o.config_path, "experiment config (JSON)")->required();
  cmd->add_option("-s,--set", o.overrides, "override a config value, e.g. --set model.kind=mf");
  cmd->add_flag_function(
      "-v,--verbose", [&o](std::int64_t n) { o.verbosity = 1 + static_cast<int>(n); },
      "per-epoch training detail");
  cmd->add_flag_function(
      "-q,--quiet", [&o](std::int64_t) { o.verbosity = 0; }, "suppress progress output");
}

std::vector<const char*> c_ptrs(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

int fail(cr_status st) {
  std::fprintf(stderr, "error: %s\n", cr_last_error());
  return static_cast<int>(st);
}

cr_status open_config(const CommonOpts& o, cr_config** out) {
  const auto ov = c_ptrs(o.overrides);
  return cr_config_load(o.config_path.c_str(), ov.data(), ov.size(), out);
}

int print_and_free(char* text) {
  if (text) {
    std::fputs(text, stdout);
    cr_string_free(text);
  }
  return 0;
}

// splits "key=value" context arguments
bool split_kv(const std::string& kv, std::string& key, std::string& value) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) return false;
  key = kv.substr(0, eq);
  value = kv.substr(eq + 1);
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("confrec ") + cr_version() +
               " — context-aware recommendations with conformal intervals"};
  app.require_subcommand(1);

  CommonOpts ingest_o, train_o, eval_o, conf_o, pred_o, synth_o;

  auto* ingest = app.add_subcommand("ingest-check", "load the dataset and print its statistics");
  add_common(ingest, ingest_o);

  auto* train = app.add_subcommand("train", "train the configured model and save it");
  add_common(train, train_o);

  auto* evaluate = app.add_subcommand("evaluate", "score the saved model on the test split");
  add_common(evaluate, eval_o);

  auto* conformal =
      app.add_subcommand("conformal-eval", "calibrate intervals and report width/coverage");
  add_common(conformal, conf_o);

  auto* predict = app.add_subcommand("predict", "predict one (user, item, context) rating");
  add_common(predict, pred_o);
  std::string user_id, item_id;
  std::vector<std::string> ctx_args;
  double pred_eps = 0.0;
  predict->add_option("-u,--user", user_id, "user id")->required();
  predict->add_option("-i,--item", item_id, "item id")->required();
  predict->add_option("-x,--ctx", ctx_args, "context value, e.g. --ctx Time=Weekend");
  predict->add_option("-e,--epsilon", pred_eps, "also print the 1-epsilon interval");

  auto* report = app.add_subcommand("report", "merge report files into a comparison table");
  std::vector<std::string> report_files;
  std::string plot_path = "plot_data.tsv";
  report->add_option("files", report_files, "report files to merge")->required();
  report->add_option("-p,--plot-data", plot_path, "plot-data output path (default plot_data.tsv)");

  auto* synth = app.add_subcommand("synth", "generate the configured synthetic dataset as CSV");
  add_common(synth, synth_o);

  CLI11_PARSE(app, argc, argv);

  cr_status st = CR_OK;
  cr_config* cfg = nullptr;
  char* text = nullptr;

  if (ingest->parsed()) {
    if ((st = open_config(ingest_o, &cfg)) != CR_OK) return fail(st);
    st = cr_ingest_check(cfg, &text);
  } else if (train->parsed()) {
    if ((st = open_config(train_o, &cfg)) != CR_OK) return fail(st);
    st = cr_train(cfg, train_o.verbosity);
  } else if (evaluate->parsed()) {
    if ((st = open_config(eval_o, &cfg)) != CR_OK) return fail(st);
    st = cr_evaluate(cfg, eval_o.verbosity);
  } else if (conformal->parsed()) {
    if ((st = open_config(conf_o, &cfg)) != CR_OK) return fail(st);
    st = cr_conformal_eval(cfg, conf_o.verbosity);
  } else if (predict->parsed()) {
    if ((st = open_config(pred_o, &cfg)) != CR_OK) return fail(st);
    std::vector<std::string> keys, values;
    for (const auto& kv : ctx_args) {
      std::string k, v;
      if (!split_kv(kv, k, v)) {
        std::fprintf(stderr, "error: context argument '%s' is not key=value\n", kv.c_str());
        cr_config_free(cfg);
        return static_cast<int>(CR_ERR_CONFIG);
      }
      keys.push_back(k);
      values.push_back(v);
    }
    const auto kp = c_ptrs(keys);
    const auto vp = c_ptrs(values);
    st = cr_predict(cfg, user_id.c_str(), item_id.c_str(), kp.data(), vp.data(), kp.size(),
                    pred_eps, &text);
  } else if (report->parsed()) {
    const auto fp = c_ptrs(report_files);
    st = cr_report(fp.data(), fp.size(), plot_path.c_str(), &text);
  } else if (synth->parsed()) {
    if ((st = open_config(synth_o, &cfg)) != CR_OK) return fail(st);
    st = cr_synth(cfg, &text);
  }

  cr_config_free(cfg);
  if (st != CR_OK) {
    if (text) cr_string_free(text);
    return fail(st);
  }
  return print_and_free(text);
}
