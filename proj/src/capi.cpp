#include "confrec.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "core/conformal.hpp"
#include "core/harness.hpp"

namespace {

thread_local std::string g_last_error;

template <typename F>
cr_status wrap(F&& body) {
  try {
    body();
    return CR_OK;
  } catch (const confrec::ConfigError& e) {
    g_last_error = e.what();
    return CR_ERR_CONFIG;
  } catch (const confrec::DataError& e) {
    g_last_error = e.what();
    return CR_ERR_DATA;
  } catch (const confrec::TrainError& e) {
    g_last_error = e.what();
    return CR_ERR_TRAIN;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CR_ERR_INTERNAL;
  }
}

std::vector<std::string> to_strings(const char* const* arr, size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.emplace_back(arr[i] ? arr[i] : "");
  return out;
}

confrec::RawContext to_context(const char* const* keys, const char* const* values, size_t n) {
  confrec::RawContext ctx;
  for (size_t i = 0; i < n; ++i)
    ctx[keys[i] ? keys[i] : ""] = values[i] ? values[i] : "";
  return ctx;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

confrec::Logger make_logger(const confrec::ExperimentConfig& cfg, int verbosity) {
  confrec::Logger log;
  log.path = cfg.output.log_path;
  log.verbosity = verbosity;
  return log;
}

}  // namespace

struct cr_config {
  confrec::ExperimentConfig cfg;
};

struct cr_model {
  confrec::TrainedModel model;
  std::string kind_name;
};

extern "C" {

const char* cr_version(void) { return "0.1.0"; }

const char* cr_last_error(void) { return g_last_error.c_str(); }

cr_status cr_config_load(const char* path, const char* const* overrides, size_t n_overrides,
                         cr_config** out) {
  if (out) *out = nullptr;
  return wrap([&] {
    if (!path || !out) throw confrec::ConfigError("cr_config_load: null argument");
    auto cfg = std::make_unique<cr_config>();
    cfg->cfg = confrec::load_config(path, to_strings(overrides, n_overrides));
    *out = cfg.release();
  });
}

cr_status cr_config_parse(const char* json_text, const char* const* overrides, size_t n_overrides,
                          cr_config** out) {
  if (out) *out = nullptr;
  return wrap([&] {
    if (!json_text || !out) throw confrec::ConfigError("cr_config_parse: null argument");
    auto cfg = std::make_unique<cr_config>();
    cfg->cfg = confrec::parse_config_text(json_text, to_strings(overrides, n_overrides));
    *out = cfg.release();
  });
}

void cr_config_free(cr_config* cfg) { delete cfg; }

cr_status cr_dataset_stats_from_config(const cr_config* cfg, cr_dataset_stats* out) {
  return wrap([&] {
    if (!cfg || !out) throw confrec::ConfigError("cr_dataset_stats_from_config: null argument");
    const confrec::RatingsDataset ds = confrec::load_dataset(cfg->cfg);
    out->users = ds.num_users();
    out->items = ds.num_items();
    out->interactions = static_cast<long long>(ds.size());
    out->distinct_contexts = ds.distinct_contexts();
    out->density_pairs = ds.density_pairs();
    out->density_triples = ds.density_triples();
    out->mean_rating = ds.global_mean_rating();
  });
}

cr_status cr_train(const cr_config* cfg, int verbosity) {
  return wrap([&] {
    if (!cfg) throw confrec::ConfigError("cr_train: null config");
    confrec::cmd_train(cfg->cfg, make_logger(cfg->cfg, verbosity));
  });
}

cr_status cr_evaluate(const cr_config* cfg, int verbosity) {
  return wrap([&] {
    if (!cfg) throw confrec::ConfigError("cr_evaluate: null config");
    confrec::cmd_evaluate(cfg->cfg, make_logger(cfg->cfg, verbosity));
  });
}

cr_status cr_conformal_eval(const cr_config* cfg, int verbosity) {
  return wrap([&] {
    if (!cfg) throw confrec::ConfigError("cr_conformal_eval: null config");
    confrec::cmd_conformal_eval(cfg->cfg, make_logger(cfg->cfg, verbosity));
  });
}

cr_status cr_ingest_check(const cr_config* cfg, char** out_text) {
  if (out_text) *out_text = nullptr;
  return wrap([&] {
    if (!cfg || !out_text) throw confrec::ConfigError("cr_ingest_check: null argument");
    std::ostringstream os;
    confrec::cmd_ingest_check(cfg->cfg, os);
    *out_text = dup_string(os.str());
  });
}

cr_status cr_predict(const cr_config* cfg, const char* user_id, const char* item_id,
                     const char* const* context_keys, const char* const* context_values,
                     size_t n_context, double epsilon, char** out_text) {
  if (out_text) *out_text = nullptr;
  return wrap([&] {
    if (!cfg || !user_id || !item_id || !out_text)
      throw confrec::ConfigError("cr_predict: null argument");
    std::ostringstream os;
    std::optional<double> eps;
    if (epsilon > 0.0) eps = epsilon;
    confrec::cmd_predict(cfg->cfg, user_id, item_id,
                         to_context(context_keys, context_values, n_context), eps, os);
    *out_text = dup_string(os.str());
  });
}

cr_status cr_report(const char* const* report_files, size_t n_files, const char* plot_path,
                    char** out_text) {
  if (out_text) *out_text = nullptr;
  return wrap([&] {
    if (!report_files || !out_text) throw confrec::ConfigError("cr_report: null argument");
    std::ostringstream os;
    confrec::cmd_report(to_strings(report_files, n_files), plot_path ? plot_path : "", os);
    *out_text = dup_string(os.str());
  });
}

cr_status cr_synth(const cr_config* cfg, char** out_text) {
  if (out_text) *out_text = nullptr;
  return wrap([&] {
    if (!cfg || !out_text) throw confrec::ConfigError("cr_synth: null argument");
    std::ostringstream os;
    confrec::cmd_synth(cfg->cfg, os);
    *out_text = dup_string(os.str());
  });
}

cr_status cr_model_load(const char* path, cr_model** out) {
  if (out) *out = nullptr;
  return wrap([&] {
    if (!path || !out) throw confrec::ConfigError("cr_model_load: null argument");
    auto m = std::make_unique<cr_model>();
    m->model = confrec::load_model(path);
    m->kind_name = confrec::model_kind_name(m->model.kind);
    *out = m.release();
  });
}

void cr_model_free(cr_model* model) { delete model; }

const char* cr_model_kind(const cr_model* model) {
  return model ? model->kind_name.c_str() : "";
}

cr_status cr_model_predict(const cr_model* model, const char* user_id, const char* item_id,
                           const char* const* context_keys, const char* const* context_values,
                           size_t n_context, double* out_rating) {
  return wrap([&] {
    if (!model || !user_id || !item_id || !out_rating)
      throw confrec::ConfigError("cr_model_predict: null argument");
    const auto& m = model->model;
    const int u = m.users.lookup(user_id);
    if (u < 0) throw confrec::DataError(std::string("unknown user '") + user_id + "'");
    const int i = m.items.lookup(item_id);
    if (i < 0) throw confrec::DataError(std::string("unknown item '") + item_id + "'");
    const confrec::Vec ctx = confrec::encode_context(
        m.schema, to_context(context_keys, context_values, n_context));
    *out_rating = m.predict_clipped(u, i, ctx);
  });
}

void cr_string_free(char* s) { std::free(s); }

}  // extern "C"
