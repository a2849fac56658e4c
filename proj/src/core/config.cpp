#include "config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace confrec {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("config: " + msg); }

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) bad(where + ": unknown key '" + it.key() + "'");
  }
}

const json& section(const json& root, const char* name) {
  static const json empty = json::object();
  if (!root.contains(name)) return empty;
  const json& s = root.at(name);
  if (!s.is_object()) bad(std::string(name) + " must be an object");
  return s;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key + ": wrong value type");
  }
}

std::string get_str(const json& obj, const char* key, const std::string& fallback,
                    const std::string& where) {
  return get_or<std::string>(obj, key, fallback, where);
}

OptimizerKind optimizer_from(const json& obj, OptimizerKind fallback, const std::string& where) {
  const std::string s =
      get_str(obj, "optimizer", fallback == OptimizerKind::adam ? "adam" : "sgd", where);
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  bad(where + ".optimizer: expected 'adam' or 'sgd', got '" + s + "'");
}

RatingScale scale_from(const json& obj, RatingScale fallback, const std::string& where) {
  if (!obj.contains("scale")) return fallback;
  const json& s = obj.at("scale");
  if (!s.is_object()) bad(where + ".scale must be an object with min/max");
  check_keys(s, where + ".scale", {"min", "max"});
  RatingScale out;
  out.min = get_or<double>(s, "min", fallback.min, where + ".scale");
  out.max = get_or<double>(s, "max", fallback.max, where + ".scale");
  return out;
}

ContextSchema schema_from(const json& arr, const std::string& where) {
  if (!arr.is_array()) bad(where + " must be an array of feature objects");
  ContextSchema schema;
  for (const json& fj : arr) {
    if (!fj.is_object()) bad(where + ": feature entries must be objects");
    check_keys(fj, where + " feature", {"name", "kind", "domain", "min", "max"});
    ContextFeature f;
    f.name = get_str(fj, "name", "", where);
    if (f.name.empty()) bad(where + ": feature without a name");
    f.kind = feature_kind_from_name(get_str(fj, "kind", "nominal", where));
    f.domain = get_or<std::vector<std::string>>(fj, "domain", {}, where);
    f.min = get_or<double>(fj, "min", 0.0, where);
    f.max = get_or<double>(fj, "max", 1.0, where);
    schema.features.push_back(std::move(f));
  }
  schema.validate();
  return schema;
}

void parse_dataset(const json& root, ExperimentConfig& c) {
  const json& d = section(root, "dataset");
  check_keys(d, "dataset",
             {"path", "format", "name", "scale", "norm", "missing_marker", "schema", "columns"});
  c.dataset.format = dataset_format_from_name(get_str(d, "format", "generic", "dataset"));
  c.dataset.load = default_load_options(c.dataset.format);
  c.dataset.schema = default_schema(c.dataset.format);
  c.dataset.path = get_str(d, "path", "", "dataset");
  c.dataset.load.scale = scale_from(d, c.dataset.load.scale, "dataset");
  if (d.contains("norm"))
    c.dataset.load.norm = rating_norm_from_name(get_str(d, "norm", "minmax", "dataset"));
  c.dataset.load.missing_marker =
      get_str(d, "missing_marker", c.dataset.load.missing_marker, "dataset");
  c.dataset.load.name = get_str(d, "name", c.dataset.load.name, "dataset");
  if (d.contains("schema")) c.dataset.schema = schema_from(d.at("schema"), "dataset.schema");
  if (d.contains("columns")) {
    const json& cols = d.at("columns");
    if (!cols.is_object()) bad("dataset.columns must be an object");
    check_keys(cols, "dataset.columns", {"user", "item", "rating", "features"});
    c.dataset.load.columns.user = get_str(cols, "user", c.dataset.load.columns.user, "columns");
    c.dataset.load.columns.item = get_str(cols, "item", c.dataset.load.columns.item, "columns");
    c.dataset.load.columns.rating =
        get_str(cols, "rating", c.dataset.load.columns.rating, "columns");
    if (cols.contains("features")) {
      const json& feats = cols.at("features");
      if (!feats.is_object()) bad("dataset.columns.features must map feature -> column");
      for (auto it = feats.begin(); it != feats.end(); ++it) {
        if (!it.value().is_string()) bad("dataset.columns.features values must be strings");
        c.dataset.load.columns.features[it.key()] = it.value().get<std::string>();
      }
    }
  }
}

void parse_split(const json& root, ExperimentConfig& c) {
  const json& s = section(root, "split");
  check_keys(s, "split", {"train", "cal", "test"});
  c.split.train_fraction = get_or<double>(s, "train", c.split.train_fraction, "split");
  c.split.cal_fraction = get_or<double>(s, "cal", c.split.cal_fraction, "split");
  c.split.test_fraction = get_or<double>(s, "test", c.split.test_fraction, "split");
  c.split.seed = c.seed;
}

void parse_model(const json& root, ExperimentConfig& c) {
  const json& m = section(root, "model");
  c.model.kind = model_kind_from_name(get_str(m, "kind", "biasedmf", "model"));
  switch (c.model.kind) {
    case ModelKind::global_mean: check_keys(m, "model", {"kind"}); break;
    case ModelKind::mf:
    case ModelKind::biasedmf:
    case ModelKind::camfc: {
      check_keys(m, "model",
                 {"kind", "factors", "learning_rate", "lambda", "epochs", "batch_size", "patience",
                  "optimizer"});
      auto& hp = c.model.factorized;
      hp.factors = get_or<int>(m, "factors", hp.factors, "model");
      hp.learning_rate = get_or<double>(m, "learning_rate", hp.learning_rate, "model");
      hp.lambda = get_or<double>(m, "lambda", hp.lambda, "model");
      hp.epochs = get_or<int>(m, "epochs", hp.epochs, "model");
      hp.batch_size = get_or<int>(m, "batch_size", hp.batch_size, "model");
      hp.patience = get_or<int>(m, "patience", hp.patience, "model");
      hp.optimizer = optimizer_from(m, hp.optimizer, "model");
      break;
    }
    case ModelKind::itemknn:
    case ModelKind::userknn:
      check_keys(m, "model", {"kind", "k", "shrink"});
      c.model.knn_k = get_or<int>(m, "k", c.model.knn_k, "model");
      c.model.knn_shrink = get_or<double>(m, "shrink", c.model.knn_shrink, "model");
      break;
    case ModelKind::autorec_u:
    case ModelKind::autorec_i:
    case ModelKind::deep_ae: {
      check_keys(m, "model",
                 {"kind", "hidden", "learning_rate", "lambda", "epochs", "patience",
                  "dense_refeeding", "optimizer"});
      auto& hp = c.model.autorec;
      hp.item_based = c.model.kind == ModelKind::autorec_i;
      if (c.model.kind == ModelKind::deep_ae) {
        hp.hidden = {128, 64, 16};
        hp.dense_refeeding = true;
      }
      hp.hidden = get_or<std::vector<int>>(m, "hidden", hp.hidden, "model");
      hp.learning_rate = get_or<double>(m, "learning_rate", hp.learning_rate, "model");
      hp.lambda = get_or<double>(m, "lambda", hp.lambda, "model");
      hp.epochs = get_or<int>(m, "epochs", hp.epochs, "model");
      hp.patience = get_or<int>(m, "patience", hp.patience, "model");
      hp.dense_refeeding = get_or<bool>(m, "dense_refeeding", hp.dense_refeeding, "model");
      hp.optimizer = optimizer_from(m, hp.optimizer, "model");
      break;
    }
    case ModelKind::neucmf0i:
    case ModelKind::proposed: {
      check_keys(m, "model",
                 {"kind", "d_user", "d_item", "d_context", "d_ui", "bottleneck", "ae_hidden",
                  "pretrain_epochs", "pretrain_learning_rate", "pretrain_refeeding", "head_hidden",
                  "epochs", "patience", "batch_size", "learning_rate", "lambda", "ui_branch",
                  "optimizer"});
      auto& hp = c.model.contextual;
      hp.d_user = get_or<int>(m, "d_user", hp.d_user, "model");
      hp.d_item = get_or<int>(m, "d_item", hp.d_item, "model");
      hp.d_context = get_or<int>(m, "d_context", hp.d_context, "model");
      hp.d_ui = get_or<int>(m, "d_ui", hp.d_ui, "model");
      hp.bottleneck = get_or<int>(m, "bottleneck", hp.bottleneck, "model");
      hp.ae_hidden = get_or<std::vector<int>>(m, "ae_hidden", hp.ae_hidden, "model");
      hp.pretrain_epochs = get_or<int>(m, "pretrain_epochs", hp.pretrain_epochs, "model");
      hp.pretrain_learning_rate =
          get_or<double>(m, "pretrain_learning_rate", hp.pretrain_learning_rate, "model");
      hp.pretrain_refeeding = get_or<bool>(m, "pretrain_refeeding", hp.pretrain_refeeding, "model");
      hp.head_hidden = get_or<std::vector<int>>(m, "head_hidden", hp.head_hidden, "model");
      hp.epochs = get_or<int>(m, "epochs", hp.epochs, "model");
      hp.patience = get_or<int>(m, "patience", hp.patience, "model");
      hp.batch_size = get_or<int>(m, "batch_size", hp.batch_size, "model");
      hp.learning_rate = get_or<double>(m, "learning_rate", hp.learning_rate, "model");
      hp.lambda = get_or<double>(m, "lambda", hp.lambda, "model");
      hp.ui_branch = get_or<bool>(m, "ui_branch", hp.ui_branch, "model");
      hp.optimizer = optimizer_from(m, hp.optimizer, "model");
      break;
    }
  }
}

void parse_conformal(const json& root, ExperimentConfig& c) {
  const json& s = section(root, "conformal");
  check_keys(s, "conformal", {"mode", "epsilons", "window"});
  c.conformal.mode =
      nonconformity_mode_from_name(get_str(s, "mode", "residual", "conformal"));
  c.conformal.epsilons =
      get_or<std::vector<double>>(s, "epsilons", c.conformal.epsilons, "conformal");
  const long long window = get_or<long long>(s, "window", 0, "conformal");
  if (window < 0) bad("conformal.window must be >= 0");
  c.conformal.window = static_cast<std::size_t>(window);
}

void parse_output(const json& root, ExperimentConfig& c) {
  const json& s = section(root, "output");
  check_keys(s, "output", {"model", "report", "plot_data", "log"});
  c.output.model_path = get_str(s, "model", c.output.model_path, "output");
  c.output.report_path = get_str(s, "report", c.output.report_path, "output");
  c.output.plot_data_path = get_str(s, "plot_data", c.output.plot_data_path, "output");
  c.output.log_path = get_str(s, "log", c.output.log_path, "output");
}

void parse_synth(const json& root, ExperimentConfig& c) {
  if (!root.contains("synth")) return;
  c.has_synth = true;
  const json& s = section(root, "synth");
  check_keys(s, "synth",
             {"n_users", "n_items", "n_context_features", "n_interactions", "seed", "rank",
              "context_cardinality", "noise_sd", "bias_scale", "factor_scale", "context_strength",
              "global_mean", "scale", "norm"});
  auto& sp = c.synth;
  sp.seed = c.seed;
  sp.n_users = get_or<int>(s, "n_users", sp.n_users, "synth");
  sp.n_items = get_or<int>(s, "n_items", sp.n_items, "synth");
  sp.n_context_features = get_or<int>(s, "n_context_features", sp.n_context_features, "synth");
  sp.n_interactions = get_or<int>(s, "n_interactions", sp.n_interactions, "synth");
  sp.seed = get_or<std::uint64_t>(s, "seed", sp.seed, "synth");
  sp.rank = get_or<int>(s, "rank", sp.rank, "synth");
  sp.context_cardinality = get_or<int>(s, "context_cardinality", sp.context_cardinality, "synth");
  sp.noise_sd = get_or<double>(s, "noise_sd", sp.noise_sd, "synth");
  sp.bias_scale = get_or<double>(s, "bias_scale", sp.bias_scale, "synth");
  sp.factor_scale = get_or<double>(s, "factor_scale", sp.factor_scale, "synth");
  sp.context_strength = get_or<double>(s, "context_strength", sp.context_strength, "synth");
  sp.global_mean = get_or<double>(s, "global_mean", sp.global_mean, "synth");
  sp.scale = scale_from(s, sp.scale, "synth");
  if (s.contains("norm")) sp.norm = rating_norm_from_name(get_str(s, "norm", "minmax", "synth"));
}

void apply_override(json& root, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) bad("override '" + kv + "' is not key=value");
  const std::string keypath = kv.substr(0, eq);
  const std::string valstr = kv.substr(eq + 1);
  json val;
  try {
    val = json::parse(valstr);
  } catch (const json::exception&) {
    val = valstr;  // bare words are strings
  }
  json* node = &root;
  std::size_t pos = 0;
  while (true) {
    const auto dot = keypath.find('.', pos);
    const std::string part =
        dot == std::string::npos ? keypath.substr(pos) : keypath.substr(pos, dot - pos);
    if (part.empty()) bad("override '" + kv + "' has an empty key segment");
    if (dot == std::string::npos) {
      (*node)[part] = val;
      return;
    }
    json& next = (*node)[part];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) bad("override '" + kv + "' descends into a non-object value");
    node = &next;
    pos = dot + 1;
  }
}

ExperimentConfig parse_config_json(const json& root) {
  if (!root.is_object()) bad("top level must be a JSON object");
  check_keys(root, "config", {"seed", "dataset", "split", "model", "conformal", "output", "synth"});
  ExperimentConfig c;
  c.seed = get_or<std::uint64_t>(root, "seed", c.seed, "config");
  parse_dataset(root, c);
  parse_split(root, c);
  parse_model(root, c);
  parse_conformal(root, c);
  parse_output(root, c);
  parse_synth(root, c);
  c.validate();
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  split.validate();
  if (!(dataset.load.scale.min < dataset.load.scale.max))
    throw ConfigError("config: dataset scale min must be below max");
  if (dataset.path.empty() && !has_synth)
    throw ConfigError("config: need either dataset.path or a synth section");
  if (conformal.epsilons.empty()) throw ConfigError("config: conformal.epsilons is empty");
  for (double e : conformal.epsilons)
    if (!(e > 0.0 && e < 1.0))
      throw ConfigError("config: conformal epsilon " + std::to_string(e) + " outside (0,1)");
  switch (model.kind) {
    case ModelKind::global_mean: break;
    case ModelKind::mf:
    case ModelKind::biasedmf:
    case ModelKind::camfc: model.factorized.validate(); break;
    case ModelKind::itemknn:
    case ModelKind::userknn:
      if (model.knn_k <= 0) throw ConfigError("config: model.k must be positive");
      if (model.knn_shrink < 0.0) throw ConfigError("config: model.shrink must be >= 0");
      break;
    case ModelKind::autorec_u:
    case ModelKind::autorec_i:
    case ModelKind::deep_ae: model.autorec.validate(); break;
    case ModelKind::neucmf0i:
    case ModelKind::proposed:
      model.contextual.validate(model.kind == ModelKind::proposed ? ContextualKind::proposed
                                                                  : ContextualKind::neucmf);
      break;
  }
  if (has_synth) synth.validate();
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  for (const auto& kv : overrides) apply_override(root, kv);
  ExperimentConfig c = parse_config_json(root);
  c.hash = fnv1a64(root.dump());
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), overrides);
}

}  // namespace confrec
