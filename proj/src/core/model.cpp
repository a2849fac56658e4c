#include "model.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace confrec {

using nlohmann::json;

std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::global_mean: return "global_mean";
    case ModelKind::itemknn: return "itemknn";
    case ModelKind::userknn: return "userknn";
    case ModelKind::mf: return "mf";
    case ModelKind::biasedmf: return "biasedmf";
    case ModelKind::camfc: return "camfc";
    case ModelKind::autorec_u: return "autorec_u";
    case ModelKind::autorec_i: return "autorec_i";
    case ModelKind::deep_ae: return "deep_ae";
    case ModelKind::neucmf0i: return "neucmf0i";
    case ModelKind::proposed: return "proposed";
  }
  throw ConfigError("unknown model kind");
}

ModelKind model_kind_from_name(const std::string& s) {
  static const std::vector<ModelKind> all{
      ModelKind::global_mean, ModelKind::itemknn,   ModelKind::userknn, ModelKind::mf,
      ModelKind::biasedmf,    ModelKind::camfc,     ModelKind::autorec_u,
      ModelKind::autorec_i,   ModelKind::deep_ae,   ModelKind::neucmf0i, ModelKind::proposed};
  for (ModelKind k : all)
    if (model_kind_name(k) == s) return k;
  throw ConfigError("unknown model kind '" + s + "'");
}

bool TrainedModel::has_autoencoder() const {
  switch (kind) {
    case ModelKind::autorec_u:
    case ModelKind::autorec_i:
    case ModelKind::deep_ae:
    case ModelKind::proposed: return true;
    default: return false;
  }
}

const Autoencoder& TrainedModel::autoencoder() const {
  if (kind == ModelKind::proposed) return contextual.ae;
  if (kind == ModelKind::autorec_u || kind == ModelKind::autorec_i || kind == ModelKind::deep_ae)
    return autorec.ae;
  throw ConfigError("model '" + model_kind_name(kind) + "' has no autoencoder");
}

double TrainedModel::predict(int user, int item, const Vec& context) const {
  if (user < 0 || user >= users.size()) throw DataError("predict: user index out of range");
  if (item < 0 || item >= items.size()) throw DataError("predict: item index out of range");
  switch (kind) {
    case ModelKind::global_mean: return global_mean;
    case ModelKind::itemknn:
    case ModelKind::userknn: return knn_predict(knn, user, item);
    case ModelKind::mf: return mf_predict(factorized.base, user, item);
    case ModelKind::biasedmf: return biasedmf_predict(factorized.base, user, item);
    case ModelKind::camfc: return camfc_predict(factorized, user, item, context);
    case ModelKind::autorec_u:
    case ModelKind::autorec_i:
    case ModelKind::deep_ae: return autorec_predict(autorec, user, item);
    case ModelKind::neucmf0i:
    case ModelKind::proposed: return contextual_predict(contextual, user, item, context);
  }
  throw ConfigError("unknown model kind");
}

double TrainedModel::predict_clipped(int user, int item, const Vec& context) const {
  return scale.clip(predict(user, item, context));
}

// ---------------------------------------------------------------------------
// Persistence. MessagePack container; parameter arrays are stored as raw
// little-endian double blobs so round trips are bit-exact.

namespace {

json blob_from_doubles(const Vec& v) {
  std::vector<std::uint8_t> bytes(v.size() * sizeof(double));
  if (!bytes.empty()) std::memcpy(bytes.data(), v.data(), bytes.size());
  return json::binary(std::move(bytes));
}

Vec doubles_from_blob(const json& j) {
  if (!j.is_binary()) throw DataError("model file: expected a binary blob");
  const auto& bytes = j.get_binary();
  if (bytes.size() % sizeof(double) != 0) throw DataError("model file: truncated blob");
  Vec v(bytes.size() / sizeof(double));
  if (!v.empty()) std::memcpy(v.data(), bytes.data(), bytes.size());
  return v;
}

json matrix_to_json(const DenseMatrix& m) {
  return json{{"rows", m.rows}, {"cols", m.cols}, {"data", blob_from_doubles(m.data)}};
}

DenseMatrix matrix_from_json(const json& j) {
  DenseMatrix m;
  m.rows = j.at("rows").get<int>();
  m.cols = j.at("cols").get<int>();
  if (m.rows < 0 || m.cols < 0) throw DataError("model file: negative matrix shape");
  m.data = doubles_from_blob(j.at("data"));
  if (m.data.size() != static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols))
    throw DataError("model file: matrix shape does not match payload");
  return m;
}

json block_to_json(const ParamBlock& b) {
  return json{{"name", b.name}, {"value", matrix_to_json(b.value)}};
}

ParamBlock block_from_json(const json& j) {
  return ParamBlock(j.at("name").get<std::string>(), matrix_from_json(j.at("value")));
}

json mlp_to_json(const Mlp& m) {
  json layers = json::array();
  for (const auto& l : m.layers)
    layers.push_back(json{{"W", block_to_json(l.W)},
                          {"b", block_to_json(l.b)},
                          {"act", activation_name(l.act)}});
  return json{{"layers", layers}};
}

Mlp mlp_from_json(const json& j) {
  Mlp m;
  for (const auto& lj : j.at("layers")) {
    Mlp::Layer l;
    l.W = block_from_json(lj.at("W"));
    l.b = block_from_json(lj.at("b"));
    l.act = activation_from_name(lj.at("act").get<std::string>());
    m.layers.push_back(std::move(l));
  }
  return m;
}

json ae_to_json(const Autoencoder& ae) {
  return json{{"encoder", mlp_to_json(ae.encoder)},
              {"decoder", mlp_to_json(ae.decoder)},
              {"lambda", ae.lambda}};
}

Autoencoder ae_from_json(const json& j) {
  Autoencoder ae;
  ae.encoder = mlp_from_json(j.at("encoder"));
  ae.decoder = mlp_from_json(j.at("decoder"));
  ae.lambda = j.at("lambda").get<double>();
  return ae;
}

json sparse_to_json(const SparseVector& s) {
  Vec observed;
  observed.reserve(s.mask.size());
  for (int i : s.mask) observed.push_back(s.values[static_cast<std::size_t>(i)]);
  return json{{"n", s.values.size()}, {"idx", s.mask}, {"val", blob_from_doubles(observed)}};
}

SparseVector sparse_from_json(const json& j) {
  SparseVector s;
  const auto n = j.at("n").get<std::size_t>();
  s.mask = j.at("idx").get<std::vector<int>>();
  Vec observed = doubles_from_blob(j.at("val"));
  if (observed.size() != s.mask.size()) throw DataError("model file: sparse row length mismatch");
  s.values.assign(n, 0.0);
  for (std::size_t k = 0; k < s.mask.size(); ++k) {
    const int i = s.mask[k];
    if (i < 0 || static_cast<std::size_t>(i) >= n)
      throw DataError("model file: sparse row index out of range");
    s.values[static_cast<std::size_t>(i)] = observed[k];
  }
  return s;
}

json rating_rows_to_json(const std::vector<std::vector<std::pair<int, double>>>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    std::vector<int> idx;
    Vec val;
    idx.reserve(row.size());
    val.reserve(row.size());
    for (const auto& [i, r] : row) {
      idx.push_back(i);
      val.push_back(r);
    }
    out.push_back(json{{"idx", idx}, {"val", blob_from_doubles(val)}});
  }
  return out;
}

std::vector<std::vector<std::pair<int, double>>> rating_rows_from_json(const json& j) {
  std::vector<std::vector<std::pair<int, double>>> rows;
  for (const auto& rj : j) {
    auto idx = rj.at("idx").get<std::vector<int>>();
    Vec val = doubles_from_blob(rj.at("val"));
    if (idx.size() != val.size()) throw DataError("model file: rating row length mismatch");
    std::vector<std::pair<int, double>> row;
    row.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) row.emplace_back(idx[k], val[k]);
    rows.push_back(std::move(row));
  }
  return rows;
}

json schema_to_json(const ContextSchema& schema) {
  json out = json::array();
  for (const auto& f : schema.features)
    out.push_back(json{{"name", f.name},
                       {"kind", feature_kind_name(f.kind)},
                       {"domain", f.domain},
                       {"min", f.min},
                       {"max", f.max}});
  return out;
}

ContextSchema schema_from_json(const json& j) {
  ContextSchema schema;
  for (const auto& fj : j) {
    ContextFeature f;
    f.name = fj.at("name").get<std::string>();
    f.kind = feature_kind_from_name(fj.at("kind").get<std::string>());
    f.domain = fj.at("domain").get<std::vector<std::string>>();
    f.min = fj.at("min").get<double>();
    f.max = fj.at("max").get<double>();
    schema.features.push_back(std::move(f));
  }
  schema.validate();
  return schema;
}

Vocab vocab_from_json(const json& j) {
  Vocab v;
  const auto ids = j.get<std::vector<std::string>>();
  for (const auto& id : ids) v.add_or_get(id);
  if (static_cast<std::size_t>(v.size()) != ids.size())
    throw DataError("model file: duplicate ids in vocabulary");
  return v;
}

json factorized_to_json(const CAMFCParams& p) {
  return json{{"user_factors", matrix_to_json(p.base.user_factors)},
              {"item_factors", matrix_to_json(p.base.item_factors)},
              {"user_bias", blob_from_doubles(p.base.user_bias)},
              {"item_bias", blob_from_doubles(p.base.item_bias)},
              {"mean", p.base.global_mean},
              {"context_bias", blob_from_doubles(p.context_bias)}};
}

CAMFCParams factorized_from_json(const json& j) {
  CAMFCParams p;
  p.base.user_factors = matrix_from_json(j.at("user_factors"));
  p.base.item_factors = matrix_from_json(j.at("item_factors"));
  p.base.user_bias = doubles_from_blob(j.at("user_bias"));
  p.base.item_bias = doubles_from_blob(j.at("item_bias"));
  p.base.global_mean = j.at("mean").get<double>();
  p.context_bias = doubles_from_blob(j.at("context_bias"));
  return p;
}

json contextual_to_json(const ContextualModel& c) {
  json out{{"kind", contextual_kind_name(c.kind)},
           {"n_users", c.n_users},
           {"n_items", c.n_items},
           {"user_emb", block_to_json(c.user_emb)},
           {"item_emb", block_to_json(c.item_emb)},
           {"context_proj", mlp_to_json(c.context_proj)},
           {"head", mlp_to_json(c.head)}};
  if (c.kind == ContextualKind::proposed) {
    out["ui_branch"] = c.ui_branch;
    out["ae"] = ae_to_json(c.ae);
  } else {
    out["ui_user_emb"] = block_to_json(c.ui_user_emb);
    out["ui_item_emb"] = block_to_json(c.ui_item_emb);
    out["combiner"] = mlp_to_json(c.combiner);
  }
  return out;
}

ContextualModel contextual_from_json(const json& j, const RatingScale& scale, RatingNorm norm) {
  ContextualModel c;
  const auto kind = j.at("kind").get<std::string>();
  c.kind = kind == "proposed" ? ContextualKind::proposed : ContextualKind::neucmf;
  c.n_users = j.at("n_users").get<int>();
  c.n_items = j.at("n_items").get<int>();
  c.scale = scale;
  c.norm = norm;
  c.user_emb = block_from_json(j.at("user_emb"));
  c.item_emb = block_from_json(j.at("item_emb"));
  c.context_proj = mlp_from_json(j.at("context_proj"));
  c.head = mlp_from_json(j.at("head"));
  if (c.kind == ContextualKind::proposed) {
    c.has_ae = true;
    c.ui_branch = j.at("ui_branch").get<bool>();
    c.ae = ae_from_json(j.at("ae"));
  } else {
    c.ui_user_emb = block_from_json(j.at("ui_user_emb"));
    c.ui_item_emb = block_from_json(j.at("ui_item_emb"));
    c.combiner = mlp_from_json(j.at("combiner"));
  }
  return c;
}

}  // namespace

void save_model(const TrainedModel& m, const std::string& path) {
  json root{{"format", "confrec-model"},
            {"version", 1},
            {"kind", model_kind_name(m.kind)},
            {"dataset", m.dataset_name},
            {"scale", {{"min", m.scale.min}, {"max", m.scale.max}}},
            {"norm", rating_norm_name(m.norm)},
            {"schema", schema_to_json(m.schema)},
            {"users", m.users.ids},
            {"items", m.items.ids},
            {"global_mean", m.global_mean}};

  json params = json::object();
  switch (m.kind) {
    case ModelKind::global_mean: break;
    case ModelKind::mf:
    case ModelKind::biasedmf:
    case ModelKind::camfc: params = factorized_to_json(m.factorized); break;
    case ModelKind::itemknn:
    case ModelKind::userknn:
      params = json{{"k", m.knn.k},
                    {"shrink", m.knn.shrink},
                    {"mean", m.knn.global_mean},
                    {"rows", rating_rows_to_json(m.knn.ratings_by_user)}};
      break;
    case ModelKind::autorec_u:
    case ModelKind::autorec_i:
    case ModelKind::deep_ae: {
      json inputs = json::array();
      for (const auto& row : m.autorec.inputs) inputs.push_back(sparse_to_json(row));
      params = json{{"item_based", m.autorec.item_based},
                    {"ae", ae_to_json(m.autorec.ae)},
                    {"inputs", inputs},
                    {"mean", m.autorec.global_mean}};
      break;
    }
    case ModelKind::neucmf0i:
    case ModelKind::proposed: params = contextual_to_json(m.contextual); break;
  }
  root["params"] = params;

  const std::vector<std::uint8_t> bytes = json::to_msgpack(root);
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open model file for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to model file: " + path);
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  json root;
  try {
    root = json::from_msgpack(bytes);
  } catch (const json::exception& e) {
    throw DataError("model file " + path + " is not a valid model container: " + e.what());
  }

  try {
    if (root.at("format").get<std::string>() != "confrec-model")
      throw DataError("model file " + path + ": unknown container format");
    if (root.at("version").get<int>() != 1)
      throw DataError("model file " + path + ": unsupported version");

    TrainedModel m;
    m.kind = model_kind_from_name(root.at("kind").get<std::string>());
    m.dataset_name = root.at("dataset").get<std::string>();
    m.scale.min = root.at("scale").at("min").get<double>();
    m.scale.max = root.at("scale").at("max").get<double>();
    m.norm = rating_norm_from_name(root.at("norm").get<std::string>());
    m.schema = schema_from_json(root.at("schema"));
    m.users = vocab_from_json(root.at("users"));
    m.items = vocab_from_json(root.at("items"));
    m.global_mean = root.at("global_mean").get<double>();

    const json& params = root.at("params");
    switch (m.kind) {
      case ModelKind::global_mean: break;
      case ModelKind::mf:
      case ModelKind::biasedmf:
      case ModelKind::camfc: m.factorized = factorized_from_json(params); break;
      case ModelKind::itemknn:
      case ModelKind::userknn:
        m.knn.mode = m.kind == ModelKind::itemknn ? KnnMode::item : KnnMode::user;
        m.knn.k = params.at("k").get<int>();
        m.knn.shrink = params.at("shrink").get<double>();
        m.knn.global_mean = params.at("mean").get<double>();
        m.knn.ratings_by_user = rating_rows_from_json(params.at("rows"));
        knn_rebuild(m.knn, m.items.size());
        break;
      case ModelKind::autorec_u:
      case ModelKind::autorec_i:
      case ModelKind::deep_ae:
        m.autorec.item_based = params.at("item_based").get<bool>();
        m.autorec.ae = ae_from_json(params.at("ae"));
        for (const auto& rj : params.at("inputs"))
          m.autorec.inputs.push_back(sparse_from_json(rj));
        m.autorec.global_mean = params.at("mean").get<double>();
        autorec_refresh(m.autorec);
        break;
      case ModelKind::neucmf0i:
      case ModelKind::proposed:
        m.contextual = contextual_from_json(params, m.scale, m.norm);
        break;
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError("model file " + path + " is missing required fields: " + e.what());
  }
}

}  // namespace confrec
