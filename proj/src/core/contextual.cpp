#include "contextual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "common.hpp"

namespace confrec {

Vec build_input_vector(int user, int item, const Vec& context, std::optional<double> rating_norm,
                       int n_users, int n_items) {
  if (user < 0 || user >= n_users) throw DataError("input vector: user index out of range");
  if (item < 0 || item >= n_items) throw DataError("input vector: item index out of range");
  Vec x(static_cast<std::size_t>(n_users) + n_items + context.size() + 1, 0.0);
  x[static_cast<std::size_t>(user)] = 1.0;
  x[static_cast<std::size_t>(n_users) + item] = 1.0;
  std::copy(context.begin(), context.end(), x.begin() + n_users + n_items);
  if (rating_norm) x.back() = *rating_norm;
  return x;
}

Vec ui_tower(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DataError("ui tower: embedding size mismatch");
  Vec out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
  return out;
}

std::string contextual_kind_name(ContextualKind k) {
  return k == ContextualKind::proposed ? "proposed" : "neucmf";
}

void ContextualModel::collect_params(std::vector<ParamBlock*>& out) {
  out.push_back(&user_emb);
  out.push_back(&item_emb);
  if (kind == ContextualKind::neucmf) {
    out.push_back(&ui_user_emb);
    out.push_back(&ui_item_emb);
  }
  context_proj.collect_params(out);
  head.collect_params(out);
  if (kind == ContextualKind::neucmf) combiner.collect_params(out);
}

static Vec slice(const Vec& v, std::size_t off, std::size_t len) {
  return Vec(v.begin() + static_cast<std::ptrdiff_t>(off),
             v.begin() + static_cast<std::ptrdiff_t>(off + len));
}

static void add_row_grad(ParamBlock& emb, int row, const Vec& g) {
  double* dst = emb.grad.row(row);
  for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j];
}

double contextual_forward(const ContextualModel& m, int user, int item, const Vec& context,
                          const Vec* z_cached, ContextualTrace* trace) {
  if (user < 0 || user >= m.n_users || item < 0 || item >= m.n_items)
    throw DataError("contextual: user/item index out of range");
  ContextualTrace local;
  ContextualTrace& t = trace ? *trace : local;
  t.user = user;
  t.item = item;
  t.e_u = m.user_emb.value.row_vec(user);
  t.e_i = m.item_emb.value.row_vec(item);
  t.e_c = mlp_forward(m.context_proj, context, &t.ctx_trace);

  if (m.kind == ContextualKind::proposed) {
    if (z_cached)
      t.z = *z_cached;
    else if (m.has_ae)
      t.z = contextual_encode(m, user, item, context);
    else
      t.z.clear();
    Vec h_in;
    h_in.reserve(t.e_u.size() + t.e_i.size() + t.e_c.size() + t.z.size() + t.e_u.size());
    h_in.insert(h_in.end(), t.e_u.begin(), t.e_u.end());
    h_in.insert(h_in.end(), t.e_i.begin(), t.e_i.end());
    h_in.insert(h_in.end(), t.e_c.begin(), t.e_c.end());
    h_in.insert(h_in.end(), t.z.begin(), t.z.end());
    if (m.ui_branch) {
      t.ui = ui_tower(t.e_u, t.e_i);
      h_in.insert(h_in.end(), t.ui.begin(), t.ui.end());
    }
    Vec out = mlp_forward(m.head, h_in, &t.head_trace);
    return out.at(0);
  }

  t.ui = ui_tower(m.ui_user_emb.value.row_vec(user), m.ui_item_emb.value.row_vec(item));
  Vec m_in;
  m_in.reserve(t.e_u.size() + t.e_i.size() + t.e_c.size());
  m_in.insert(m_in.end(), t.e_u.begin(), t.e_u.end());
  m_in.insert(m_in.end(), t.e_i.begin(), t.e_i.end());
  m_in.insert(m_in.end(), t.e_c.begin(), t.e_c.end());
  Vec m_out = mlp_forward(m.head, m_in, &t.head_trace);
  Vec c_in;
  c_in.reserve(t.ui.size() + m_out.size());
  c_in.insert(c_in.end(), t.ui.begin(), t.ui.end());
  c_in.insert(c_in.end(), m_out.begin(), m_out.end());
  Vec out = mlp_forward(m.combiner, c_in, &t.comb_trace);
  return out.at(0);
}

void contextual_backward(ContextualModel& m, const ContextualTrace& t, double upstream) {
  Vec d_out{upstream};
  if (m.kind == ContextualKind::proposed) {
    Vec d_h = mlp_backward(m.head, t.head_trace, std::move(d_out));
    std::size_t off = 0;
    Vec d_eu = slice(d_h, off, t.e_u.size());
    off += t.e_u.size();
    Vec d_ei = slice(d_h, off, t.e_i.size());
    off += t.e_i.size();
    Vec d_ec = slice(d_h, off, t.e_c.size());
    off += t.e_c.size() + t.z.size();  // encoder frozen: the z slice is dropped
    if (m.ui_branch) {
      Vec d_ui = slice(d_h, off, t.ui.size());
      for (std::size_t j = 0; j < d_ui.size(); ++j) {
        d_eu[j] += d_ui[j] * t.e_i[j];
        d_ei[j] += d_ui[j] * t.e_u[j];
      }
    }
    mlp_backward(m.context_proj, t.ctx_trace, std::move(d_ec));
    add_row_grad(m.user_emb, t.user, d_eu);
    add_row_grad(m.item_emb, t.item, d_ei);
    return;
  }

  Vec d_c = mlp_backward(m.combiner, t.comb_trace, std::move(d_out));
  Vec d_ui = slice(d_c, 0, t.ui.size());
  Vec d_mout = slice(d_c, t.ui.size(), d_c.size() - t.ui.size());
  Vec d_m = mlp_backward(m.head, t.head_trace, std::move(d_mout));
  std::size_t off = 0;
  Vec d_eu = slice(d_m, off, t.e_u.size());
  off += t.e_u.size();
  Vec d_ei = slice(d_m, off, t.e_i.size());
  off += t.e_i.size();
  Vec d_ec = slice(d_m, off, t.e_c.size());
  mlp_backward(m.context_proj, t.ctx_trace, std::move(d_ec));
  add_row_grad(m.user_emb, t.user, d_eu);
  add_row_grad(m.item_emb, t.item, d_ei);

  const double* eu = m.ui_user_emb.value.row(t.user);
  const double* ei = m.ui_item_emb.value.row(t.item);
  double* gu = m.ui_user_emb.grad.row(t.user);
  double* gi = m.ui_item_emb.grad.row(t.item);
  for (std::size_t j = 0; j < d_ui.size(); ++j) {
    gu[j] += d_ui[j] * ei[j];
    gi[j] += d_ui[j] * eu[j];
  }
}

double contextual_predict(const ContextualModel& m, int user, int item, const Vec& context) {
  return denormalize_rating(contextual_forward(m, user, item, context), m.scale, m.norm);
}

Vec contextual_encode(const ContextualModel& m, int user, int item, const Vec& context) {
  if (!m.has_ae) throw DataError("contextual: model has no autoencoder");
  Vec x = build_input_vector(user, item, context, std::nullopt, m.n_users, m.n_items);
  if (static_cast<int>(x.size()) != m.ae.input_dim())
    throw DataError("contextual: input vector does not match autoencoder dimension");
  return encode_bottleneck(m.ae, x);
}

void ContextualHyperparams::validate(ContextualKind kind) const {
  if (d_user <= 0 || d_item <= 0 || d_context <= 0)
    throw ConfigError("contextual: embedding sizes must be positive");
  if (head_hidden.empty()) throw ConfigError("contextual: head hidden list is empty");
  for (int h : head_hidden)
    if (h <= 0) throw ConfigError("contextual: head widths must be positive");
  if (epochs <= 0 || patience <= 0 || batch_size <= 0)
    throw ConfigError("contextual: epochs, patience and batch size must be positive");
  if (learning_rate <= 0.0) throw ConfigError("contextual: learning rate must be positive");
  if (lambda < 0.0) throw ConfigError("contextual: lambda must be non-negative");
  if (kind == ContextualKind::proposed) {
    if (bottleneck <= 0) throw ConfigError("contextual: bottleneck size must be positive");
    for (int h : ae_hidden)
      if (h <= 0) throw ConfigError("contextual: autoencoder widths must be positive");
    if (pretrain_epochs <= 0) throw ConfigError("contextual: pretrain epochs must be positive");
    if (pretrain_learning_rate <= 0.0)
      throw ConfigError("contextual: pretrain learning rate must be positive");
    if (ui_branch && d_user != d_item)
      throw ConfigError("contextual: ui branch needs d_user == d_item");
  } else if (d_ui <= 0) {
    throw ConfigError("contextual: ui embedding size must be positive");
  }
}

static void pretrain_autoencoder(Autoencoder& ae, const RatingsDataset& train,
                                 const ContextualHyperparams& hp, std::uint64_t seed) {
  std::vector<ParamBlock*> params;
  ae.collect_params(params);
  OptimizerState opt;
  opt.kind = hp.optimizer;
  opt.learning_rate = hp.pretrain_learning_rate;

  const int n_users = train.num_users();
  const int n_items = train.num_items();
  Rng rng = make_rng(seed, "pretrain:shuffle");
  std::vector<std::size_t> order(train.interactions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  SparseVector x;  // fully observed; values rewritten per interaction
  x.mask.resize(static_cast<std::size_t>(ae.input_dim()));
  std::iota(x.mask.begin(), x.mask.end(), 0);

  for (int epoch = 0; epoch < hp.pretrain_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t idx : order) {
      const Interaction& it = train.interactions[idx];
      x.values =
          build_input_vector(it.user, it.item, it.context, it.rating_normalized, n_users, n_items);
      if (hp.pretrain_refeeding) {
        total += dense_refeed_step(ae, x, opt).first_loss;
      } else {
        AeTrace t;
        Vec y = autorec_forward(ae, x.values, &t);
        MmseResult l = mmse_loss(x, y, ae);
        autorec_backward(ae, t, l.grad_recon, true);
        optimizer_step(opt, params);
        total += l.loss;
      }
    }
    if (!std::isfinite(total))
      throw TrainError("contextual: autoencoder pretraining diverged at epoch " +
                       std::to_string(epoch));
  }
}

ContextualModel train_contextual(ContextualKind kind, const RatingsDataset& train,
                                 const RatingsDataset* cal, const ContextualHyperparams& hp,
                                 std::uint64_t seed, TrainTrace* trace) {
  hp.validate(kind);
  if (train.interactions.empty()) throw DataError("contextual: empty training set");
  const int n_users = train.num_users();
  const int n_items = train.num_items();
  const int ctx_dim = train.schema.dimension();

  ContextualModel m;
  m.kind = kind;
  m.n_users = n_users;
  m.n_items = n_items;
  m.scale = train.scale;
  m.norm = train.norm;
  m.user_emb = ParamBlock("user_emb", init_params(n_users, hp.d_user, InitScheme::uniform_scaled,
                                                  substream_seed(seed, "init:user_emb")));
  m.item_emb = ParamBlock("item_emb", init_params(n_items, hp.d_item, InitScheme::uniform_scaled,
                                                  substream_seed(seed, "init:item_emb")));
  m.context_proj = Mlp::make({ctx_dim, hp.d_context}, {Activation::tanh}, "ctx",
                             substream_seed(seed, "init:context_proj"));

  if (kind == ContextualKind::proposed) {
    m.has_ae = true;
    m.ui_branch = hp.ui_branch;
    std::vector<int> ae_layers = hp.ae_hidden;
    ae_layers.push_back(hp.bottleneck);
    m.ae = Autoencoder::make(n_users + n_items + ctx_dim + 1, ae_layers, hp.lambda,
                             substream_seed(seed, "init:autoencoder"));
    pretrain_autoencoder(m.ae, train, hp, seed);

    const int head_in =
        hp.d_user + hp.d_item + hp.d_context + hp.bottleneck + (hp.ui_branch ? hp.d_user : 0);
    std::vector<int> dims{head_in};
    dims.insert(dims.end(), hp.head_hidden.begin(), hp.head_hidden.end());
    dims.push_back(1);
    std::vector<Activation> acts(hp.head_hidden.size(), Activation::relu);
    acts.push_back(Activation::identity);
    m.head = Mlp::make(dims, acts, "head", substream_seed(seed, "init:head"));
  } else {
    m.ui_user_emb =
        ParamBlock("ui_user_emb", init_params(n_users, hp.d_ui, InitScheme::uniform_scaled,
                                              substream_seed(seed, "init:ui_user_emb")));
    m.ui_item_emb =
        ParamBlock("ui_item_emb", init_params(n_items, hp.d_ui, InitScheme::uniform_scaled,
                                              substream_seed(seed, "init:ui_item_emb")));
    std::vector<int> dims{hp.d_user + hp.d_item + hp.d_context};
    dims.insert(dims.end(), hp.head_hidden.begin(), hp.head_hidden.end());
    std::vector<Activation> acts(hp.head_hidden.size(), Activation::relu);
    m.head = Mlp::make(dims, acts, "mlp_tower", substream_seed(seed, "init:head"));
    m.combiner = Mlp::make({hp.d_ui + hp.head_hidden.back(), 1}, {Activation::identity}, "combiner",
                           substream_seed(seed, "init:combiner"));
  }

  // The frozen encoder makes the bottleneck codes constants of the data, so
  // they are computed once up front (rating slot left at zero).
  std::vector<Vec> z_train;
  std::vector<Vec> z_cal;
  if (kind == ContextualKind::proposed) {
    z_train.reserve(train.interactions.size());
    for (const auto& it : train.interactions)
      z_train.push_back(contextual_encode(m, it.user, it.item, it.context));
    if (cal) {
      z_cal.reserve(cal->interactions.size());
      for (const auto& it : cal->interactions)
        z_cal.push_back(contextual_encode(m, it.user, it.item, it.context));
    }
  }

  std::vector<ParamBlock*> params;
  m.collect_params(params);
  OptimizerState opt;
  opt.kind = hp.optimizer;
  opt.learning_rate = hp.learning_rate;
  opt.weight_decay = hp.lambda;

  Rng shuffle_rng = make_rng(seed, "shuffle");
  std::vector<std::size_t> order(train.interactions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t n = train.interactions.size();
  const std::size_t bs = static_cast<std::size_t>(hp.batch_size);
  double best_rmse = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  ContextualModel best;
  int bad_epochs = 0;

  std::vector<ContextualTrace> traces;
  std::vector<double> errs;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_se = 0.0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t bsz = std::min(bs, n - start);
      traces.assign(bsz, ContextualTrace{});
      errs.assign(bsz, 0.0);
      for (std::size_t k = 0; k < bsz; ++k) {
        const std::size_t idx = order[start + k];
        const Interaction& it = train.interactions[idx];
        const Vec* zc = kind == ContextualKind::proposed ? &z_train[idx] : nullptr;
        const double y = contextual_forward(m, it.user, it.item, it.context, zc, &traces[k]);
        errs[k] = y - it.rating_normalized;
        epoch_se += errs[k] * errs[k];
      }
      for (std::size_t k = 0; k < bsz; ++k)
        contextual_backward(m, traces[k], 2.0 * errs[k] / static_cast<double>(bsz));
      optimizer_step(opt, params);
    }
    const double mse = epoch_se / static_cast<double>(n);
    if (!std::isfinite(mse))
      throw TrainError("contextual: " + contextual_kind_name(kind) +
                       " training diverged at epoch " + std::to_string(epoch));
    if (trace) trace->train_loss.push_back(mse);

    if (cal) {
      double se = 0.0;
      for (std::size_t c = 0; c < cal->interactions.size(); ++c) {
        const Interaction& it = cal->interactions[c];
        const Vec* zc = kind == ContextualKind::proposed ? &z_cal[c] : nullptr;
        const double y = contextual_forward(m, it.user, it.item, it.context, zc);
        const double pred = train.scale.clip(denormalize_rating(y, m.scale, m.norm));
        se += (pred - it.rating) * (pred - it.rating);
      }
      const double rmse = std::sqrt(se / static_cast<double>(cal->interactions.size()));
      if (trace) trace->cal_rmse.push_back(rmse);
      if (rmse < best_rmse - 1e-12) {
        best_rmse = rmse;
        best_epoch = epoch;
        best = m;
        bad_epochs = 0;
      } else if (++bad_epochs >= hp.patience) {
        break;
      }
    }
  }

  if (cal && best_epoch >= 0) m = best;
  if (trace) trace->best_epoch = cal ? best_epoch : hp.epochs - 1;
  return m;
}

}  // namespace confrec
