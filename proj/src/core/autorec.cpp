#include "autorec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "common.hpp"

namespace confrec {

Autoencoder Autoencoder::make(int input_dim, const std::vector<int>& hidden, double lambda,
                              std::uint64_t seed, Activation hidden_act, Activation output_act) {
  if (input_dim <= 0) throw ConfigError("autoencoder: input dimension must be positive");
  if (hidden.empty()) throw ConfigError("autoencoder: need at least one hidden layer");
  for (int h : hidden)
    if (h <= 0) throw ConfigError("autoencoder: hidden widths must be positive");

  std::vector<int> enc_dims{input_dim};
  enc_dims.insert(enc_dims.end(), hidden.begin(), hidden.end());
  std::vector<Activation> enc_acts(hidden.size(), hidden_act);

  std::vector<int> dec_dims(enc_dims.rbegin(), enc_dims.rend());
  std::vector<Activation> dec_acts(hidden.size(), hidden_act);
  dec_acts.back() = output_act;

  Autoencoder ae;
  ae.lambda = lambda;
  ae.encoder = Mlp::make(enc_dims, enc_acts, "enc", seed);
  ae.decoder = Mlp::make(dec_dims, dec_acts, "dec", seed);
  return ae;
}

void Autoencoder::collect_params(std::vector<ParamBlock*>& out) {
  encoder.collect_params(out);
  decoder.collect_params(out);
}

double Autoencoder::weight_frobenius_sq() const {
  return encoder.weight_frobenius_sq() + decoder.weight_frobenius_sq();
}

Vec autorec_forward(const Autoencoder& ae, const Vec& r, AeTrace* trace) {
  Vec z = mlp_forward(ae.encoder, r, trace ? &trace->enc : nullptr);
  return mlp_forward(ae.decoder, z, trace ? &trace->dec : nullptr);
}

Vec encode_bottleneck(const Autoencoder& ae, const Vec& x) {
  return mlp_forward(ae.encoder, x);
}

static void add_weight_penalty_grads(Mlp& mlp, double lambda) {
  for (auto& layer : mlp.layers) {
    auto& w = layer.W;
    for (std::size_t k = 0; k < w.value.data.size(); ++k)
      w.grad.data[k] += lambda * w.value.data[k];
  }
}

void autorec_backward(Autoencoder& ae, const AeTrace& trace, const Vec& grad_recon,
                      bool add_penalty) {
  Vec dz = mlp_backward(ae.decoder, trace.dec, grad_recon);
  mlp_backward(ae.encoder, trace.enc, std::move(dz));
  if (add_penalty && ae.lambda != 0.0) {
    add_weight_penalty_grads(ae.encoder, ae.lambda);
    add_weight_penalty_grads(ae.decoder, ae.lambda);
  }
}

MmseResult mmse_loss(const SparseVector& target, const Vec& recon, const Autoencoder& params) {
  if (target.mask.empty()) throw DataError("mmse loss: empty observation mask");
  if (target.values.size() != recon.size())
    throw DataError("mmse loss: target/reconstruction size mismatch");
  MmseResult out;
  out.grad_recon.assign(recon.size(), 0.0);
  for (int j : target.mask) {
    double diff = target.values[static_cast<std::size_t>(j)] - recon[static_cast<std::size_t>(j)];
    out.data_loss += diff * diff;
    out.grad_recon[static_cast<std::size_t>(j)] = -2.0 * diff;
  }
  out.loss = out.data_loss + 0.5 * params.lambda * params.weight_frobenius_sq();
  return out;
}

SparseVector dense_target(Vec values) {
  SparseVector s;
  s.mask.resize(values.size());
  std::iota(s.mask.begin(), s.mask.end(), 0);
  s.values = std::move(values);
  return s;
}

RefeedResult dense_refeed_step(Autoencoder& ae, const SparseVector& x, OptimizerState& opt) {
  std::vector<ParamBlock*> params;
  ae.collect_params(params);

  // Pass 1: sparse input, loss on observed entries only.
  AeTrace t1;
  Vec y1 = autorec_forward(ae, x.values, &t1);
  MmseResult l1 = mmse_loss(x, y1, ae);
  autorec_backward(ae, t1, l1.grad_recon, true);
  optimizer_step(opt, params);

  // Pass 2: the pre-update output y1 is dense, so it can serve as both a new
  // input and a fully observed target for the updated network.
  AeTrace t2;
  Vec y2 = autorec_forward(ae, y1, &t2);
  MmseResult l2 = mmse_loss(dense_target(y1), y2, ae);
  autorec_backward(ae, t2, l2.grad_recon, true);
  optimizer_step(opt, params);

  RefeedResult out;
  out.first_loss = l1.loss;
  out.second_loss = l2.loss;
  out.refed_input = std::move(y1);
  return out;
}

void AutorecHyperparams::validate() const {
  if (hidden.empty()) throw ConfigError("autorec: hidden layer list is empty");
  for (int h : hidden)
    if (h <= 0) throw ConfigError("autorec: hidden widths must be positive");
  if (learning_rate <= 0.0) throw ConfigError("autorec: learning rate must be positive");
  if (lambda < 0.0) throw ConfigError("autorec: lambda must be non-negative");
  if (epochs <= 0) throw ConfigError("autorec: epochs must be positive");
  if (patience <= 0) throw ConfigError("autorec: patience must be positive");
}

static double cal_rmse(const AutorecModel& m, const RatingsDataset& cal, const RatingScale& scale) {
  if (cal.interactions.empty()) return 0.0;
  double se = 0.0;
  for (const auto& it : cal.interactions) {
    double pred = scale.clip(autorec_predict(m, it.user, it.item));
    double diff = pred - it.rating;
    se += diff * diff;
  }
  return std::sqrt(se / static_cast<double>(cal.interactions.size()));
}

AutorecModel train_autorec(const RatingsDataset& train, const RatingsDataset* cal,
                           const AutorecHyperparams& hp, std::uint64_t seed, TrainTrace* trace) {
  hp.validate();
  const int n_rows = hp.item_based ? train.num_items() : train.num_users();
  const int dim = hp.item_based ? train.num_users() : train.num_items();
  if (n_rows == 0 || dim == 0) throw DataError("autorec: empty training set");

  AutorecModel m;
  m.item_based = hp.item_based;
  m.global_mean = train.global_mean_rating();
  m.ae = Autoencoder::make(dim, hp.hidden, hp.lambda, substream_seed(seed, "init:autoencoder"));
  m.inputs.resize(static_cast<std::size_t>(n_rows));
  for (int r = 0; r < n_rows; ++r)
    m.inputs[static_cast<std::size_t>(r)] =
        hp.item_based ? item_rating_vector(train, r) : user_rating_vector(train, r);

  std::vector<ParamBlock*> params;
  m.ae.collect_params(params);
  OptimizerState opt;
  opt.kind = hp.optimizer;
  opt.learning_rate = hp.learning_rate;  // regularization lives in the loss, not in weight decay

  Rng shuffle_rng = make_rng(seed, "shuffle");
  std::vector<int> order(static_cast<std::size_t>(n_rows));
  std::iota(order.begin(), order.end(), 0);

  double best_rmse = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  Autoencoder best;
  int bad_epochs = 0;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    long count = 0;
    for (int r : order) {
      const SparseVector& x = m.inputs[static_cast<std::size_t>(r)];
      if (x.mask.empty()) continue;  // row absent from the training split
      if (hp.dense_refeeding) {
        RefeedResult rr = dense_refeed_step(m.ae, x, opt);
        total += rr.first_loss;
      } else {
        AeTrace t;
        Vec y = autorec_forward(m.ae, x.values, &t);
        MmseResult l = mmse_loss(x, y, m.ae);
        autorec_backward(m.ae, t, l.grad_recon, true);
        optimizer_step(opt, params);
        total += l.loss;
      }
      ++count;
    }
    const double mean_loss = count > 0 ? total / static_cast<double>(count) : 0.0;
    if (!std::isfinite(mean_loss))
      throw TrainError("autorec: training diverged at epoch " + std::to_string(epoch));
    if (trace) trace->train_loss.push_back(mean_loss);

    if (cal) {
      autorec_refresh(m);
      const double rmse = cal_rmse(m, *cal, train.scale);
      if (trace) trace->cal_rmse.push_back(rmse);
      if (rmse < best_rmse - 1e-12) {
        best_rmse = rmse;
        best_epoch = epoch;
        best = m.ae;
        bad_epochs = 0;
      } else if (++bad_epochs >= hp.patience) {
        break;
      }
    }
  }

  if (cal && best_epoch >= 0) m.ae = best;
  if (trace) trace->best_epoch = cal ? best_epoch : hp.epochs - 1;
  autorec_refresh(m);
  return m;
}

void autorec_refresh(AutorecModel& m) {
  const int rows = static_cast<int>(m.inputs.size());
  const int dim = m.ae.input_dim();
  m.reconstructions = DenseMatrix(rows, dim);
  for (int r = 0; r < rows; ++r) {
    Vec y = autorec_forward(m.ae, m.inputs[static_cast<std::size_t>(r)].values);
    std::copy(y.begin(), y.end(), m.reconstructions.row(r));
  }
}

double autorec_predict(const AutorecModel& m, int u, int i) {
  const int row = m.item_based ? i : u;
  const int col = m.item_based ? u : i;
  if (row < 0 || row >= m.reconstructions.rows || col < 0 || col >= m.reconstructions.cols)
    throw DataError("autorec: user/item index out of range");
  // A row that never appeared in training reconstructs from the zero vector;
  // fall back to the global mean instead of trusting that output.
  if (m.inputs[static_cast<std::size_t>(row)].mask.empty()) return m.global_mean;
  return m.reconstructions.at(row, col);
}

}  // namespace confrec
