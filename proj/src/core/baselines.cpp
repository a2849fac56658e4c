#include "baselines.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

namespace confrec {

double mf_predict(const MFParams& p, int u, int i) {
  if (u < 0 || u >= p.user_factors.rows || i < 0 || i >= p.item_factors.rows)
    throw DataError("mf_predict: index out of range");
  double s = 0.0;
  for (int k = 0; k < p.user_factors.cols; ++k)
    s += p.user_factors.at(u, k) * p.item_factors.at(i, k);
  return s;
}

double biasedmf_predict(const MFParams& p, int u, int i) {
  if (u < 0 || u >= static_cast<int>(p.user_bias.size()) || i < 0 ||
      i >= static_cast<int>(p.item_bias.size()))
    throw DataError("biasedmf_predict: index out of range");
  return p.global_mean + p.user_bias[u] + p.item_bias[i] + mf_predict(p, u, i);
}

double camfc_predict(const CAMFCParams& p, int u, int i, const Vec& context) {
  if (context.size() != p.context_bias.size())
    throw DataError("camfc_predict: context dimension mismatch");
  double s = biasedmf_predict(p.base, u, i);
  for (std::size_t d = 0; d < context.size(); ++d) s += context[d] * p.context_bias[d];
  return s;
}

namespace {

struct FactorizedBlocks {
  ParamBlock user_factors;
  ParamBlock item_factors;
  ParamBlock user_bias;
  ParamBlock item_bias;
  ParamBlock context_bias;
  bool use_biases = false;
  bool use_context = false;
  bool train_context = false;
  double global_mean = 0.0;

  std::vector<ParamBlock*> trainable() {
    std::vector<ParamBlock*> out{&user_factors, &item_factors};
    if (use_biases) {
      out.push_back(&user_bias);
      out.push_back(&item_bias);
    }
    if (use_context && train_context) out.push_back(&context_bias);
    return out;
  }

  double predict(int u, int i, const Vec& ctx) const {
    double s = 0.0;
    const int k = user_factors.value.cols;
    for (int f = 0; f < k; ++f) s += user_factors.value.at(u, f) * item_factors.value.at(i, f);
    if (use_biases)
      s += global_mean + user_bias.value.data[u] + item_bias.value.data[i];
    if (use_context)
      for (std::size_t d = 0; d < ctx.size(); ++d) s += ctx[d] * context_bias.value.data[d];
    return s;
  }

  /// dL/dpred = g for one example; accumulates into grads.
  void backward(int u, int i, const Vec& ctx, double g) {
    const int k = user_factors.value.cols;
    for (int f = 0; f < k; ++f) {
      user_factors.grad.at(u, f) += g * item_factors.value.at(i, f);
      item_factors.grad.at(i, f) += g * user_factors.value.at(u, f);
    }
    if (use_biases) {
      user_bias.grad.data[u] += g;
      item_bias.grad.data[i] += g;
    }
    if (use_context && train_context)
      for (std::size_t d = 0; d < ctx.size(); ++d) context_bias.grad.data[d] += g * ctx[d];
  }

  double penalty_sq() const {
    double s = frobenius_sq(user_factors.value) + frobenius_sq(item_factors.value);
    if (use_biases) s += frobenius_sq(user_bias.value) + frobenius_sq(item_bias.value);
    if (use_context) s += frobenius_sq(context_bias.value);
    return s;
  }
};

}  // namespace

void FactorizedHyperparams::validate() const {
  if (factors < 0) throw ConfigError("factorized: factors must be >= 0");
  if (learning_rate <= 0.0) throw ConfigError("factorized: learning rate must be positive");
  if (lambda < 0.0) throw ConfigError("factorized: lambda must be non-negative");
  if (epochs <= 0 || batch_size <= 0 || patience <= 0)
    throw ConfigError("factorized: epochs, batch size and patience must be positive");
}

CAMFCParams train_factorized(FactorizedKind kind, const RatingsDataset& train,
                             const RatingsDataset* cal, const FactorizedHyperparams& hp,
                             std::uint64_t seed, TrainTrace* trace) {
  if (train.interactions.empty()) throw DataError("train_factorized: empty training set");
  hp.validate();

  const int n_users = train.num_users();
  const int n_items = train.num_items();
  const int k = hp.factors;

  FactorizedBlocks model;
  model.use_biases = kind != FactorizedKind::mf;
  model.use_context = kind == FactorizedKind::camfc;
  model.train_context = !hp.freeze_context_bias;
  model.global_mean = model.use_biases ? train.global_mean_rating() : 0.0;
  // k = 0 keeps empty factor tables; the model degenerates to bias-only.
  model.user_factors = ParamBlock(
      "user_factors", k > 0 ? init_params(n_users, k, InitScheme::uniform_scaled,
                                          substream_seed(seed, "init:user_factors"))
                            : DenseMatrix(n_users, 0, 0.0));
  model.item_factors = ParamBlock(
      "item_factors", k > 0 ? init_params(n_items, k, InitScheme::uniform_scaled,
                                          substream_seed(seed, "init:item_factors"))
                            : DenseMatrix(n_items, 0, 0.0));
  model.user_bias = ParamBlock("user_bias", DenseMatrix(1, n_users, 0.0));
  model.item_bias = ParamBlock("item_bias", DenseMatrix(1, n_items, 0.0));
  model.context_bias = ParamBlock("context_bias", DenseMatrix(1, train.schema.dimension(), 0.0));

  std::vector<ParamBlock*> blocks = model.trainable();
  OptimizerState opt;
  opt.kind = hp.optimizer;
  opt.learning_rate = hp.learning_rate;
  opt.weight_decay = 2.0 * hp.lambda;  // gradient of lambda * |w|^2

  const std::size_t n = train.interactions.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng = make_rng(seed, "shuffle");

  auto full_loss = [&]() {
    double mse = 0.0;
    for (const auto& x : train.interactions) {
      const double e = model.predict(x.user, x.item, x.context) - x.rating;
      mse += e * e;
    }
    return mse / static_cast<double>(n) + hp.lambda * model.penalty_sq();
  };
  auto cal_rmse = [&]() {
    double se = 0.0;
    for (const auto& x : cal->interactions) {
      const double pred = train.scale.clip(model.predict(x.user, x.item, x.context));
      const double e = pred - x.rating;
      se += e * e;
    }
    return std::sqrt(se / static_cast<double>(cal->interactions.size()));
  };

  std::vector<DenseMatrix> best;
  double best_rmse = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int since_best = 0;
  const std::size_t batch = std::max(1, hp.batch_size);

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t b = start; b < stop; ++b) {
        const Interaction& x = train.interactions[order[b]];
        const double err = model.predict(x.user, x.item, x.context) - x.rating;
        model.backward(x.user, x.item, x.context, 2.0 * err * inv);
      }
      optimizer_step(opt, blocks);
    }
    const double loss = full_loss();
    if (!std::isfinite(loss))
      throw TrainError("train_factorized: loss diverged; try a lower learning rate");
    if (trace) trace->train_loss.push_back(loss);
    if (cal && !cal->interactions.empty()) {
      const double rmse = cal_rmse();
      if (trace) trace->cal_rmse.push_back(rmse);
      if (rmse < best_rmse) {
        best_rmse = rmse;
        best_epoch = epoch;
        since_best = 0;
        best.clear();
        for (ParamBlock* blk : blocks) best.push_back(blk->value);
      } else if (++since_best >= hp.patience) {
        break;
      }
    }
  }
  if (!best.empty())
    for (std::size_t j = 0; j < blocks.size(); ++j) blocks[j]->value = best[j];
  if (trace) trace->best_epoch = best_epoch;

  CAMFCParams out;
  out.base.user_factors = std::move(model.user_factors.value);
  out.base.item_factors = std::move(model.item_factors.value);
  out.base.user_bias = std::move(model.user_bias.value.data);
  out.base.item_bias = std::move(model.item_bias.value.data);
  out.base.global_mean = model.global_mean;
  out.context_bias = std::move(model.context_bias.value.data);
  return out;
}

namespace {

using SparseRow = std::vector<std::pair<int, double>>;

double sparse_cosine(const SparseRow& a, const SparseRow& b, int* co_count) {
  double dot_ab = 0.0;
  double na = 0.0;
  double nb = 0.0;
  int common = 0;
  for (const auto& p : a) na += p.second * p.second;
  for (const auto& p : b) nb += p.second * p.second;
  std::size_t ia = 0;
  std::size_t ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia].first < b[ib].first) {
      ++ia;
    } else if (a[ia].first > b[ib].first) {
      ++ib;
    } else {
      dot_ab += a[ia].second * b[ib].second;
      ++common;
      ++ia;
      ++ib;
    }
  }
  if (co_count) *co_count = common;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot_ab / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

KnnModel knn_build(KnnMode mode, int k, double shrink, const RatingsDataset& train) {
  if (k <= 0) throw ConfigError("knn: k must be positive");
  if (shrink < 0.0) throw ConfigError("knn: shrink must be >= 0");
  KnnModel m;
  m.mode = mode;
  m.k = k;
  m.shrink = shrink;
  m.global_mean = train.global_mean_rating();

  const int n_users = train.num_users();
  std::vector<std::map<int, std::pair<double, int>>> by_user(n_users);
  for (const auto& x : train.interactions) {
    auto& cell = by_user[x.user][x.item];
    cell.first += x.rating;
    ++cell.second;
  }
  m.ratings_by_user.assign(n_users, {});
  for (int u = 0; u < n_users; ++u)
    for (const auto& [i, sc] : by_user[u])
      m.ratings_by_user[u].emplace_back(i, sc.first / sc.second);

  knn_rebuild(m, train.num_items());
  return m;
}

void knn_rebuild(KnnModel& m, int n_items) {
  const int n_users = static_cast<int>(m.ratings_by_user.size());
  m.ratings_by_item.assign(n_items, {});
  for (int u = 0; u < n_users; ++u) {
    for (const auto& [i, r] : m.ratings_by_user[u]) {
      if (i < 0 || i >= n_items) throw DataError("knn: item index out of range in rating table");
      m.ratings_by_item[i].emplace_back(u, r);
    }
  }
  for (auto& row : m.ratings_by_item)
    std::sort(row.begin(), row.end());

  const auto& rows = (m.mode == KnnMode::item) ? m.ratings_by_item : m.ratings_by_user;
  const int n = static_cast<int>(rows.size());
  m.similarity = DenseMatrix(n, n, 0.0);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      int common = 0;
      const double cos = sparse_cosine(rows[a], rows[b], &common);
      const double weight =
          common > 0 ? static_cast<double>(common) / (common + m.shrink) : 0.0;
      const double sim = weight * cos;
      m.similarity.at(a, b) = sim;
      m.similarity.at(b, a) = sim;
    }
  }
}

double knn_predict(const KnnModel& m, int u, int i) {
  if (u < 0 || u >= static_cast<int>(m.ratings_by_user.size()) || i < 0 ||
      i >= static_cast<int>(m.ratings_by_item.size()))
    throw DataError("knn_predict: index out of range");

  // Candidate neighbors are entities with an observed rating for the target.
  const auto& rated = (m.mode == KnnMode::item) ? m.ratings_by_user[u] : m.ratings_by_item[i];
  const int target = (m.mode == KnnMode::item) ? i : u;

  std::vector<std::pair<double, std::pair<int, double>>> candidates;  // (sim, (id, rating))
  for (const auto& [j, r] : rated) {
    if (j == target) continue;
    const double sim = m.similarity.at(target, j);
    if (sim > 0.0) candidates.push_back({sim, {j, r}});
  }
  if (candidates.empty()) return m.global_mean;
  std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second.first < b.second.first;
  });
  const std::size_t take = std::min<std::size_t>(m.k, candidates.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < take; ++t) {
    num += candidates[t].first * candidates[t].second.second;
    den += candidates[t].first;
  }
  return num / den;
}

}  // namespace confrec
