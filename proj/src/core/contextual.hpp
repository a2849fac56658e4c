#pragma once

#include <optional>

#include "autorec.hpp"
#include "dataset.hpp"
#include "layers.hpp"

namespace confrec {

/// one_hot(user) + one_hot(item) + encoded context + one trailing slot for
/// the normalized rating. The rating slot is filled only when the vector is
/// an autoencoder (pre)training target; at prediction time it stays 0.
Vec build_input_vector(int user, int item, const Vec& context, std::optional<double> rating_norm,
                       int n_users, int n_items);

/// Elementwise product of two equal-length embedding vectors.
Vec ui_tower(const Vec& a, const Vec& b);

enum class ContextualKind { proposed, neucmf };

std::string contextual_kind_name(ContextualKind k);

/// Rating predictor over (user, item, context) built from embedding tables
/// plus either
///   proposed: a frozen pretrained autoencoder bottleneck appended to the
///             head input, head MLP ending in a scalar;
///   neucmf:   a GMF-style elementwise-product tower and an MLP tower,
///             merged by a final affine layer.
/// Outputs live on the normalized rating scale; predict() denormalizes.
struct ContextualModel {
  ContextualKind kind = ContextualKind::proposed;
  int n_users = 0;
  int n_items = 0;
  RatingScale scale;
  RatingNorm norm = RatingNorm::minmax;

  ParamBlock user_emb;  // n_users x d_user
  ParamBlock item_emb;  // n_items x d_item
  Mlp context_proj;     // ctx_dim -> d_context, tanh
  Mlp head;             // proposed: concat -> ... -> 1; neucmf: the MLP tower

  // proposed
  bool has_ae = false;
  Autoencoder ae;          // frozen after pretraining
  bool ui_branch = false;  // also feed user_emb * item_emb into the head

  // neucmf
  ParamBlock ui_user_emb;  // n_users x d_ui, UI-tower embeddings
  ParamBlock ui_item_emb;  // n_items x d_ui
  Mlp combiner;            // [ui + mlp tower output] -> 1, identity

  /// Trainable blocks in a stable order (autoencoder excluded).
  void collect_params(std::vector<ParamBlock*>& out);
};

struct ContextualTrace {
  int user = 0;
  int item = 0;
  Vec e_u, e_i, e_c, z, ui;
  MlpTrace ctx_trace;
  MlpTrace head_trace;
  MlpTrace comb_trace;
};

/// Normalized-scale prediction. For the proposed model the bottleneck code
/// can be passed in (`z_cached`) to avoid re-encoding; pass nullptr to have
/// it computed from the rating-free input vector.
double contextual_forward(const ContextualModel& m, int user, int item, const Vec& context,
                          const Vec* z_cached = nullptr, ContextualTrace* trace = nullptr);

/// Accumulates gradients for d(loss)/d(prediction) = upstream into all
/// trainable blocks. The autoencoder is treated as frozen.
void contextual_backward(ContextualModel& m, const ContextualTrace& trace, double upstream);

/// Raw-scale prediction (denormalized, not clipped).
double contextual_predict(const ContextualModel& m, int user, int item, const Vec& context);

/// Rating-free bottleneck code for (user, item, context).
Vec contextual_encode(const ContextualModel& m, int user, int item, const Vec& context);

struct ContextualHyperparams {
  int d_user = 16;
  int d_item = 16;
  int d_context = 8;
  int d_ui = 8;  // neucmf UI-tower embedding size

  int bottleneck = 16;
  std::vector<int> ae_hidden{128, 64};  // encoder widths before the bottleneck
  int pretrain_epochs = 30;
  double pretrain_learning_rate = 1e-3;
  bool pretrain_refeeding = true;

  std::vector<int> head_hidden{64, 32};
  int epochs = 100;
  int patience = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double lambda = 1e-4;  // optimizer weight decay; also the AE penalty weight
  bool ui_branch = false;
  OptimizerKind optimizer = OptimizerKind::adam;

  void validate(ContextualKind kind) const;
};

/// proposed: phase 1 pretrains the autoencoder on full input vectors with
/// the rating slot filled (dense refeeding optional); phase 2 freezes it,
/// precomputes rating-free codes, and trains embeddings + head by minibatch
/// MSE on the normalized scale. neucmf trains end to end with the same loop.
/// Early stopping on calibration RMSE when `cal` is given.
ContextualModel train_contextual(ContextualKind kind, const RatingsDataset& train,
                                 const RatingsDataset* cal, const ContextualHyperparams& hp,
                                 std::uint64_t seed, TrainTrace* trace = nullptr);

}  // namespace confrec
