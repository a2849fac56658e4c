#pragma once

#include "dataset.hpp"
#include "layers.hpp"

namespace confrec {

/// Factor model parameters shared by plain MF, biased MF and CAMF-C.
struct MFParams {
  DenseMatrix user_factors;  // |users| x k
  DenseMatrix item_factors;  // |items| x k
  Vec user_bias;
  Vec item_bias;
  double global_mean = 0.0;
};

/// u_i . v_j (no biases); clipping happens at the report boundary.
double mf_predict(const MFParams& p, int u, int i);

/// global_mean + b_u + b_i + u_i . v_j
double biasedmf_predict(const MFParams& p, int u, int i);

struct CAMFCParams {
  MFParams base;
  Vec context_bias;  // one entry per context vector component
};

/// biasedmf_predict plus sum_d c_d * context_bias_d.
double camfc_predict(const CAMFCParams& p, int u, int i, const Vec& context);

enum class FactorizedKind { mf, biasedmf, camfc };

struct FactorizedHyperparams {
  int factors = 16;
  double learning_rate = 5e-3;
  double lambda = 1e-4;  // penalty coefficient on lambda * (|factors|^2 + |biases|^2)
  int epochs = 100;
  int batch_size = 32;
  int patience = 10;
  OptimizerKind optimizer = OptimizerKind::adam;
  bool freeze_context_bias = false;  // test hook for the CAMF-C nesting property

  void validate() const;  // throws ConfigError
};

/// Minibatch gradient training of the squared-error objective
///   (1/n) sum (pred - r)^2 + lambda * (|factors|^2 + |biases|^2).
/// With `cal` non-null, stops early on calibration RMSE (patience epochs)
/// and restores the best parameters. Deterministic per seed. Throws
/// TrainError on divergence.
CAMFCParams train_factorized(FactorizedKind kind, const RatingsDataset& train,
                             const RatingsDataset* cal, const FactorizedHyperparams& hp,
                             std::uint64_t seed, TrainTrace* trace = nullptr);

enum class KnnMode { item, user };

struct KnnModel {
  KnnMode mode = KnnMode::item;
  int k = 20;
  double shrink = 10.0;
  double global_mean = 0.0;
  /// Mean rating per (user, item) pair from the training data; rows indexed
  /// by user, each entry (item, rating), sorted by item.
  std::vector<std::vector<std::pair<int, double>>> ratings_by_user;
  std::vector<std::vector<std::pair<int, double>>> ratings_by_item;
  /// Symmetric similarity matrix (items x items or users x users), shrunk
  /// cosine over mean-rating vectors; diagonal zero.
  DenseMatrix similarity;
};

/// Builds the rating table and the full similarity matrix.
KnnModel knn_build(KnnMode mode, int k, double shrink, const RatingsDataset& train);

/// Recomputes ratings_by_item and the similarity matrix from an existing
/// ratings_by_user table (used after loading a persisted model).
void knn_rebuild(KnnModel& m, int n_items);

/// Similarity-weighted mean over the k most similar co-rated neighbors with
/// positive similarity; global mean when no neighbor qualifies.
double knn_predict(const KnnModel& m, int u, int i);

}  // namespace confrec
