#pragma once

#include "dataset.hpp"
#include "layers.hpp"

namespace confrec {

/// Autoencoder: encoder down to a bottleneck, decoder mirroring it back.
/// lambda weights the (lambda/2) * sum |W|_F^2 penalty over the weight
/// matrices of both halves (biases excluded).
struct Autoencoder {
  Mlp encoder;
  Mlp decoder;
  double lambda = 1e-4;

  /// dims: input -> hidden... -> bottleneck (encoder), mirrored decoder.
  /// Hidden layers use `hidden_act`, the decoder output is `output_act`.
  static Autoencoder make(int input_dim, const std::vector<int>& hidden, double lambda,
                          std::uint64_t seed, Activation hidden_act = Activation::sigmoid,
                          Activation output_act = Activation::identity);

  int input_dim() const { return encoder.input_dim(); }
  int bottleneck_dim() const { return encoder.output_dim(); }
  void collect_params(std::vector<ParamBlock*>& out);
  double weight_frobenius_sq() const;
};

struct AeTrace {
  MlpTrace enc;
  MlpTrace dec;
};

/// Full reconstruction pass h(r; theta) = Dec(Enc(r)).
Vec autorec_forward(const Autoencoder& ae, const Vec& r, AeTrace* trace = nullptr);

/// z = Enc(x).
Vec encode_bottleneck(const Autoencoder& ae, const Vec& x);

/// Backprop of d(loss)/d(reconstruction); accumulates parameter gradients.
/// When `add_penalty` is set, also adds the lambda * W penalty gradients.
void autorec_backward(Autoencoder& ae, const AeTrace& trace, const Vec& grad_recon,
                      bool add_penalty);

/// Masked squared error: sum over observed entries of (target - recon)^2,
/// plus (lambda/2) * sum |W|_F^2 over the autoencoder weights. grad_recon is
/// zero at unobserved entries. Throws DataError on an empty mask.
struct MmseResult {
  double loss = 0.0;
  double data_loss = 0.0;
  Vec grad_recon;
};

MmseResult mmse_loss(const SparseVector& target, const Vec& recon, const Autoencoder& params);

/// Treats a dense vector as fully observed (mask = all indices).
SparseVector dense_target(Vec values);

/// One dense-refeeding update:
///   1. forward f(x), masked loss, backward, optimizer step;
///   2. forward f(f(x)) on the first output, full-mask loss against f(x),
///      backward, second optimizer step.
struct RefeedResult {
  double first_loss = 0.0;
  double second_loss = 0.0;
  Vec refed_input;  // f(x) from the first pass, fully dense
};

RefeedResult dense_refeed_step(Autoencoder& ae, const SparseVector& x, OptimizerState& opt);

struct AutorecHyperparams {
  std::vector<int> hidden{64};  // widths of encoder layers; last is the bottleneck
  double learning_rate = 1e-3;
  double lambda = 1e-4;
  int epochs = 200;
  int patience = 10;
  bool dense_refeeding = false;
  bool item_based = false;
  OptimizerKind optimizer = OptimizerKind::adam;

  void validate() const;  // throws ConfigError
};

/// AutoRec-style model: one sparse mean-rating vector per user (or item),
/// reconstructed by the autoencoder. Reconstructions are cached for
/// prediction and rebuilt deterministically after load.
struct AutorecModel {
  bool item_based = false;
  Autoencoder ae;
  std::vector<SparseVector> inputs;
  DenseMatrix reconstructions;  // rows x input_dim
  double global_mean = 0.0;
};

AutorecModel train_autorec(const RatingsDataset& train, const RatingsDataset* cal,
                           const AutorecHyperparams& hp, std::uint64_t seed,
                           TrainTrace* trace = nullptr);

/// Recomputes the cached reconstructions from the current parameters.
void autorec_refresh(AutorecModel& m);

double autorec_predict(const AutorecModel& m, int u, int i);

}  // namespace confrec
