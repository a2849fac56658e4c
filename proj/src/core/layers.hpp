#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dense.hpp"

namespace confrec {

/// Named parameter tensor with a gradient buffer of the same shape.
struct ParamBlock {
  std::string name;
  DenseMatrix value;
  DenseMatrix grad;

  ParamBlock() = default;
  ParamBlock(std::string n, DenseMatrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows, value.cols, 0.0) {}

  void zero_grad() { grad.fill(0.0); }
};

enum class Activation { identity, sigmoid, relu, tanh };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& s);

double activate_scalar(Activation a, double x);
Vec activate(Activation a, const Vec& x);

/// Elementwise dy/dx computed from the post-activation value y:
///   identity -> 1, sigmoid -> y(1-y), tanh -> 1-y^2, relu -> [y > 0].
Vec activation_backward(Activation a, const Vec& post, const Vec& upstream);

/// Cache for one affine stage; backward needs the input that produced it.
struct AffineCache {
  const DenseMatrix* W = nullptr;
  Vec x;
};

/// y = W x + b. W is out x in, b has length out.
Vec affine_forward(const DenseMatrix& W, const Vec& b, const Vec& x, AffineCache* cache = nullptr);

/// Exact gradients of the affine map. grad_W/grad_b are accumulated into,
/// grad_x is returned. Throws on a cache that does not match `upstream`.
Vec affine_backward(const AffineCache& cache, const Vec& upstream, DenseMatrix& grad_W,
                    Vec& grad_b);

/// Stack of affine+activation layers with hand-paired forward/backward.
struct Mlp {
  struct Layer {
    ParamBlock W;  // out x in
    ParamBlock b;  // 1 x out
    Activation act = Activation::identity;
  };
  std::vector<Layer> layers;

  /// dims = {in, h1, ..., out}; acts has dims.size()-1 entries.
  static Mlp make(const std::vector<int>& dims, const std::vector<Activation>& acts,
                  const std::string& name_prefix, std::uint64_t seed,
                  InitScheme scheme = InitScheme::uniform_scaled);

  int input_dim() const { return layers.empty() ? 0 : layers.front().W.value.cols; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().W.value.rows; }

  void collect_params(std::vector<ParamBlock*>& out);
  double weight_frobenius_sq() const;  // sum over W matrices only, biases excluded
};

struct MlpTrace {
  Vec input;
  std::vector<Vec> post;  // post-activation output of each layer
};

Vec mlp_forward(const Mlp& mlp, const Vec& x, MlpTrace* trace = nullptr);

/// Accumulates parameter gradients, returns gradient w.r.t. the input.
Vec mlp_backward(Mlp& mlp, const MlpTrace& trace, Vec upstream);

enum class OptimizerKind { sgd, adam };

/// Per-parameter optimizer state. Adam moments are allocated lazily on the
/// first step and keyed by block order, which must stay stable.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;  // sgd: w -= lr*(g + wd*w); adam decays via g' = g + wd*w
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  std::vector<DenseMatrix> m;
  std::vector<DenseMatrix> v;
};

/// One optimizer step over `blocks`; gradients are zeroed afterwards.
/// Throws TrainError naming the block if a gradient is non-finite.
void optimizer_step(OptimizerState& state, std::span<ParamBlock* const> blocks);

/// Per-epoch training record shared by all trainers.
struct TrainTrace {
  std::vector<double> train_loss;
  std::vector<double> cal_rmse;  // empty when no calibration set given
  int best_epoch = -1;
};

/// Central-difference check of analytic gradients. `loss_fn(false)` returns
/// the loss; `loss_fn(true)` must also accumulate gradients into the blocks
/// (which are zeroed first). Returns the worst relative error
/// |fd - analytic| / max(1, |fd|, |analytic|).
double finite_diff_check(std::span<ParamBlock* const> blocks,
                         const std::function<double(bool with_grad)>& loss_fn,
                         double epsilon = 1e-5);

}  // namespace confrec
