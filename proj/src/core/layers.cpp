#include "layers.hpp"

#include <algorithm>
#include <cmath>

namespace confrec {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_name(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation: " + s);
}

double activate_scalar(Activation a, double x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
  }
  return x;
}

Vec activate(Activation a, const Vec& x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = activate_scalar(a, x[i]);
  return y;
}

Vec activation_backward(Activation a, const Vec& post, const Vec& upstream) {
  if (post.size() != upstream.size()) throw DataError("activation_backward: length mismatch");
  Vec dx(post.size());
  for (std::size_t i = 0; i < post.size(); ++i) {
    double d = 1.0;
    switch (a) {
      case Activation::identity: d = 1.0; break;
      case Activation::sigmoid: d = post[i] * (1.0 - post[i]); break;
      case Activation::relu: d = post[i] > 0.0 ? 1.0 : 0.0; break;
      case Activation::tanh: d = 1.0 - post[i] * post[i]; break;
    }
    dx[i] = d * upstream[i];
  }
  return dx;
}

Vec affine_forward(const DenseMatrix& W, const Vec& b, const Vec& x, AffineCache* cache) {
  if (W.rows != static_cast<int>(b.size()))
    throw DataError("affine_forward: bias length does not match output dim");
  Vec y = matvec(W, x);
  for (int i = 0; i < W.rows; ++i) y[i] += b[i];
  if (cache) {
    cache->W = &W;
    cache->x = x;
  }
  return y;
}

Vec affine_backward(const AffineCache& cache, const Vec& upstream, DenseMatrix& grad_W,
                    Vec& grad_b) {
  if (!cache.W) throw DataError("affine_backward: cache not populated by a forward call");
  const DenseMatrix& W = *cache.W;
  if (static_cast<int>(upstream.size()) != W.rows ||
      static_cast<int>(cache.x.size()) != W.cols)
    throw DataError("affine_backward: cache does not match upstream gradient");
  if (!grad_W.same_shape(W) || static_cast<int>(grad_b.size()) != W.rows)
    throw DataError("affine_backward: gradient buffers have wrong shape");
  add_outer(grad_W, upstream, cache.x);
  for (int i = 0; i < W.rows; ++i) grad_b[i] += upstream[i];
  return matvec_transposed(W, upstream);
}

Mlp Mlp::make(const std::vector<int>& dims, const std::vector<Activation>& acts,
              const std::string& name_prefix, std::uint64_t seed, InitScheme scheme) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw DataError("Mlp::make: need n+1 dims for n activations");
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    const std::string id = name_prefix + std::to_string(l);
    layer.W = ParamBlock(id + ".W", init_params(dims[l + 1], dims[l], scheme,
                                                substream_seed(seed, id + ".W")));
    layer.b = ParamBlock(id + ".b", DenseMatrix(1, dims[l + 1], 0.0));
    layer.act = acts[l];
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

void Mlp::collect_params(std::vector<ParamBlock*>& out) {
  for (auto& layer : layers) {
    out.push_back(&layer.W);
    out.push_back(&layer.b);
  }
}

double Mlp::weight_frobenius_sq() const {
  double s = 0.0;
  for (const auto& layer : layers) s += frobenius_sq(layer.W.value);
  return s;
}

Vec mlp_forward(const Mlp& mlp, const Vec& x, MlpTrace* trace) {
  if (trace) {
    trace->input = x;
    trace->post.clear();
  }
  Vec h = x;
  for (const auto& layer : mlp.layers) {
    Vec pre = matvec(layer.W.value, h);
    for (int i = 0; i < layer.W.value.rows; ++i) pre[i] += layer.b.value.data[i];
    h = activate(layer.act, pre);
    if (trace) trace->post.push_back(h);
  }
  return h;
}

Vec mlp_backward(Mlp& mlp, const MlpTrace& trace, Vec upstream) {
  if (trace.post.size() != mlp.layers.size())
    throw DataError("mlp_backward: trace does not match network depth");
  for (int l = static_cast<int>(mlp.layers.size()) - 1; l >= 0; --l) {
    auto& layer = mlp.layers[l];
    Vec dpre = activation_backward(layer.act, trace.post[l], upstream);
    const Vec& input = (l == 0) ? trace.input : trace.post[l - 1];
    add_outer(layer.W.grad, dpre, input);
    for (std::size_t i = 0; i < dpre.size(); ++i) layer.b.grad.data[i] += dpre[i];
    upstream = matvec_transposed(layer.W.value, dpre);
  }
  return upstream;
}

void optimizer_step(OptimizerState& state, std::span<ParamBlock* const> blocks) {
  if (state.m.empty() && state.kind == OptimizerKind::adam) {
    for (const ParamBlock* b : blocks) {
      state.m.emplace_back(b->value.rows, b->value.cols, 0.0);
      state.v.emplace_back(b->value.rows, b->value.cols, 0.0);
    }
  }
  if (state.kind == OptimizerKind::adam && state.m.size() != blocks.size())
    throw TrainError("optimizer_step: parameter list changed between steps");

  for (const ParamBlock* b : blocks)
    if (!all_finite(b->grad))
      throw TrainError("non-finite gradient in parameter block '" + b->name +
                       "'; try a lower learning rate");

  ++state.step_count;
  const double lr = state.learning_rate;
  const double wd = state.weight_decay;

  if (state.kind == OptimizerKind::sgd) {
    for (ParamBlock* b : blocks) {
      for (std::size_t i = 0; i < b->value.data.size(); ++i)
        b->value.data[i] -= lr * (b->grad.data[i] + wd * b->value.data[i]);
      b->zero_grad();
    }
    return;
  }

  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    ParamBlock* b = blocks[k];
    if (!b->value.same_shape(state.m[k]))
      throw TrainError("optimizer_step: shape of block '" + b->name + "' changed");
    for (std::size_t i = 0; i < b->value.data.size(); ++i) {
      const double g = b->grad.data[i] + wd * b->value.data[i];
      double& m = state.m[k].data[i];
      double& v = state.v[k].data[i];
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      b->value.data[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
    b->zero_grad();
  }
}

double finite_diff_check(std::span<ParamBlock* const> blocks,
                         const std::function<double(bool)>& loss_fn, double epsilon) {
  for (ParamBlock* b : blocks) b->zero_grad();
  loss_fn(true);
  std::vector<DenseMatrix> analytic;
  analytic.reserve(blocks.size());
  for (ParamBlock* b : blocks) {
    analytic.push_back(b->grad);
    b->zero_grad();
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    ParamBlock* b = blocks[k];
    for (std::size_t i = 0; i < b->value.data.size(); ++i) {
      const double saved = b->value.data[i];
      b->value.data[i] = saved + epsilon;
      const double lp = loss_fn(false);
      b->value.data[i] = saved - epsilon;
      const double lm = loss_fn(false);
      b->value.data[i] = saved;
      const double fd = (lp - lm) / (2.0 * epsilon);
      const double an = analytic[k].data[i];
      const double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace confrec
