#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"

namespace confrec {

using Vec = std::vector<double>;

/// Row-major dense matrix of doubles. This is the only tensor type in the
/// toolkit; vectors are plain Vec or 1-row matrices.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  Vec data;  // rows * cols, row-major

  DenseMatrix() = default;
  DenseMatrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw DataError("DenseMatrix: negative dimensions");
  }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }

  Vec row_vec(int r) const { return Vec(row(r), row(r) + cols); }

  std::size_t size() const { return data.size(); }

  bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(const DenseMatrix& m) { return all_finite(m.data); }

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);

/// y = W x, W is out x in.
Vec matvec(const DenseMatrix& W, const Vec& x);

/// y = W^T x, W is out x in, x has length out.
Vec matvec_transposed(const DenseMatrix& W, const Vec& x);

/// A += scale * u v^T (u has length A.rows, v length A.cols).
void add_outer(DenseMatrix& A, const Vec& u, const Vec& v, double scale = 1.0);

double frobenius_sq(const DenseMatrix& m);

/// Cosine similarity p.q / (|p| |q|). Throws DataError on a zero-norm input.
double cosine_similarity(const Vec& p, const Vec& q);

/// Length-`dimension` vector with a single 1 at `index`.
Vec one_hot(int index, int dimension);

enum class InitScheme { uniform_scaled, zeros };

/// uniform_scaled draws from U(-b, b) with b = sqrt(6 / (fan_in + fan_out)),
/// fan_in = cols, fan_out = rows. Deterministic per seed.
DenseMatrix init_params(int rows, int cols, InitScheme scheme, std::uint64_t seed);

}  // namespace confrec
