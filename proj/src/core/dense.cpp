#include "dense.hpp"

#include <algorithm>

namespace confrec {

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DataError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec matvec(const DenseMatrix& W, const Vec& x) {
  if (W.cols != static_cast<int>(x.size()))
    throw DataError("matvec: shape mismatch (" + std::to_string(W.rows) + "x" +
                    std::to_string(W.cols) + " vs length " + std::to_string(x.size()) + ")");
  Vec y(W.rows, 0.0);
  for (int r = 0; r < W.rows; ++r) {
    const double* wr = W.row(r);
    double s = 0.0;
    for (int c = 0; c < W.cols; ++c) s += wr[c] * x[c];
    y[r] = s;
  }
  return y;
}

Vec matvec_transposed(const DenseMatrix& W, const Vec& x) {
  if (W.rows != static_cast<int>(x.size()))
    throw DataError("matvec_transposed: shape mismatch");
  Vec y(W.cols, 0.0);
  for (int r = 0; r < W.rows; ++r) {
    const double* wr = W.row(r);
    const double xr = x[r];
    for (int c = 0; c < W.cols; ++c) y[c] += wr[c] * xr;
  }
  return y;
}

void add_outer(DenseMatrix& A, const Vec& u, const Vec& v, double scale) {
  if (A.rows != static_cast<int>(u.size()) || A.cols != static_cast<int>(v.size()))
    throw DataError("add_outer: shape mismatch");
  for (int r = 0; r < A.rows; ++r) {
    double* ar = A.row(r);
    const double ur = scale * u[r];
    for (int c = 0; c < A.cols; ++c) ar[c] += ur * v[c];
  }
}

double frobenius_sq(const DenseMatrix& m) {
  double s = 0.0;
  for (double x : m.data) s += x * x;
  return s;
}

double cosine_similarity(const Vec& p, const Vec& q) {
  const double np = norm2(p);
  const double nq = norm2(q);
  if (np == 0.0 || nq == 0.0) throw DataError("cosine_similarity: zero-norm input");
  return dot(p, q) / (np * nq);
}

Vec one_hot(int index, int dimension) {
  if (dimension <= 0 || index < 0 || index >= dimension)
    throw DataError("one_hot: index " + std::to_string(index) + " out of range for dimension " +
                    std::to_string(dimension));
  Vec v(dimension, 0.0);
  v[index] = 1.0;
  return v;
}

DenseMatrix init_params(int rows, int cols, InitScheme scheme, std::uint64_t seed) {
  if (rows <= 0 || cols <= 0) throw DataError("init_params: non-positive dimensions");
  DenseMatrix m(rows, cols, 0.0);
  if (scheme == InitScheme::zeros) return m;
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : m.data) x = dist(rng);
  return m;
}

}  // namespace confrec
