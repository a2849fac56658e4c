#include "metrics.hpp"

#include <cmath>
#include <cstdlib>

namespace confrec {

static void check_lengths(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) throw DataError(std::string(what) + ": length mismatch");
  if (a.empty()) throw DataError(std::string(what) + ": empty input");
}

double metric_mae(const Vec& predictions, const Vec& truths) {
  check_lengths(predictions, truths, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) s += std::fabs(predictions[i] - truths[i]);
  return s / static_cast<double>(predictions.size());
}

double metric_rmse(const Vec& predictions, const Vec& truths) {
  check_lengths(predictions, truths, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - truths[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(predictions.size()));
}

}  // namespace confrec
