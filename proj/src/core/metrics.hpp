#pragma once

#include "dense.hpp"

namespace confrec {

/// (1/n) sum |pred - truth|. Throws DataError on empty or mismatched input.
double metric_mae(const Vec& predictions, const Vec& truths);

/// sqrt((1/n) sum (pred - truth)^2). Same error contract as metric_mae.
double metric_rmse(const Vec& predictions, const Vec& truths);

}  // namespace confrec
