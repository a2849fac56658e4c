#include "conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace confrec {

std::string nonconformity_mode_name(NonconformityMode m) {
  return m == NonconformityMode::residual ? "residual" : "reconstruction";
}

NonconformityMode nonconformity_mode_from_name(const std::string& s) {
  if (s == "residual") return NonconformityMode::residual;
  if (s == "reconstruction") return NonconformityMode::reconstruction;
  throw ConfigError("unknown nonconformity mode '" + s + "'");
}

double nonconformity_score(const TrainedModel& model, const Interaction& ex,
                           NonconformityMode mode) {
  if (mode == NonconformityMode::residual)
    return std::fabs(ex.rating - model.predict(ex.user, ex.item, ex.context));

  if (!model.has_autoencoder())
    throw ConfigError("reconstruction nonconformity needs an autoencoder model, got '" +
                      model_kind_name(model.kind) + "'");

  if (model.kind == ModelKind::proposed) {
    const Vec x = build_input_vector(ex.user, ex.item, ex.context, std::nullopt,
                                     model.contextual.n_users, model.contextual.n_items);
    const Vec recon = autorec_forward(model.contextual.ae, x);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - recon[j];
      s += d * d;
    }
    return s;
  }

  // AutoRec-family models reconstruct a sparse rating vector; unobserved
  // slots are placeholders, so the score runs over observed entries only.
  const AutorecModel& ar = model.autorec;
  const int row = ar.item_based ? ex.item : ex.user;
  if (row < 0 || row >= ar.reconstructions.rows)
    throw DataError("nonconformity: index out of range");
  const SparseVector& in = ar.inputs[static_cast<std::size_t>(row)];
  double s = 0.0;
  for (int j : in.mask) {
    const double d = in.values[static_cast<std::size_t>(j)] - ar.reconstructions.at(row, j);
    s += d * d;
  }
  return s;
}

Vec compute_conformity_scores(const TrainedModel& model, const RatingsDataset& cal,
                              NonconformityMode mode) {
  if (cal.interactions.empty()) throw DataError("conformal: empty calibration set");
  Vec scores;
  scores.reserve(cal.interactions.size());
  for (std::size_t i = 0; i < cal.interactions.size(); ++i) {
    try {
      scores.push_back(nonconformity_score(model, cal.interactions[i], mode));
    } catch (const DataError& e) {
      throw DataError("calibration example " + std::to_string(i) + ": " + e.what());
    }
  }
  return scores;
}

double calibrate(const Vec& scores, double epsilon) {
  if (scores.empty()) throw DataError("calibrate: empty score list");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("calibrate: epsilon must be in (0,1)");
  for (double s : scores)
    if (!std::isfinite(s)) throw DataError("calibrate: non-finite score");

  const std::size_t n = scores.size();
  // Guard against float noise pushing an exactly-integer rank over the next
  // integer (e.g. 10 * 0.9 = 9.000000000000002).
  const double exact = (static_cast<double>(n) + 1.0) * (1.0 - epsilon);
  const auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  if (rank > n) return std::numeric_limits<double>::infinity();

  Vec copy = scores;
  auto nth = copy.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(copy.begin(), nth, copy.end());
  return *nth;
}

CalibrationState make_calibration_state(NonconformityMode mode, double epsilon,
                                        std::size_t capacity) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ConfigError("calibration state: epsilon must be in (0,1)");
  CalibrationState s;
  s.mode = mode;
  s.epsilon = epsilon;
  s.capacity = capacity;
  return s;
}

static void recompute_tau(CalibrationState& s) {
  if (s.scores.empty()) {
    s.tau = 0.0;
    return;
  }
  s.tau = calibrate(Vec(s.scores.begin(), s.scores.end()), s.epsilon);
}

void state_set_scores(CalibrationState& s, const Vec& scores) {
  s.scores.clear();
  for (double x : scores) {
    if (!std::isfinite(x)) throw DataError("calibration state: non-finite score");
    s.scores.push_back(x);
    if (s.capacity > 0 && s.scores.size() > s.capacity) s.scores.pop_front();
  }
  recompute_tau(s);
}

void window_update(CalibrationState& s, double new_score) {
  if (!std::isfinite(new_score)) throw DataError("window update: non-finite score");
  s.scores.push_back(new_score);
  if (s.capacity > 0 && s.scores.size() > s.capacity) s.scores.pop_front();
  recompute_tau(s);
}

PredictionInterval predict_interval(const TrainedModel& model, int user, int item,
                                    const Vec& context, const CalibrationState& state) {
  if (!state.calibrated()) throw DataError("predict_interval: calibration state has no scores");
  const double yhat = model.predict(user, item, context);
  PredictionInterval iv;
  iv.epsilon = state.epsilon;
  if (std::isinf(state.tau)) {
    iv.lower = model.scale.min;
    iv.upper = model.scale.max;
    iv.center = model.scale.clip(yhat);
  } else {
    iv.center = yhat;
    iv.lower = yhat - state.tau;
    iv.upper = yhat + state.tau;
  }
  return iv;
}

PredictionInterval clip_interval(const PredictionInterval& iv, const RatingScale& scale) {
  PredictionInterval out = iv;
  out.center = scale.clip(iv.center);
  out.lower = scale.clip(iv.lower);
  out.upper = scale.clip(iv.upper);
  return out;
}

double empirical_coverage(const std::vector<PredictionInterval>& intervals, const Vec& truths) {
  if (intervals.size() != truths.size()) throw DataError("coverage: length mismatch");
  if (intervals.empty()) throw DataError("coverage: empty input");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i)
    if (intervals[i].covers(truths[i])) ++covered;
  return static_cast<double>(covered) / static_cast<double>(intervals.size());
}

double average_width(const std::vector<PredictionInterval>& intervals) {
  if (intervals.empty()) throw DataError("average width: empty interval list");
  double s = 0.0;
  for (const auto& iv : intervals) s += iv.width();
  return s / static_cast<double>(intervals.size());
}

}  // namespace confrec
