#pragma once

#include <deque>

#include "model.hpp"

namespace confrec {

/// residual: |y - yhat| on the rating scale (standard split conformal; the
/// coverage guarantee applies). reconstruction: squared L2 norm of
/// input-minus-reconstruction from the model's autoencoder with the rating
/// slot fixed to 0; kept because it is the score the source framework
/// defines, even though it is not in rating units.
enum class NonconformityMode { residual, reconstruction };

std::string nonconformity_mode_name(NonconformityMode m);
NonconformityMode nonconformity_mode_from_name(const std::string& s);

double nonconformity_score(const TrainedModel& model, const Interaction& example,
                           NonconformityMode mode);

/// One score per calibration example, in dataset order. Per-example errors
/// are rethrown with the example index attached.
Vec compute_conformity_scores(const TrainedModel& model, const RatingsDataset& cal,
                              NonconformityMode mode);

/// The ceil((n+1)(1-epsilon))-th smallest score. When that rank exceeds n
/// (calibration set too small for the requested confidence) returns +inf;
/// the interval then degrades to the full rating scale.
double calibrate(const Vec& scores, double epsilon);

/// Ordered score buffer with a derived threshold. capacity 0 = unbounded
/// (batch mode); a positive capacity gives sliding-window behavior.
struct CalibrationState {
  NonconformityMode mode = NonconformityMode::residual;
  double epsilon = 0.1;
  std::size_t capacity = 0;
  std::deque<double> scores;
  double tau = 0.0;  // meaningful only when calibrated()

  bool calibrated() const { return !scores.empty(); }
};

CalibrationState make_calibration_state(NonconformityMode mode, double epsilon,
                                        std::size_t capacity = 0);

/// Replaces the buffer contents (keeping the most recent `capacity` scores
/// when bounded) and recomputes tau.
void state_set_scores(CalibrationState& s, const Vec& scores);

/// Appends one score, evicts the oldest beyond capacity, recomputes tau.
/// Throws DataError on a non-finite score.
void window_update(CalibrationState& s, double new_score);

struct PredictionInterval {
  double center = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double epsilon = 0.0;

  double width() const { return upper - lower; }
  bool covers(double y) const { return y >= lower && y <= upper; }  // closed interval
};

/// [yhat - tau, yhat + tau] around the raw (unclipped) prediction. With the
/// +inf sentinel the interval materializes as the full rating scale (and the
/// center is clipped into it), so its width stays the scale span.
PredictionInterval predict_interval(const TrainedModel& model, int user, int item,
                                    const Vec& context, const CalibrationState& state);

/// Intersection with the rating scale, for presentation only; coverage math
/// uses the raw interval.
PredictionInterval clip_interval(const PredictionInterval& iv, const RatingScale& scale);

/// Fraction of truths inside their (closed, unclipped) intervals.
double empirical_coverage(const std::vector<PredictionInterval>& intervals, const Vec& truths);

double average_width(const std::vector<PredictionInterval>& intervals);

}  // namespace confrec
