#pragma once

#include "autorec.hpp"
#include "baselines.hpp"
#include "contextual.hpp"
#include "dataset.hpp"

namespace confrec {

enum class ModelKind {
  global_mean,
  itemknn,
  userknn,
  mf,
  biasedmf,
  camfc,
  autorec_u,
  autorec_i,
  deep_ae,
  neucmf0i,
  proposed,
};

std::string model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& s);

/// Immutable trained predictor plus everything needed to use it later:
/// vocabularies, context schema, rating scale/normalization. Exactly one of
/// the parameter members is meaningful, selected by `kind`.
struct TrainedModel {
  ModelKind kind = ModelKind::global_mean;
  std::string dataset_name;
  ContextSchema schema;
  RatingScale scale;
  RatingNorm norm = RatingNorm::minmax;
  Vocab users;
  Vocab items;
  double global_mean = 0.0;

  CAMFCParams factorized;      // mf / biasedmf / camfc
  KnnModel knn;                // itemknn / userknn
  AutorecModel autorec;        // autorec_u / autorec_i / deep_ae
  ContextualModel contextual;  // proposed / neucmf0i

  /// True when the model carries an autoencoder usable for the
  /// reconstruction nonconformity score.
  bool has_autoencoder() const;
  const Autoencoder& autoencoder() const;  // throws ConfigError when absent

  /// Raw-scale prediction, unclipped; clipping is a reporting concern.
  double predict(int user, int item, const Vec& context) const;
  double predict_clipped(int user, int item, const Vec& context) const;
};

/// Binary container (MessagePack) with kind tag, schema/vocab snapshot and
/// bit-exact parameter blobs. Overwrites `path`.
void save_model(const TrainedModel& m, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace confrec
