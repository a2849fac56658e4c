#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "schema.hpp"

namespace confrec {

struct RatingScale {
  double min = 1.0;
  double max = 5.0;
  double span() const { return max - min; }
  double clip(double r) const { return r < min ? min : (r > max ? max : r); }
};

/// How raw ratings map to [0,1] for the networks' input/output scale.
/// minmax: (r - min) / (max - min); max_ratio: r / max.
enum class RatingNorm { minmax, max_ratio };

std::string rating_norm_name(RatingNorm n);
RatingNorm rating_norm_from_name(const std::string& s);
double normalize_rating(double r, const RatingScale& s, RatingNorm n);
double denormalize_rating(double y, const RatingScale& s, RatingNorm n);

struct Interaction {
  int user = 0;
  int item = 0;
  Vec context;         // encoded per schema
  RawContext context_raw;
  double rating = 0.0;
  double rating_normalized = 0.0;
};

/// Bidirectional id <-> dense index map; indices follow first appearance.
struct Vocab {
  std::vector<std::string> ids;
  std::unordered_map<std::string, int> index;

  int add_or_get(const std::string& id);
  int lookup(const std::string& id) const;  // -1 if absent
  int size() const { return static_cast<int>(ids.size()); }
};

struct RatingsDataset {
  std::vector<Interaction> interactions;
  Vocab users;
  Vocab items;
  ContextSchema schema;
  RatingScale scale;
  RatingNorm norm = RatingNorm::minmax;
  std::string name = "dataset";

  int num_users() const { return users.size(); }
  int num_items() const { return items.size(); }
  std::size_t size() const { return interactions.size(); }

  int distinct_contexts() const;
  /// interactions / (users * items)
  double density_pairs() const;
  /// interactions / (users * items * distinct observed contexts)
  double density_triples() const;
  double global_mean_rating() const;
};

enum class DatasetFormat { depaul, tripadvisor, comoda, generic };

std::string dataset_format_name(DatasetFormat f);
DatasetFormat dataset_format_from_name(const std::string& s);

/// Built-in schemas and column names for the real datasets; `generic` has an
/// empty schema and columns user/item/rating, both meant to be overridden
/// from the experiment config.
ContextSchema default_schema(DatasetFormat f);

struct ColumnMap {
  std::string user = "user";
  std::string item = "item";
  std::string rating = "rating";
  std::unordered_map<std::string, std::string> features;  // feature name -> column name

  std::string feature_column(const std::string& feature) const;
};

ColumnMap default_columns(DatasetFormat f);

struct LoadOptions {
  RatingScale scale;
  RatingNorm norm = RatingNorm::minmax;
  ColumnMap columns;
  /// Cells equal to this string count as missing (LDOS-CoMoDa uses "-1").
  std::string missing_marker;
  std::string name = "dataset";
};

LoadOptions default_load_options(DatasetFormat f);

/// Ingests a CSV interaction log (comma separated, first row header, UTF-8).
/// Duplicate (user, item, context) rows keep the last occurrence. Errors
/// carry the 1-based row number.
RatingsDataset load_interactions(const std::string& path, DatasetFormat format,
                                 const ContextSchema& schema, const LoadOptions& opts);

/// Writes the dataset back out as CSV in the same layout load_interactions
/// reads (used by the synth command).
void save_interactions_csv(const RatingsDataset& ds, const std::string& path,
                           const ColumnMap& columns);

struct SplitSpec {
  double train_fraction = 0.7;
  double cal_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 42;

  void validate() const;  // fractions positive, sum to 1, train >= 0.5
};

struct SplitResult {
  RatingsDataset train;
  RatingsDataset cal;
  RatingsDataset test;
};

/// Seeded-shuffle partition. Share sizes are floor(fraction * n) with the
/// remainder assigned to train; vocabularies and schema are shared across
/// the three parts. Throws when any share would be empty.
SplitResult split(const RatingsDataset& ds, const SplitSpec& spec);

/// Sparse rating vector with an explicit observation mask.
struct SparseVector {
  Vec values;             // full length; 0 where unobserved
  std::vector<int> mask;  // sorted observed indices

  bool observed(int i) const;
};

/// Component j = mean rating of the user on item j over observed contexts.
SparseVector user_rating_vector(const RatingsDataset& ds, int user_index);
SparseVector item_rating_vector(const RatingsDataset& ds, int item_index);

/// Planted generative model behind synth_generate; kept so oracle tests can
/// compare a trained model against the ground truth.
struct PlantedParams {
  double global_mean = 0.0;
  Vec user_bias;
  Vec item_bias;
  DenseMatrix user_factors;
  DenseMatrix item_factors;
  Vec context_bias;  // one per context vector component

  double predict(int u, int i, const Vec& context) const;
};

struct SynthSpec {
  int n_users = 30;
  int n_items = 20;
  int n_context_features = 1;
  int n_interactions = 400;
  std::uint64_t seed = 1;

  int rank = 2;
  int context_cardinality = 2;  // values per nominal context feature
  double noise_sd = 0.1;
  double bias_scale = 0.3;      // user/item biases drawn from U(-s, s)
  double factor_scale = 0.5;    // max magnitude of u.v by construction
  double context_strength = 0.0;
  double global_mean = 3.0;
  RatingScale scale{1.0, 5.0};
  RatingNorm norm = RatingNorm::minmax;

  void validate() const;
};

struct SynthResult {
  RatingsDataset dataset;
  PlantedParams planted;
};

/// Draws distinct (user, item) pairs, one context per pair, ratings from the
/// planted low-rank-plus-context-bias model, clipped to the rating scale.
/// Deterministic per seed.
SynthResult synth_generate(const SynthSpec& spec);

}  // namespace confrec
