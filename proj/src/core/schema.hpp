#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dense.hpp"

namespace confrec {

enum class FeatureKind { nominal, ordinal, quantitative };

std::string feature_kind_name(FeatureKind k);
FeatureKind feature_kind_from_name(const std::string& s);

/// One contextual feature. Nominal features carry a finite value domain and
/// encode as a one-hot block; ordinal and quantitative features carry
/// (min, max) bounds and encode as (v - min) / (max - min).
struct ContextFeature {
  std::string name;
  FeatureKind kind = FeatureKind::nominal;
  std::vector<std::string> domain;  // nominal only
  double min = 0.0;                 // ordinal/quantitative only
  double max = 1.0;

  int width() const { return kind == FeatureKind::nominal ? static_cast<int>(domain.size()) : 1; }
};

struct ContextSchema {
  std::vector<ContextFeature> features;

  int dimension() const;
  int feature_offset(int feature_index) const;
  const ContextFeature* find(const std::string& name, int* index = nullptr) const;

  /// Throws DataError on duplicate names, empty nominal domains, or
  /// min >= max bounds.
  void validate() const;
};

/// Raw feature values as read from a file or the command line. An absent or
/// empty value means "missing" and encodes to an all-zero block.
using RawContext = std::map<std::string, std::string>;

/// Encodes raw values against the schema into a fixed-length vector in [0,1].
/// Unknown feature names, nominal values outside the domain, and numeric
/// values outside bounds all throw DataError naming the feature.
Vec encode_context(const ContextSchema& schema, const RawContext& raw);

/// Inverse of the one-hot encoding for a single nominal feature; returns
/// nullopt when the block is all zero (missing feature).
std::optional<std::string> decode_nominal(const ContextSchema& schema, int feature_index,
                                          const Vec& context);

/// Checks the ContextVector invariants: dimension, components in [0,1], and
/// each one-hot block summing to exactly 0 or 1.
bool context_vector_valid(const ContextSchema& schema, const Vec& context);

}  // namespace confrec
