#include "schema.hpp"

#include <algorithm>
#include <set>

namespace confrec {

std::string feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::nominal: return "nominal";
    case FeatureKind::ordinal: return "ordinal";
    case FeatureKind::quantitative: return "quantitative";
  }
  return "nominal";
}

FeatureKind feature_kind_from_name(const std::string& s) {
  if (s == "nominal") return FeatureKind::nominal;
  if (s == "ordinal") return FeatureKind::ordinal;
  if (s == "quantitative") return FeatureKind::quantitative;
  throw ConfigError("unknown feature kind: " + s);
}

int ContextSchema::dimension() const {
  int d = 0;
  for (const auto& f : features) d += f.width();
  return d;
}

int ContextSchema::feature_offset(int feature_index) const {
  int off = 0;
  for (int i = 0; i < feature_index; ++i) off += features[i].width();
  return off;
}

const ContextFeature* ContextSchema::find(const std::string& name, int* index) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) {
      if (index) *index = static_cast<int>(i);
      return &features[i];
    }
  }
  return nullptr;
}

void ContextSchema::validate() const {
  std::set<std::string> seen;
  for (const auto& f : features) {
    if (f.name.empty()) throw DataError("schema: feature with empty name");
    if (!seen.insert(f.name).second)
      throw DataError("schema: duplicate feature name '" + f.name + "'");
    if (f.kind == FeatureKind::nominal) {
      if (f.domain.empty())
        throw DataError("schema: nominal feature '" + f.name + "' has empty domain");
      std::set<std::string> vals(f.domain.begin(), f.domain.end());
      if (vals.size() != f.domain.size())
        throw DataError("schema: nominal feature '" + f.name + "' has duplicate domain values");
    } else {
      if (!(f.min < f.max))
        throw DataError("schema: feature '" + f.name + "' bounds must satisfy min < max");
    }
  }
}

Vec encode_context(const ContextSchema& schema, const RawContext& raw) {
  for (const auto& [name, value] : raw) {
    (void)value;
    if (!schema.find(name)) throw DataError("context: unknown feature name '" + name + "'");
  }
  Vec out(schema.dimension(), 0.0);
  int off = 0;
  for (const auto& f : schema.features) {
    auto it = raw.find(f.name);
    const bool missing = (it == raw.end()) || it->second.empty();
    if (!missing) {
      const std::string& v = it->second;
      if (f.kind == FeatureKind::nominal) {
        auto pos = std::find(f.domain.begin(), f.domain.end(), v);
        if (pos == f.domain.end())
          throw DataError("context: value '" + v + "' not in domain of feature '" + f.name + "'");
        out[off + static_cast<int>(pos - f.domain.begin())] = 1.0;
      } else {
        double x = 0.0;
        try {
          std::size_t used = 0;
          x = std::stod(v, &used);
          if (used != v.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw DataError("context: feature '" + f.name + "' has non-numeric value '" + v + "'");
        }
        if (x < f.min || x > f.max)
          throw DataError("context: feature '" + f.name + "' value " + v + " outside bounds [" +
                          std::to_string(f.min) + ", " + std::to_string(f.max) + "]");
        out[off] = (x - f.min) / (f.max - f.min);
      }
    }
    off += f.width();
  }
  return out;
}

std::optional<std::string> decode_nominal(const ContextSchema& schema, int feature_index,
                                          const Vec& context) {
  if (feature_index < 0 || feature_index >= static_cast<int>(schema.features.size()))
    throw DataError("decode_nominal: feature index out of range");
  const ContextFeature& f = schema.features[feature_index];
  if (f.kind != FeatureKind::nominal) throw DataError("decode_nominal: feature is not nominal");
  const int off = schema.feature_offset(feature_index);
  for (int j = 0; j < f.width(); ++j)
    if (context[off + j] == 1.0) return f.domain[j];
  return std::nullopt;
}

bool context_vector_valid(const ContextSchema& schema, const Vec& context) {
  if (static_cast<int>(context.size()) != schema.dimension()) return false;
  for (double x : context)
    if (!(x >= 0.0 && x <= 1.0)) return false;
  int off = 0;
  for (const auto& f : schema.features) {
    if (f.kind == FeatureKind::nominal) {
      double sum = 0.0;
      for (int j = 0; j < f.width(); ++j) sum += context[off + j];
      if (sum != 0.0 && sum != 1.0) return false;
    }
    off += f.width();
  }
  return true;
}

}  // namespace confrec
