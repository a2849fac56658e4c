#include "dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace confrec {

std::string rating_norm_name(RatingNorm n) {
  return n == RatingNorm::minmax ? "minmax" : "max_ratio";
}

RatingNorm rating_norm_from_name(const std::string& s) {
  if (s == "minmax") return RatingNorm::minmax;
  if (s == "max_ratio") return RatingNorm::max_ratio;
  throw ConfigError("unknown rating normalization: " + s);
}

double normalize_rating(double r, const RatingScale& s, RatingNorm n) {
  if (n == RatingNorm::minmax) return (r - s.min) / s.span();
  return r / s.max;
}

double denormalize_rating(double y, const RatingScale& s, RatingNorm n) {
  if (n == RatingNorm::minmax) return s.min + y * s.span();
  return y * s.max;
}

int Vocab::add_or_get(const std::string& id) {
  auto it = index.find(id);
  if (it != index.end()) return it->second;
  const int idx = static_cast<int>(ids.size());
  ids.push_back(id);
  index.emplace(id, idx);
  return idx;
}

int Vocab::lookup(const std::string& id) const {
  auto it = index.find(id);
  return it == index.end() ? -1 : it->second;
}

int RatingsDataset::distinct_contexts() const {
  std::set<Vec> seen;
  for (const auto& x : interactions) seen.insert(x.context);
  return static_cast<int>(seen.size());
}

double RatingsDataset::density_pairs() const {
  if (num_users() == 0 || num_items() == 0) return 0.0;
  return static_cast<double>(interactions.size()) /
         (static_cast<double>(num_users()) * num_items());
}

double RatingsDataset::density_triples() const {
  const int ctx = distinct_contexts();
  if (num_users() == 0 || num_items() == 0 || ctx == 0) return 0.0;
  return static_cast<double>(interactions.size()) /
         (static_cast<double>(num_users()) * num_items() * ctx);
}

double RatingsDataset::global_mean_rating() const {
  if (interactions.empty()) return 0.5 * (scale.min + scale.max);
  double s = 0.0;
  for (const auto& x : interactions) s += x.rating;
  return s / static_cast<double>(interactions.size());
}

std::string dataset_format_name(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::depaul: return "depaul";
    case DatasetFormat::tripadvisor: return "tripadvisor";
    case DatasetFormat::comoda: return "comoda";
    case DatasetFormat::generic: return "generic";
  }
  return "generic";
}

DatasetFormat dataset_format_from_name(const std::string& s) {
  if (s == "depaul") return DatasetFormat::depaul;
  if (s == "tripadvisor") return DatasetFormat::tripadvisor;
  if (s == "comoda") return DatasetFormat::comoda;
  if (s == "generic") return DatasetFormat::generic;
  throw ConfigError("unknown dataset format: " + s);
}

namespace {

ContextFeature nominal(std::string name, std::vector<std::string> domain) {
  ContextFeature f;
  f.name = std::move(name);
  f.kind = FeatureKind::nominal;
  f.domain = std::move(domain);
  return f;
}

std::vector<std::string> int_domain(int n) {
  std::vector<std::string> d;
  for (int i = 1; i <= n; ++i) d.push_back(std::to_string(i));
  return d;
}

}  // namespace

ContextSchema default_schema(DatasetFormat f) {
  ContextSchema s;
  switch (f) {
    case DatasetFormat::depaul:
      s.features = {nominal("Time", {"Weekday", "Weekend"}),
                    nominal("Location", {"Home", "Cinema"}),
                    nominal("Companion", {"Alone", "Family", "Partner"})};
      break;
    case DatasetFormat::tripadvisor:
      s.features = {nominal("TripType", {"Family", "Couples", "Business", "Solo travel",
                                         "Friends"})};
      break;
    case DatasetFormat::comoda:
      s.features = {nominal("time", int_domain(4)),        nominal("daytype", int_domain(3)),
                    nominal("season", int_domain(4)),      nominal("location", int_domain(3)),
                    nominal("weather", int_domain(5)),     nominal("social", int_domain(7)),
                    nominal("endEmo", int_domain(7)),      nominal("dominantEmo", int_domain(7)),
                    nominal("mood", int_domain(3)),        nominal("physical", int_domain(2)),
                    nominal("decision", int_domain(2)),    nominal("interaction", int_domain(2))};
      break;
    case DatasetFormat::generic:
      break;
  }
  return s;
}

std::string ColumnMap::feature_column(const std::string& feature) const {
  auto it = features.find(feature);
  return it == features.end() ? feature : it->second;
}

ColumnMap default_columns(DatasetFormat f) {
  ColumnMap c;
  switch (f) {
    case DatasetFormat::depaul:
      c.user = "userid";
      c.item = "itemid";
      c.rating = "rating";
      break;
    case DatasetFormat::tripadvisor:
      c.user = "UserID";
      c.item = "ItemID";
      c.rating = "Rating";
      break;
    case DatasetFormat::comoda:
      c.user = "userID";
      c.item = "itemID";
      c.rating = "rating";
      break;
    case DatasetFormat::generic:
      break;
  }
  return c;
}

LoadOptions default_load_options(DatasetFormat f) {
  LoadOptions o;
  o.columns = default_columns(f);
  if (f == DatasetFormat::comoda) o.missing_marker = "-1";
  o.name = dataset_format_name(f);
  return o;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

std::string context_key(const std::string& user, const std::string& item, const Vec& ctx) {
  std::string key = user;
  key += '\x1f';
  key += item;
  key += '\x1f';
  key.resize(key.size() + ctx.size() * sizeof(double));
  std::memcpy(key.data() + key.size() - ctx.size() * sizeof(double), ctx.data(),
              ctx.size() * sizeof(double));
  return key;
}

}  // namespace

RatingsDataset load_interactions(const std::string& path, DatasetFormat format,
                                 const ContextSchema& schema, const LoadOptions& opts) {
  (void)format;  // layout differences are fully captured by schema + options
  schema.validate();
  if (!(opts.scale.min < opts.scale.max))
    throw ConfigError("rating scale must satisfy min < max");

  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  const std::vector<std::string> header = parse_csv_line(line);
  std::unordered_map<std::string, int> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], static_cast<int>(i));

  auto require_col = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) throw DataError(path + ": missing required column '" + name + "'");
    return it->second;
  };
  const int user_col = require_col(opts.columns.user);
  const int item_col = require_col(opts.columns.item);
  const int rating_col = require_col(opts.columns.rating);
  std::vector<int> feature_cols;
  for (const auto& f : schema.features)
    feature_cols.push_back(require_col(opts.columns.feature_column(f.name)));

  RatingsDataset ds;
  ds.schema = schema;
  ds.scale = opts.scale;
  ds.norm = opts.norm;
  ds.name = opts.name;

  std::unordered_map<std::string, std::size_t> dedup;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = parse_csv_line(line);
    const std::string at_row = path + " row " + std::to_string(row) + ": ";
    if (fields.size() != header.size())
      throw DataError(at_row + "expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));

    const std::string& user_id = fields[user_col];
    const std::string& item_id = fields[item_col];
    if (user_id.empty() || item_id.empty()) throw DataError(at_row + "empty user or item id");

    double rating = 0.0;
    try {
      std::size_t used = 0;
      rating = std::stod(fields[rating_col], &used);
      if (used != fields[rating_col].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError(at_row + "unparsable rating '" + fields[rating_col] + "'");
    }
    if (rating < opts.scale.min || rating > opts.scale.max)
      throw DataError(at_row + "rating " + fields[rating_col] + " outside scale [" +
                      std::to_string(opts.scale.min) + ", " + std::to_string(opts.scale.max) +
                      "]");

    RawContext raw;
    for (std::size_t fi = 0; fi < schema.features.size(); ++fi) {
      const std::string& cell = fields[feature_cols[fi]];
      if (cell.empty()) continue;
      if (!opts.missing_marker.empty() && cell == opts.missing_marker) continue;
      raw.emplace(schema.features[fi].name, cell);
    }
    Vec ctx;
    try {
      ctx = encode_context(schema, raw);
    } catch (const DataError& e) {
      throw DataError(at_row + e.what());
    }

    Interaction x;
    x.user = ds.users.add_or_get(user_id);
    x.item = ds.items.add_or_get(item_id);
    x.context = std::move(ctx);
    x.context_raw = std::move(raw);
    x.rating = rating;
    x.rating_normalized = normalize_rating(rating, ds.scale, ds.norm);

    const std::string key = context_key(user_id, item_id, x.context);
    auto it = dedup.find(key);
    if (it != dedup.end()) {
      ds.interactions[it->second] = std::move(x);  // keep last occurrence
    } else {
      dedup.emplace(key, ds.interactions.size());
      ds.interactions.push_back(std::move(x));
    }
  }
  return ds;
}

void save_interactions_csv(const RatingsDataset& ds, const std::string& path,
                           const ColumnMap& columns) {
  ensure_parent_dir(path);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file: " + path);
  out << columns.user << ',' << columns.item << ',' << columns.rating;
  for (const auto& f : ds.schema.features) out << ',' << columns.feature_column(f.name);
  out << '\n';
  char buf[64];
  for (const auto& x : ds.interactions) {
    std::snprintf(buf, sizeof(buf), "%.17g", x.rating);
    out << ds.users.ids[x.user] << ',' << ds.items.ids[x.item] << ',' << buf;
    for (const auto& f : ds.schema.features) {
      auto it = x.context_raw.find(f.name);
      out << ',' << (it == x.context_raw.end() ? "" : it->second);
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing dataset file: " + path);
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0) || !(cal_fraction > 0.0) || !(test_fraction > 0.0))
    throw ConfigError("split fractions must all be positive");
  if (std::abs(train_fraction + cal_fraction + test_fraction - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");
  if (train_fraction < 0.5) throw ConfigError("train fraction must be at least 0.5");
}

SplitResult split(const RatingsDataset& ds, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = ds.interactions.size();
  if (n == 0) throw DataError("cannot split an empty dataset");

  const std::size_t n_cal =
      static_cast<std::size_t>(std::floor(spec.cal_fraction * static_cast<double>(n)));
  const std::size_t n_test =
      static_cast<std::size_t>(std::floor(spec.test_fraction * static_cast<double>(n)));
  const std::size_t n_train = n - n_cal - n_test;
  if (n_cal == 0 || n_test == 0 || n_train == 0)
    throw DataError("dataset too small to populate train/calibration/test splits");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(spec.seed, "split");
  std::shuffle(order.begin(), order.end(), rng);

  auto part = [&](std::size_t begin, std::size_t count, const char* suffix) {
    RatingsDataset out;
    out.users = ds.users;
    out.items = ds.items;
    out.schema = ds.schema;
    out.scale = ds.scale;
    out.norm = ds.norm;
    out.name = ds.name + "." + suffix;
    out.interactions.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.interactions.push_back(ds.interactions[order[begin + i]]);
    return out;
  };

  SplitResult r;
  r.train = part(0, n_train, "train");
  r.cal = part(n_train, n_cal, "cal");
  r.test = part(n_train + n_cal, n_test, "test");
  return r;
}

bool SparseVector::observed(int i) const {
  return std::binary_search(mask.begin(), mask.end(), i);
}

namespace {

SparseVector mean_vector(const RatingsDataset& ds, int index, bool by_user) {
  const int n = by_user ? ds.num_items() : ds.num_users();
  const int bound = by_user ? ds.num_users() : ds.num_items();
  if (index < 0 || index >= bound)
    throw DataError("rating vector: index " + std::to_string(index) + " out of range");
  Vec sum(n, 0.0);
  std::vector<int> count(n, 0);
  for (const auto& x : ds.interactions) {
    if ((by_user ? x.user : x.item) != index) continue;
    const int j = by_user ? x.item : x.user;
    sum[j] += x.rating;
    ++count[j];
  }
  SparseVector out;
  out.values.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    if (count[j] > 0) {
      out.values[j] = sum[j] / count[j];
      out.mask.push_back(j);
    }
  }
  return out;
}

}  // namespace

SparseVector user_rating_vector(const RatingsDataset& ds, int user_index) {
  return mean_vector(ds, user_index, true);
}

SparseVector item_rating_vector(const RatingsDataset& ds, int item_index) {
  return mean_vector(ds, item_index, false);
}

double PlantedParams::predict(int u, int i, const Vec& context) const {
  double r = global_mean + user_bias[u] + item_bias[i];
  for (int k = 0; k < user_factors.cols; ++k)
    r += user_factors.at(u, k) * item_factors.at(i, k);
  for (std::size_t d = 0; d < context.size(); ++d) r += context[d] * context_bias[d];
  return r;
}

void SynthSpec::validate() const {
  if (n_users <= 0 || n_items <= 0 || n_context_features < 0 || n_interactions <= 0)
    throw ConfigError("synth: counts must be positive");
  if (static_cast<long long>(n_interactions) >
      static_cast<long long>(n_users) * n_items)
    throw ConfigError("synth: n_interactions exceeds n_users * n_items");
  if (rank < 0) throw ConfigError("synth: rank must be >= 0");
  if (context_cardinality < 1) throw ConfigError("synth: context cardinality must be >= 1");
  if (noise_sd < 0.0) throw ConfigError("synth: noise_sd must be >= 0");
  if (!(scale.min < scale.max)) throw ConfigError("synth: rating scale must satisfy min < max");
}

SynthResult synth_generate(const SynthSpec& spec) {
  spec.validate();

  RatingsDataset ds;
  ds.scale = spec.scale;
  ds.norm = spec.norm;
  ds.name = "synth";
  for (int u = 0; u < spec.n_users; ++u) ds.users.add_or_get("u" + std::to_string(u));
  for (int i = 0; i < spec.n_items; ++i) ds.items.add_or_get("i" + std::to_string(i));
  for (int f = 0; f < spec.n_context_features; ++f) {
    std::vector<std::string> domain;
    for (int v = 0; v < spec.context_cardinality; ++v) domain.push_back("v" + std::to_string(v));
    ContextFeature feat;
    feat.name = "f" + std::to_string(f);
    feat.kind = FeatureKind::nominal;
    feat.domain = std::move(domain);
    ds.schema.features.push_back(std::move(feat));
  }

  PlantedParams planted;
  planted.global_mean = spec.global_mean;
  Rng prng = make_rng(spec.seed, "synth:params");
  std::uniform_real_distribution<double> bias_dist(-spec.bias_scale, spec.bias_scale);
  planted.user_bias.resize(spec.n_users);
  planted.item_bias.resize(spec.n_items);
  for (double& b : planted.user_bias) b = spec.bias_scale > 0 ? bias_dist(prng) : 0.0;
  for (double& b : planted.item_bias) b = spec.bias_scale > 0 ? bias_dist(prng) : 0.0;
  const double fscale = spec.rank > 0 ? std::sqrt(spec.factor_scale / spec.rank) : 0.0;
  std::uniform_real_distribution<double> factor_dist(-fscale, fscale);
  planted.user_factors = DenseMatrix(spec.n_users, spec.rank, 0.0);
  planted.item_factors = DenseMatrix(spec.n_items, spec.rank, 0.0);
  for (double& x : planted.user_factors.data) x = fscale > 0 ? factor_dist(prng) : 0.0;
  for (double& x : planted.item_factors.data) x = fscale > 0 ? factor_dist(prng) : 0.0;
  std::uniform_real_distribution<double> ctx_dist(-spec.context_strength, spec.context_strength);
  planted.context_bias.resize(ds.schema.dimension());
  for (double& b : planted.context_bias) b = spec.context_strength > 0 ? ctx_dist(prng) : 0.0;

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(spec.n_users) * spec.n_items);
  for (int u = 0; u < spec.n_users; ++u)
    for (int i = 0; i < spec.n_items; ++i) pairs.emplace_back(u, i);
  Rng srng = make_rng(spec.seed, "synth:pairs");
  std::shuffle(pairs.begin(), pairs.end(), srng);
  pairs.resize(spec.n_interactions);

  Rng crng = make_rng(spec.seed, "synth:context");
  Rng nrng = make_rng(spec.seed, "synth:noise");
  std::uniform_int_distribution<int> value_dist(0, spec.context_cardinality - 1);
  std::normal_distribution<double> noise_dist(0.0, spec.noise_sd);

  for (const auto& [u, i] : pairs) {
    Interaction x;
    x.user = u;
    x.item = i;
    for (const auto& f : ds.schema.features)
      x.context_raw.emplace(f.name, f.domain[value_dist(crng)]);
    x.context = encode_context(ds.schema, x.context_raw);
    const double noise = spec.noise_sd > 0 ? noise_dist(nrng) : 0.0;
    x.rating = ds.scale.clip(planted.predict(u, i, x.context) + noise);
    x.rating_normalized = normalize_rating(x.rating, ds.scale, ds.norm);
    ds.interactions.push_back(std::move(x));
  }

  return SynthResult{std::move(ds), std::move(planted)};
}

}  // namespace confrec
