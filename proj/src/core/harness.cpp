#include "harness.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "conformal.hpp"
#include "metrics.hpp"

namespace confrec {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

long elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count());
}

void require_same_dataset(const TrainedModel& m, const RatingsDataset& ds) {
  if (m.users.ids != ds.users.ids || m.items.ids != ds.items.ids)
    throw DataError("model was trained on a different dataset than the config loads (user/item "
                    "vocabularies differ)");
  if (m.schema.dimension() != ds.schema.dimension())
    throw DataError("model context schema does not match the dataset schema");
}

}  // namespace

void Logger::info(const std::string& s) const {
  if (!path.empty()) {
    ensure_parent_dir(path);
    std::ofstream f(path, std::ios::app);
    if (f) f << s << "\n";
  }
  if (verbosity >= 1) std::cerr << s << "\n";
}

void Logger::debug(const std::string& s) const {
  if (!path.empty()) {
    ensure_parent_dir(path);
    std::ofstream f(path, std::ios::app);
    if (f) f << s << "\n";
  }
  if (verbosity >= 2) std::cerr << s << "\n";
}

RatingsDataset load_dataset(const ExperimentConfig& c) {
  if (!c.dataset.path.empty())
    return load_interactions(c.dataset.path, c.dataset.format, c.dataset.schema, c.dataset.load);
  if (c.has_synth) {
    RatingsDataset ds = synth_generate(c.synth).dataset;
    // an explicit dataset.name wins over the generated default
    if (c.dataset.load.name != dataset_format_name(c.dataset.format)) ds.name = c.dataset.load.name;
    return ds;
  }
  throw ConfigError("config: need either dataset.path or a synth section");
}

LoadedData load_and_split(const ExperimentConfig& c) {
  LoadedData d;
  d.full = load_dataset(c);
  d.parts = split(d.full, c.split);
  return d;
}

TrainedModel train_model(const ExperimentConfig& c, const RatingsDataset& full,
                         const SplitResult& parts, std::uint64_t seed, TrainTrace* trace) {
  TrainedModel m;
  m.kind = c.model.kind;
  m.dataset_name = full.name;
  m.schema = full.schema;
  m.scale = full.scale;
  m.norm = full.norm;
  m.users = full.users;
  m.items = full.items;
  m.global_mean = parts.train.global_mean_rating();

  switch (c.model.kind) {
    case ModelKind::global_mean: break;
    case ModelKind::mf:
      m.factorized = train_factorized(FactorizedKind::mf, parts.train, &parts.cal,
                                      c.model.factorized, seed, trace);
      break;
    case ModelKind::biasedmf:
      m.factorized = train_factorized(FactorizedKind::biasedmf, parts.train, &parts.cal,
                                      c.model.factorized, seed, trace);
      break;
    case ModelKind::camfc:
      m.factorized = train_factorized(FactorizedKind::camfc, parts.train, &parts.cal,
                                      c.model.factorized, seed, trace);
      break;
    case ModelKind::itemknn:
      m.knn = knn_build(KnnMode::item, c.model.knn_k, c.model.knn_shrink, parts.train);
      break;
    case ModelKind::userknn:
      m.knn = knn_build(KnnMode::user, c.model.knn_k, c.model.knn_shrink, parts.train);
      break;
    case ModelKind::autorec_u:
    case ModelKind::autorec_i:
    case ModelKind::deep_ae: {
      AutorecHyperparams hp = c.model.autorec;
      hp.item_based = c.model.kind == ModelKind::autorec_i;
      m.autorec = train_autorec(parts.train, &parts.cal, hp, seed, trace);
      break;
    }
    case ModelKind::neucmf0i:
    case ModelKind::proposed: {
      const ContextualKind ck = c.model.kind == ModelKind::proposed ? ContextualKind::proposed
                                                                    : ContextualKind::neucmf;
      m.contextual = train_contextual(ck, parts.train, &parts.cal, c.model.contextual, seed, trace);
      break;
    }
  }
  return m;
}

void cmd_ingest_check(const ExperimentConfig& c, std::ostream& out) {
  const RatingsDataset ds = load_dataset(c);
  out << "dataset " << ds.name << "\n";
  out << "users " << ds.num_users() << "\n";
  out << "items " << ds.num_items() << "\n";
  out << "interactions " << ds.size() << "\n";
  out << "distinct_contexts " << ds.distinct_contexts() << "\n";
  out << "density_pairs " << fmt_g(ds.density_pairs()) << "\n";
  out << "density_triples " << fmt_g(ds.density_triples()) << "\n";
  out << "mean_rating " << fmt_g(ds.global_mean_rating()) << "\n";
  out << "scale " << fmt_g(ds.scale.min) << " " << fmt_g(ds.scale.max) << "\n";
}

void cmd_train(const ExperimentConfig& c, const Logger& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedData data = load_and_split(c);
  log.info("dataset " + data.full.name + ": " + std::to_string(data.full.size()) +
           " interactions, split " + std::to_string(data.parts.train.size()) + "/" +
           std::to_string(data.parts.cal.size()) + "/" + std::to_string(data.parts.test.size()));
  TrainTrace trace;
  const TrainedModel m = train_model(c, data.full, data.parts, c.seed, &trace);
  for (std::size_t e = 0; e < trace.train_loss.size(); ++e) {
    std::string line = "epoch " + std::to_string(e) + " loss " + fmt_g(trace.train_loss[e]);
    if (e < trace.cal_rmse.size()) line += " cal_rmse " + fmt_g(trace.cal_rmse[e]);
    log.debug(line);
  }
  if (trace.best_epoch >= 0) log.info("best_epoch " + std::to_string(trace.best_epoch));
  save_model(m, c.output.model_path);
  log.info("model " + model_kind_name(m.kind) + " written to " + c.output.model_path);
  log.info("train wall_ms " + std::to_string(elapsed_ms(t0)));
}

void cmd_evaluate(const ExperimentConfig& c, const Logger& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedData data = load_and_split(c);
  const TrainedModel m = load_model(c.output.model_path);
  require_same_dataset(m, data.full);

  Vec preds, truths;
  preds.reserve(data.parts.test.size());
  truths.reserve(data.parts.test.size());
  for (const auto& ex : data.parts.test.interactions) {
    preds.push_back(m.predict_clipped(ex.user, ex.item, ex.context));
    truths.push_back(ex.rating);
  }

  Report r;
  r.seed = c.seed;
  r.config_hash = c.hash;
  r.accuracy.push_back({data.full.name, model_kind_name(m.kind), metric_mae(preds, truths),
                        metric_rmse(preds, truths)});
  append_report(r, c.output.report_path);
  log.info("evaluate " + data.full.name + " " + model_kind_name(m.kind) + " mae " +
           fmt_g(r.accuracy.back().mae) + " rmse " + fmt_g(r.accuracy.back().rmse));
  log.info("evaluate wall_ms " + std::to_string(elapsed_ms(t0)));
}

void cmd_conformal_eval(const ExperimentConfig& c, const Logger& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedData data = load_and_split(c);
  const TrainedModel m = load_model(c.output.model_path);
  require_same_dataset(m, data.full);

  const Vec cal_scores = compute_conformity_scores(m, data.parts.cal, c.conformal.mode);

  Report r;
  r.seed = c.seed;
  r.config_hash = c.hash;
  for (const double eps : c.conformal.epsilons) {
    CalibrationState st = make_calibration_state(c.conformal.mode, eps, c.conformal.window);
    state_set_scores(st, cal_scores);
    std::vector<PredictionInterval> intervals;
    Vec truths;
    intervals.reserve(data.parts.test.size());
    truths.reserve(data.parts.test.size());
    for (const auto& ex : data.parts.test.interactions) {
      intervals.push_back(predict_interval(m, ex.user, ex.item, ex.context, st));
      truths.push_back(ex.rating);
      // sliding mode walks the test split prequentially
      if (c.conformal.window > 0)
        window_update(st, nonconformity_score(m, ex, c.conformal.mode));
    }
    r.conformal.push_back({data.full.name, model_kind_name(m.kind),
                           nonconformity_mode_name(c.conformal.mode), eps,
                           average_width(intervals), empirical_coverage(intervals, truths)});
    log.info("conformal " + data.full.name + " " + model_kind_name(m.kind) + " eps " + fmt_g(eps) +
             " width " + fmt_g(r.conformal.back().width) + " ecp " +
             fmt_g(r.conformal.back().ecp));
  }
  append_report(r, c.output.report_path);
  log.info("conformal-eval wall_ms " + std::to_string(elapsed_ms(t0)));
}

void cmd_predict(const ExperimentConfig& c, const std::string& user_id, const std::string& item_id,
                 const RawContext& context, std::optional<double> epsilon, std::ostream& out) {
  const TrainedModel m = load_model(c.output.model_path);
  const int u = m.users.lookup(user_id);
  if (u < 0)
    throw DataError("unknown user '" + user_id + "'; run ingest-check to list vocabulary sizes");
  const int i = m.items.lookup(item_id);
  if (i < 0)
    throw DataError("unknown item '" + item_id + "'; run ingest-check to list vocabulary sizes");
  const Vec ctx = encode_context(m.schema, context);

  out << "prediction " << fmt_g(m.predict_clipped(u, i, ctx)) << "\n";
  if (epsilon) {
    const LoadedData data = load_and_split(c);
    require_same_dataset(m, data.full);
    const Vec scores = compute_conformity_scores(m, data.parts.cal, c.conformal.mode);
    CalibrationState st = make_calibration_state(c.conformal.mode, *epsilon, 0);
    state_set_scores(st, scores);
    const PredictionInterval iv =
        clip_interval(predict_interval(m, u, i, ctx, st), m.scale);
    out << "interval [" << fmt_g(iv.lower) << ", " << fmt_g(iv.upper) << "] epsilon "
        << fmt_g(*epsilon) << "\n";
  }
}

void cmd_report(const std::vector<std::string>& files, const std::string& plot_path,
                std::ostream& out) {
  if (files.empty()) throw ConfigError("report: no report files given");
  std::vector<Report> parts;
  parts.reserve(files.size());
  for (const auto& f : files) parts.push_back(read_report(f));
  const Report merged = merge_reports(parts);
  out << format_table(merged);
  if (!plot_path.empty()) write_plot_data(merged, plot_path);
}

void cmd_synth(const ExperimentConfig& c, std::ostream& out) {
  if (!c.has_synth) throw ConfigError("synth: config has no synth section");
  if (c.dataset.path.empty())
    throw ConfigError("synth: dataset.path names the output file and must be set");
  const SynthResult sr = synth_generate(c.synth);
  save_interactions_csv(sr.dataset, c.dataset.path, c.dataset.load.columns);
  out << "wrote " << c.dataset.path << " (" << sr.dataset.size() << " interactions, "
      << sr.dataset.num_users() << " users, " << sr.dataset.num_items() << " items)\n";
  for (const auto& f : sr.dataset.schema.features) {
    out << "feature " << f.name << " " << feature_kind_name(f.kind);
    if (f.kind == FeatureKind::nominal) {
      for (const auto& v : f.domain) out << " " << v;
    } else {
      out << " " << fmt_g(f.min) << " " << fmt_g(f.max);
    }
    out << "\n";
  }
}

}  // namespace confrec
