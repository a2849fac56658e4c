#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "conformal.hpp"
#include "contextual.hpp"
#include "dataset.hpp"
#include "model.hpp"

namespace confrec {

struct DatasetConfig {
  std::string path;  // empty = generate in memory from the synth section
  DatasetFormat format = DatasetFormat::generic;
  ContextSchema schema;
  LoadOptions load;  // columns, scale, norm, missing marker, display name
};

struct ModelConfig {
  ModelKind kind = ModelKind::biasedmf;
  FactorizedHyperparams factorized;
  int knn_k = 20;
  double knn_shrink = 10.0;
  AutorecHyperparams autorec;
  ContextualHyperparams contextual;
};

struct ConformalConfig {
  NonconformityMode mode = NonconformityMode::residual;
  std::vector<double> epsilons{0.1, 0.05, 0.01};
  /// 0 = batch calibration. Positive = sliding window of that capacity,
  /// updated prequentially while walking the test split.
  std::size_t window = 0;
};

struct OutputConfig {
  std::string model_path = "model.bin";
  std::string report_path = "report.txt";
  std::string plot_data_path;  // empty = skip
  std::string log_path;        // empty = stderr only
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  DatasetConfig dataset;
  SplitSpec split;  // split.seed mirrors the master seed
  ModelConfig model;
  ConformalConfig conformal;
  OutputConfig output;
  SynthSpec synth;
  bool has_synth = false;

  /// FNV-1a of the canonical JSON the config was parsed from; lets reports
  /// state which configuration produced them.
  std::uint64_t hash = 0;

  void validate() const;  // throws ConfigError on any invariant violation
};

/// Reads a JSON config file, applies dotted-path overrides ("model.kind=mf",
/// "split.seed=7"; values parse as JSON when possible, else as strings),
/// validates, and computes the hash. Unknown keys are rejected.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

/// Same pipeline starting from JSON text instead of a file.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides);

}  // namespace confrec
