#pragma once

#include <iostream>
#include <optional>

#include "config.hpp"
#include "model.hpp"
#include "report.hpp"

namespace confrec {

/// Writes everything to the log file when one is configured; mirrors to
/// stderr according to verbosity (0 quiet, 1 info, 2 debug).
struct Logger {
  std::string path;
  int verbosity = 1;

  void info(const std::string& s) const;
  void debug(const std::string& s) const;
};

struct LoadedData {
  RatingsDataset full;
  SplitResult parts;
};

/// dataset.path when set, otherwise the in-memory synth dataset.
RatingsDataset load_dataset(const ExperimentConfig& c);
LoadedData load_and_split(const ExperimentConfig& c);

/// Trains the configured model kind on the train split (early stopping
/// against the calibration split) and wraps it with the dataset snapshot.
TrainedModel train_model(const ExperimentConfig& c, const RatingsDataset& full,
                         const SplitResult& parts, std::uint64_t seed,
                         TrainTrace* trace = nullptr);

void cmd_ingest_check(const ExperimentConfig& c, std::ostream& out);
void cmd_train(const ExperimentConfig& c, const Logger& log);
void cmd_evaluate(const ExperimentConfig& c, const Logger& log);
void cmd_conformal_eval(const ExperimentConfig& c, const Logger& log);
void cmd_predict(const ExperimentConfig& c, const std::string& user_id, const std::string& item_id,
                 const RawContext& context, std::optional<double> epsilon, std::ostream& out);
void cmd_report(const std::vector<std::string>& files, const std::string& plot_path,
                std::ostream& out);
void cmd_synth(const ExperimentConfig& c, std::ostream& out);

}  // namespace confrec
