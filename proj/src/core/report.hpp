#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace confrec {

struct AccuracyRow {
  std::string dataset;
  std::string model;
  double mae = 0.0;
  double rmse = 0.0;
};

struct ConformalRow {
  std::string dataset;
  std::string model;
  std::string mode;
  double epsilon = 0.0;
  double width = 0.0;
  double ecp = 0.0;
};

/// Line-oriented report: "confrec-report v1" header, "meta seed/config"
/// lines, then one "accuracy ..." or "conformal ..." row per result.
/// Numbers are printed with %.12g so identical runs emit identical bytes.
struct Report {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<AccuracyRow> accuracy;
  std::vector<ConformalRow> conformal;
};

/// Appends rows (plus a meta stanza) to `path`, writing the header first
/// when the file is new or empty.
void append_report(const Report& r, const std::string& path);

/// Parses a report file. Throws DataError naming the file on bad input.
Report read_report(const std::string& path);

/// Union of rows, stable-sorted by (dataset, model, mode, epsilon); meta
/// fields come from the first part.
Report merge_reports(const std::vector<Report>& parts);

/// Human-readable comparison table.
std::string format_table(const Report& r);

/// Tab-separated records: dataset, model, metric, value. Accuracy rows emit
/// mae/rmse; conformal rows emit width:<mode>:<eps> and ecp:<mode>:<eps>.
void write_plot_data(const Report& r, const std::string& path);

}  // namespace confrec
