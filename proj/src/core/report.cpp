#include "report.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <tuple>

#include "common.hpp"

namespace confrec {

namespace {

const char* kHeader = "confrec-report v1";

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// table cells are for eyeballs; the report file keeps full precision
std::string fmt_cell(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt_hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool file_nonempty(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return in && in.peek() != std::ifstream::traits_type::eof();
}

}  // namespace

void append_report(const Report& r, const std::string& path) {
  const bool fresh = !file_nonempty(path);
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot open report file for writing: " + path);
  if (fresh) out << kHeader << "\n";
  out << "meta seed " << r.seed << "\n";
  out << "meta config " << fmt_hex(r.config_hash) << "\n";
  for (const auto& a : r.accuracy)
    out << "accuracy " << a.dataset << " " << a.model << " " << fmt_g(a.mae) << " "
        << fmt_g(a.rmse) << "\n";
  for (const auto& c : r.conformal)
    out << "conformal " << c.dataset << " " << c.model << " " << c.mode << " " << fmt_g(c.epsilon)
        << " " << fmt_g(c.width) << " " << fmt_g(c.ecp) << "\n";
  if (!out) throw DataError("short write to report file: " + path);
}

Report read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw DataError("report file " + path + ": missing 'confrec-report v1' header");

  Report r;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "meta") {
      std::string key;
      ls >> key;
      if (key == "seed") {
        ls >> r.seed;
      } else if (key == "config") {
        std::string hex;
        ls >> hex;
        r.config_hash = std::strtoull(hex.c_str(), nullptr, 16);
      }
      // unknown meta keys are tolerated for forward compatibility
    } else if (tag == "accuracy") {
      AccuracyRow a;
      ls >> a.dataset >> a.model >> a.mae >> a.rmse;
      if (!ls) throw DataError("report file " + path + " line " + std::to_string(lineno) +
                               ": malformed accuracy row");
      r.accuracy.push_back(std::move(a));
    } else if (tag == "conformal") {
      ConformalRow c;
      ls >> c.dataset >> c.model >> c.mode >> c.epsilon >> c.width >> c.ecp;
      if (!ls) throw DataError("report file " + path + " line " + std::to_string(lineno) +
                               ": malformed conformal row");
      r.conformal.push_back(std::move(c));
    } else {
      throw DataError("report file " + path + " line " + std::to_string(lineno) +
                      ": unknown row tag '" + tag + "'");
    }
  }
  return r;
}

Report merge_reports(const std::vector<Report>& parts) {
  if (parts.empty()) throw DataError("merge: no reports given");
  Report out;
  out.seed = parts.front().seed;
  out.config_hash = parts.front().config_hash;
  for (const auto& p : parts) {
    out.accuracy.insert(out.accuracy.end(), p.accuracy.begin(), p.accuracy.end());
    out.conformal.insert(out.conformal.end(), p.conformal.begin(), p.conformal.end());
  }
  std::stable_sort(out.accuracy.begin(), out.accuracy.end(),
                   [](const AccuracyRow& a, const AccuracyRow& b) {
                     return std::tie(a.dataset, a.model) < std::tie(b.dataset, b.model);
                   });
  std::stable_sort(out.conformal.begin(), out.conformal.end(),
                   [](const ConformalRow& a, const ConformalRow& b) {
                     return std::tie(a.dataset, a.model, a.mode, a.epsilon) <
                            std::tie(b.dataset, b.model, b.mode, b.epsilon);
                   });
  return out;
}

std::string format_table(const Report& r) {
  std::ostringstream os;
  if (!r.accuracy.empty()) {
    os << std::left << std::setw(16) << "dataset" << std::setw(12) << "model" << std::setw(12)
       << "mae" << std::setw(12) << "rmse" << "\n";
    for (const auto& a : r.accuracy)
      os << std::left << std::setw(16) << a.dataset << std::setw(12) << a.model << std::setw(12)
         << fmt_cell(a.mae) << std::setw(12) << fmt_cell(a.rmse) << "\n";
  }
  if (!r.conformal.empty()) {
    if (!r.accuracy.empty()) os << "\n";
    os << std::left << std::setw(16) << "dataset" << std::setw(12) << "model" << std::setw(16)
       << "mode" << std::setw(8) << "eps" << std::setw(12) << "width" << std::setw(12) << "ecp"
       << "\n";
    for (const auto& c : r.conformal)
      os << std::left << std::setw(16) << c.dataset << std::setw(12) << c.model << std::setw(16)
         << c.mode << std::setw(8) << fmt_g(c.epsilon) << std::setw(12) << fmt_cell(c.width)
         << std::setw(12) << fmt_cell(c.ecp) << "\n";
  }
  return os.str();
}

void write_plot_data(const Report& r, const std::string& path) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open plot-data file for writing: " + path);
  out << "dataset\tmodel\tmetric\tvalue\n";
  for (const auto& a : r.accuracy) {
    out << a.dataset << "\t" << a.model << "\tmae\t" << fmt_g(a.mae) << "\n";
    out << a.dataset << "\t" << a.model << "\trmse\t" << fmt_g(a.rmse) << "\n";
  }
  for (const auto& c : r.conformal) {
    out << c.dataset << "\t" << c.model << "\twidth:" << c.mode << ":" << fmt_g(c.epsilon) << "\t"
        << fmt_g(c.width) << "\n";
    out << c.dataset << "\t" << c.model << "\tecp:" << c.mode << ":" << fmt_g(c.epsilon) << "\t"
        << fmt_g(c.ecp) << "\n";
  }
  if (!out) throw DataError("short write to plot-data file: " + path);
}

}  // namespace confrec
