#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "isp/probability.hpp"
#include "isp/spacecount.hpp"
#include "isp/xval.hpp"

namespace isp {

// 12 significant digits; "inf"/"-inf" for infinities.
inline std::string format_real(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// Writes to `path` through a sibling temp file and a rename.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

inline void write_tables_csv(std::ostream& out, const std::vector<ProbabilityTable>& tables) {
  out << "scope,instruction,count,log10_probability\n";
  for (const auto& t : tables)
    for (const auto& e : t.entries())
      out << t.scope().label() << ',' << e.instruction << ',' << e.count << ','
          << format_real(e.log10_prob) << '\n';
}

inline void write_thresholds_csv(std::ostream& out, const std::vector<ThresholdTable>& tables) {
  out << "scope,size,count,log10_probability\n";
  for (const auto& t : tables)
    for (const auto& [size, th] : t.thresholds)
      out << t.scope.label() << ',' << size << ',' << th.support << ','
          << format_real(th.log10) << '\n';
}

inline void write_ranges_csv(std::ostream& out,
                             const std::vector<std::pair<Scope, ProbabilityRange>>& ranges) {
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  out << "scope,size,min_possible,max_possible,observed_min,observed_median,observed_max\n";
  for (const auto& [scope, r] : ranges)
    out << scope.label() << ',' << r.size << ',' << format_real(r.min_possible) << ','
        << format_real(r.max_possible) << ',' << opt(r.observed_min) << ','
        << opt(r.observed_median) << ',' << opt(r.observed_max) << '\n';
}

inline void write_measurements_csv(std::ostream& out,
                                   const std::vector<SpaceMeasurement>& ms) {
  out << "scope,size,mode,threshold_log10,admissible_count,baseline_count,reduction_oom\n";
  for (const auto& m : ms)
    out << m.scope.label() << ',' << m.size << ',' << to_string(m.mode) << ','
        << format_real(m.threshold) << ',' << m.admissible_count.str() << ','
        << m.baseline_count.str() << ',' << format_real(m.reduction_oom) << '\n';
}

// Sizes without a threshold get an empty coverage cell.
inline void write_validation_csv(std::ostream& out, const std::vector<ValidationResult>& rs) {
  out << "fraction,size,coverage_pct,n_test_pus,repeat\n";
  for (const auto& r : rs)
    for (const auto& [size, n] : r.test_units_by_size) {
      auto it = r.per_size_coverage.find(size);
      out << format_real(r.training_fraction) << ',' << size << ','
          << (it == r.per_size_coverage.end() ? std::string() : format_real(it->second.coverage_pct))
          << ',' << n << ',' << r.repeat << '\n';
    }
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename Fn>
void for_each_csv_row(std::istream& in, const std::string& header, Fn&& fn) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw std::runtime_error("unexpected CSV header \"" + line + "\"");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 4)
      throw std::runtime_error("CSV line " + std::to_string(lineno) + ": expected 4 columns");
    try {
      fn(cells);
    } catch (const std::logic_error& e) {
      throw std::runtime_error("CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}
}  // namespace detail

/// Rebuilds tables from their counts; the log column is recomputed so a
/// reload reproduces the original values bit for bit.
inline std::vector<ProbabilityTable> read_tables_csv(std::istream& in) {
  std::map<Scope, std::map<InstructionId, std::uint64_t>> counts;
  std::vector<Scope> order;
  detail::for_each_csv_row(in, "scope,instruction,count,log10_probability", [&](const auto& c) {
    const auto scope = Scope::parse(c[0]);
    if (!counts.count(scope)) order.push_back(scope);
    if (!is_valid_instruction(c[1])) throw std::invalid_argument("invalid instruction token");
    counts[scope][c[1]] += std::stoull(c[2]);
  });
  std::vector<ProbabilityTable> out;
  for (const auto& s : order) out.emplace_back(s, counts[s]);
  return out;
}

inline std::vector<ThresholdTable> read_thresholds_csv(std::istream& in) {
  std::map<Scope, ThresholdTable> tables;
  std::vector<Scope> order;
  detail::for_each_csv_row(in, "scope,size,count,log10_probability", [&](const auto& c) {
    const auto scope = Scope::parse(c[0]);
    if (!tables.count(scope)) {
      order.push_back(scope);
      tables[scope].scope = scope;
    }
    tables[scope].thresholds[std::stoul(c[1])] = Threshold{std::stod(c[3]), std::stoul(c[2])};
  });
  std::vector<ThresholdTable> out;
  for (const auto& s : order) out.push_back(tables[s]);
  return out;
}

}  // namespace isp
