#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "isp/corpus.hpp"
#include "isp/parallel.hpp"
#include "isp/subsets.hpp"

namespace isp {

/// Solutions within this many log10 units below a threshold still pass.
inline constexpr double kThresholdSlack = 1e-9;

inline bool admissible(double log_ps, double threshold) {
  return log_ps >= threshold - kThresholdSlack;
}

class ScopeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Either the whole corpus or one instruction subset.
struct Scope {
  std::optional<std::size_t> subset;

  static Scope global() { return {}; }
  static Scope of_subset(std::size_t id) { return {id}; }

  bool is_global() const { return !subset.has_value(); }

  std::string label() const {
    return subset ? "is:" + std::to_string(*subset) : std::string("global");
  }

  static Scope parse(const std::string& label) {
    if (label == "global") return global();
    if (label.rfind("is:", 0) == 0) {
      try {
        std::size_t used = 0;
        const std::string num = label.substr(3);
        const auto id = std::stoul(num, &used);
        if (used == num.size() && !num.empty()) return of_subset(id);
      } catch (const std::logic_error&) {
      }
    }
    throw ScopeError("invalid scope label \"" + label + "\"");
  }

  friend bool operator==(const Scope&, const Scope&) = default;
  friend auto operator<=>(const Scope&, const Scope&) = default;
};

struct ProbabilityEntry {
  InstructionId instruction;
  std::uint64_t count = 0;
  double log10_prob = 0;
};

/// Instruction probabilities for one scope, kept in log10. Entries are held in
/// canonical order: descending count, ties broken by name. Every solution
/// probability is summed in this order, so identical count vectors always
/// give bit-identical results.
class ProbabilityTable {
 public:
  ProbabilityTable() = default;

  ProbabilityTable(Scope scope, const std::map<InstructionId, std::uint64_t>& counts)
      : scope_(scope) {
    for (const auto& [ins, c] : counts) {
      if (c == 0) continue;
      entries_.push_back({ins, c, 0.0});
      total_ += c;
    }
    std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
      return a.count != b.count ? a.count > b.count : a.instruction < b.instruction;
    });
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      auto& e = entries_[i];
      e.log10_prob = std::log10(static_cast<double>(e.count) / static_cast<double>(total_));
      index_.emplace(e.instruction, i);
    }
  }

  const Scope& scope() const { return scope_; }
  const std::vector<ProbabilityEntry>& entries() const { return entries_; }
  std::uint64_t total_count() const { return total_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::optional<std::size_t> index_of(const InstructionId& ins) const {
    auto it = index_.find(ins);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  double log_prob(const InstructionId& ins) const {
    const auto i = index_of(ins);
    if (!i)
      throw ScopeError("instruction \"" + ins + "\" is outside scope " + scope_.label());
    return entries_[*i].log10_prob;
  }

  double highest_log_prob() const { return entries_.front().log10_prob; }
  double lowest_log_prob() const { return entries_.back().log10_prob; }

  std::vector<double> log_probs() const {
    std::vector<double> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.log10_prob);
    return out;
  }

  double linear_sum() const {
    double s = 0;
    for (const auto& e : entries_) s += std::pow(10.0, e.log10_prob);
    return s;
  }

  /// Occurrence counts per canonical index.
  std::vector<std::size_t> count_vector(std::span<const InstructionId> instructions) const {
    std::vector<std::size_t> counts(entries_.size(), 0);
    for (const auto& ins : instructions) {
      const auto i = index_of(ins);
      if (!i)
        throw ScopeError("instruction \"" + ins + "\" is outside scope " + scope_.label());
      ++counts[*i];
    }
    return counts;
  }

  /// log10 of the product of probabilities, one factor per occurrence.
  double log_probability_of_counts(std::span<const std::size_t> counts) const {
    double acc = 0;
    for (std::size_t i = 0; i < counts.size(); ++i)
      if (counts[i]) acc += static_cast<double>(counts[i]) * entries_[i].log10_prob;
    return acc;
  }

 private:
  Scope scope_;
  std::vector<ProbabilityEntry> entries_;
  std::unordered_map<InstructionId, std::size_t> index_;
  std::uint64_t total_ = 0;
};

namespace detail {
inline void add_counts(const ProgramUnit& u, std::map<InstructionId, std::uint64_t>& counts) {
  for (const auto& ins : u.instructions) ++counts[ins];
}
}  // namespace detail

inline ProbabilityTable global_instruction_probs(const Corpus& corpus) {
  if (corpus.empty()) throw CorpusError("empty corpus");
  std::map<InstructionId, std::uint64_t> counts;
  for (const auto& u : corpus.units()) detail::add_counts(u, counts);
  return ProbabilityTable(Scope::global(), counts);
}

/// Per-subset probabilities over the subset's covered units. With
/// `only_size`, counting is restricted to covered units of that size.
inline ProbabilityTable subset_instruction_probs(const Corpus& corpus,
                                                 const InstructionSubset& subset,
                                                 std::optional<std::size_t> only_size = {}) {
  if (subset.covered_units.empty())
    throw CorpusError("subset " + std::to_string(subset.id) + " covers no units");
  std::map<InstructionId, std::uint64_t> counts;
  for (const auto& id : subset.covered_units) {
    const auto& u = corpus.at(id);
    if (only_size && u.size() != *only_size) continue;
    detail::add_counts(u, counts);
  }
  if (counts.empty())
    throw CorpusError("subset " + std::to_string(subset.id) + " covers no units of size " +
                      std::to_string(*only_size));
  return ProbabilityTable(Scope::of_subset(subset.id), counts);
}

inline double solution_probability(const ProbabilityTable& table,
                                   std::span<const InstructionId> instructions) {
  const auto counts = table.count_vector(instructions);
  return table.log_probability_of_counts(counts);
}

inline double solution_probability(const ProbabilityTable& table, const ProgramUnit& pu) {
  return solution_probability(table, std::span<const InstructionId>(pu.instructions));
}

struct Threshold {
  double log10 = 0;
  std::size_t support = 0;  // units of this size in scope

  friend bool operator==(const Threshold&, const Threshold&) = default;
};

/// Minimum observed solution probability per solution size.
struct ThresholdTable {
  Scope scope;
  std::map<std::size_t, Threshold> thresholds;

  std::optional<double> at(std::size_t size) const {
    auto it = thresholds.find(size);
    if (it == thresholds.end()) return std::nullopt;
    return it->second.log10;
  }
};

inline ThresholdTable derive_thresholds(const Corpus& corpus, const ProbabilityTable& table,
                                        const std::vector<std::string>& scope_units,
                                        std::size_t max_size) {
  ThresholdTable out{table.scope(), {}};
  for (const auto& id : scope_units) {
    const auto& u = corpus.at(id);
    if (u.size() > max_size) continue;
    const double ps = solution_probability(table, u);
    auto [it, fresh] = out.thresholds.try_emplace(u.size(), Threshold{ps, 1});
    if (!fresh) {
      it->second.log10 = std::min(it->second.log10, ps);
      ++it->second.support;
    }
  }
  return out;
}

inline ThresholdTable derive_thresholds(const Corpus& corpus, const ProbabilityTable& table,
                                        std::size_t max_size) {
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& u : corpus.units()) ids.push_back(u.id);
  return derive_thresholds(corpus, table, ids, max_size);
}

struct ProbabilityRange {
  std::size_t size = 0;
  double min_possible = 0;
  double max_possible = 0;
  std::optional<double> observed_min;
  std::optional<double> observed_median;
  std::optional<double> observed_max;
};

inline ProbabilityRange probability_range(const ProbabilityTable& table, std::size_t size,
                                          std::optional<std::vector<double>> observed = {}) {
  if (table.empty()) throw ScopeError("empty probability table");
  if (size < 1) throw std::invalid_argument("size must be at least 1");
  ProbabilityRange r;
  r.size = size;
  r.min_possible = static_cast<double>(size) * table.lowest_log_prob();
  r.max_possible = static_cast<double>(size) * table.highest_log_prob();
  if (observed && !observed->empty()) {
    auto v = *observed;
    std::sort(v.begin(), v.end());
    r.observed_min = v.front();
    r.observed_max = v.back();
    const std::size_t n = v.size();
    r.observed_median = n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
  }
  return r;
}

/// Solution probabilities of the given units, grouped by unit size.
inline std::map<std::size_t, std::vector<double>> observed_by_size(
    const Corpus& corpus, const ProbabilityTable& table,
    const std::vector<std::string>& scope_units, std::size_t max_size) {
  std::map<std::size_t, std::vector<double>> out;
  for (const auto& id : scope_units) {
    const auto& u = corpus.at(id);
    if (u.size() <= max_size) out[u.size()].push_back(solution_probability(table, u));
  }
  return out;
}

/// Probabilities plus thresholds for one scope.
struct ScopeModel {
  ProbabilityTable table;
  ThresholdTable thresholds;
};

inline ScopeModel global_model(const Corpus& corpus, std::size_t max_size) {
  auto table = global_instruction_probs(corpus);
  auto thresholds = derive_thresholds(corpus, table, max_size);
  return {std::move(table), std::move(thresholds)};
}

/// One model per subset, in family order.
inline std::vector<ScopeModel> subset_models(const Corpus& corpus, const SubsetFamily& family,
                                             std::size_t max_size, std::size_t threads = 1) {
  std::vector<ScopeModel> out(family.subsets.size());
  parallel_for(out.size(), threads, [&](std::size_t k) {
    const auto& subset = family.subsets[k];
    auto table = subset_instruction_probs(corpus, subset);
    auto thresholds = derive_thresholds(corpus, table, subset.covered_units, max_size);
    out[k] = {std::move(table), std::move(thresholds)};
  });
  return out;
}

/// Variant that counts instructions only over covered units of the size being
/// thresholded: one model per (subset, size), each holding a single threshold.
inline std::vector<ScopeModel> subset_models_per_size(const Corpus& corpus,
                                                      const SubsetFamily& family,
                                                      std::size_t max_size,
                                                      std::size_t threads = 1) {
  std::vector<std::vector<ScopeModel>> per(family.subsets.size());
  parallel_for(per.size(), threads, [&](std::size_t k) {
    const auto& subset = family.subsets[k];
    std::map<std::size_t, std::vector<std::string>> by_size;
    for (const auto& id : subset.covered_units) {
      const auto n = corpus.at(id).size();
      if (n <= max_size) by_size[n].push_back(id);
    }
    for (const auto& [size, ids] : by_size) {
      auto table = subset_instruction_probs(corpus, subset, size);
      auto thresholds = derive_thresholds(corpus, table, ids, max_size);
      per[k].push_back({std::move(table), std::move(thresholds)});
    }
  });
  std::vector<ScopeModel> out;
  for (auto& v : per)
    for (auto& m : v) out.push_back(std::move(m));
  return out;
}

}  // namespace isp
