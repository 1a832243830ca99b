#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <iterator>
#include <set>
#include <stdexcept>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isp/corpus.hpp"

namespace isp {

struct InstructionSubset {
  std::size_t id = 0;
  std::vector<InstructionId> members;  // sorted
  std::vector<std::string> covered_units;

  bool contains(const std::vector<InstructionId>& sorted_set) const {
    return std::includes(members.begin(), members.end(), sorted_set.begin(),
                         sorted_set.end());
  }

  friend bool operator==(const InstructionSubset&, const InstructionSubset&) = default;
};

struct SubsetFamily {
  std::size_t cap = 10;
  std::vector<InstructionSubset> subsets;
  // Units with more than `cap` unique instructions.
  std::vector<std::string> excluded_units;

  const InstructionSubset& at(std::size_t id) const {
    for (const auto& s : subsets)
      if (s.id == id) return s;
    throw std::out_of_range("unknown subset id " + std::to_string(id));
  }
};

/// Greedy first-fit-decreasing clustering. Units are taken in descending
/// order of unique-instruction count (corpus order on ties) and placed in the
/// first subset whose union with the unit stays within `cap`; otherwise a new
/// subset is opened. Each subset's members are exactly the union of its
/// units' instruction sets.
inline SubsetFamily cluster_subsets(const Corpus& corpus, std::size_t cap) {
  if (cap < 1) throw std::invalid_argument("cap must be at least 1");
  SubsetFamily family;
  family.cap = cap;

  std::vector<std::vector<InstructionId>> uniq;
  uniq.reserve(corpus.size());
  for (const auto& u : corpus.units()) uniq.push_back(u.unique_instructions());

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return uniq[a].size() > uniq[b].size();
  });

  std::vector<InstructionId> merged;
  for (std::size_t idx : order) {
    const auto& set = uniq[idx];
    const auto& unit = corpus.units()[idx];
    if (set.size() > cap) {
      family.excluded_units.push_back(unit.id);
      continue;
    }
    bool placed = false;
    for (auto& subset : family.subsets) {
      const auto extra = static_cast<std::size_t>(std::count_if(
          set.begin(), set.end(), [&](const InstructionId& ins) {
            return !std::binary_search(subset.members.begin(), subset.members.end(), ins);
          }));
      if (subset.members.size() + extra > cap) continue;
      if (extra > 0) {
        merged.clear();
        std::set_union(subset.members.begin(), subset.members.end(), set.begin(),
                       set.end(), std::back_inserter(merged));
        subset.members.swap(merged);
      }
      subset.covered_units.push_back(unit.id);
      placed = true;
      break;
    }
    if (!placed) {
      InstructionSubset fresh;
      fresh.id = family.subsets.size();
      fresh.members = set;
      fresh.covered_units.push_back(unit.id);
      family.subsets.push_back(std::move(fresh));
    }
  }
  // Report exclusions in corpus order.
  const std::set<std::string> excluded(family.excluded_units.begin(),
                                       family.excluded_units.end());
  family.excluded_units.clear();
  for (const auto& u : corpus.units())
    if (excluded.count(u.id)) family.excluded_units.push_back(u.id);
  return family;
}

// Subsets whose members include every instruction of `unique_instructions`.
inline std::vector<InstructionSubset> covering_subsets(
    std::vector<InstructionId> unique_instructions, const SubsetFamily& family) {
  std::sort(unique_instructions.begin(), unique_instructions.end());
  unique_instructions.erase(
      std::unique(unique_instructions.begin(), unique_instructions.end()),
      unique_instructions.end());
  std::vector<InstructionSubset> out;
  for (const auto& s : family.subsets)
    if (s.contains(unique_instructions)) out.push_back(s);
  return out;
}

inline void write_family(std::ostream& out, const SubsetFamily& family) {
  for (const auto& s : family.subsets) {
    nlohmann::json rec;
    rec["id"] = s.id;
    rec["members"] = s.members;
    rec["covered_units"] = s.covered_units;
    out << rec.dump() << '\n';
  }
}

// The cap is not part of the line format; it defaults to the largest subset.
inline SubsetFamily read_family(std::istream& in, std::size_t cap = 0) {
  SubsetFamily family;
  std::string line;
  std::size_t lineno = 0;
  std::size_t largest = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      InstructionSubset s;
      s.id = rec.at("id").get<std::size_t>();
      s.members = rec.at("members").get<std::vector<InstructionId>>();
      s.covered_units = rec.at("covered_units").get<std::vector<std::string>>();
      std::sort(s.members.begin(), s.members.end());
      if (s.members.empty())
        throw CorpusError("line " + std::to_string(lineno) + ": empty subset");
      largest = std::max(largest, s.members.size());
      family.subsets.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError("line " + std::to_string(lineno) +
                        ": malformed subset record (" + e.what() + ")");
    }
  }
  family.cap = cap ? cap : largest;
  for (const auto& s : family.subsets)
    if (s.members.size() > family.cap)
      throw CorpusError("subset " + std::to_string(s.id) + " exceeds cap");
  return family;
}

inline SubsetFamily load_family(const std::string& path, std::size_t cap = 0) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open family file " + path);
  return read_family(in, cap);
}

}  // namespace isp
