#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace isp {

using InstructionId = std::string;

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-empty, no whitespace.
inline bool is_valid_instruction(std::string_view name) {
  if (name.empty()) return false;
  return std::none_of(name.begin(), name.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
           c == '\f';
  });
}

/// A program unit reduced to the instructions it uses. Instructions keep the
/// order they were given in (useful when a unit is also a runnable program),
/// but equality and every statistic treat them as a multiset.
struct ProgramUnit {
  std::string id;
  std::vector<InstructionId> instructions;

  std::size_t size() const { return instructions.size(); }

  std::vector<InstructionId> unique_instructions() const {
    std::vector<InstructionId> out = instructions;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::map<InstructionId, std::size_t> counts() const {
    std::map<InstructionId, std::size_t> out;
    for (const auto& ins : instructions) ++out[ins];
    return out;
  }

  friend bool operator==(const ProgramUnit& a, const ProgramUnit& b) {
    return a.id == b.id && a.counts() == b.counts();
  }
};

inline std::size_t pu_size(const ProgramUnit& pu) { return pu.size(); }

/// Immutable, validated collection of program units.
class Corpus {
 public:
  Corpus() = default;

  // Throws CorpusError on duplicate ids, empty units or bad instruction tokens.
  explicit Corpus(std::vector<ProgramUnit> units) : units_(std::move(units)) {
    std::unordered_set<std::string> seen;
    std::set<InstructionId> alphabet;
    for (const auto& u : units_) {
      if (!seen.insert(u.id).second)
        throw CorpusError("duplicate program unit id \"" + u.id + "\"");
      if (u.instructions.empty())
        throw CorpusError("program unit \"" + u.id + "\" has no instructions");
      for (const auto& ins : u.instructions) {
        if (!is_valid_instruction(ins))
          throw CorpusError("program unit \"" + u.id +
                            "\" has an invalid instruction token");
        alphabet.insert(ins);
      }
    }
    alphabet_.assign(alphabet.begin(), alphabet.end());
    for (std::size_t i = 0; i < units_.size(); ++i) index_.emplace(units_[i].id, i);
  }

  const std::vector<ProgramUnit>& units() const { return units_; }
  // Sorted.
  const std::vector<InstructionId>& alphabet() const { return alphabet_; }
  std::size_t size() const { return units_.size(); }
  bool empty() const { return units_.empty(); }

  const ProgramUnit* find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &units_[it->second];
  }

  const ProgramUnit& at(const std::string& id) const {
    const ProgramUnit* pu = find(id);
    if (!pu) throw CorpusError("unknown program unit \"" + id + "\"");
    return *pu;
  }

  std::size_t total_instructions() const {
    std::size_t n = 0;
    for (const auto& u : units_) n += u.size();
    return n;
  }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.units_ == b.units_;
  }

 private:
  std::vector<ProgramUnit> units_;
  std::vector<InstructionId> alphabet_;
  std::map<std::string, std::size_t> index_;
};

// JSON Lines: {"id": "...", "instructions": ["...", ...]} per line.
inline Corpus read_corpus(std::istream& in) {
  std::vector<ProgramUnit> units;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = [&] { return "line " + std::to_string(lineno) + ": "; };
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(where() + "malformed JSON (" + e.what() + ")");
    }
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string())
      throw CorpusError(where() + "missing string field \"id\"");
    if (!rec.contains("instructions") || !rec["instructions"].is_array())
      throw CorpusError(where() + "missing array field \"instructions\"");
    ProgramUnit pu;
    pu.id = rec["id"].get<std::string>();
    for (const auto& ins : rec["instructions"]) {
      if (!ins.is_string())
        throw CorpusError(where() + "instruction is not a string");
      pu.instructions.push_back(ins.get<std::string>());
    }
    if (pu.instructions.empty())
      throw CorpusError(where() + "empty instruction list for \"" + pu.id + "\"");
    units.push_back(std::move(pu));
  }
  if (units.empty()) throw CorpusError("empty corpus");
  return Corpus(std::move(units));
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file " + path);
  return read_corpus(in);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& u : corpus.units()) {
    nlohmann::json rec;
    rec["id"] = u.id;
    rec["instructions"] = u.instructions;
    out << rec.dump() << '\n';
  }
}

/// Units larger than max_size are dropped rather than rejected.
struct SizeFilterResult {
  Corpus kept;
  std::vector<std::string> dropped;
};

inline SizeFilterResult filter_by_size(const Corpus& corpus, std::size_t max_size) {
  std::vector<ProgramUnit> kept;
  std::vector<std::string> dropped;
  for (const auto& u : corpus.units()) {
    if (u.size() <= max_size)
      kept.push_back(u);
    else
      dropped.push_back(u.id);
  }
  return {Corpus(std::move(kept)), std::move(dropped)};
}

/// Builds a sub-corpus from a list of unit ids, in the given order.
inline Corpus select_units(const Corpus& corpus, const std::vector<std::string>& ids) {
  std::vector<ProgramUnit> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(corpus.at(id));
  return Corpus(std::move(out));
}

}  // namespace isp
