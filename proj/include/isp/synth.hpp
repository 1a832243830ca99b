#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isp/corpus.hpp"
#include "isp/dsl.hpp"
#include "isp/generate.hpp"
#include "isp/parallel.hpp"
#include "isp/probability.hpp"
#include "isp/subsets.hpp"

namespace isp {

/// How thresholds relax between rounds. Round k searches size S at
/// max(PST(S) - k * step, floor(S)), where floor(S) is the least probable
/// solution the subset can form. A size without a threshold sits at its
/// floor from the start. Once a size has been searched at its floor it is
/// complete and later rounds skip it.
struct WideningSchedule {
  double step_log10 = 2.0;
  // 0 means keep widening until every threshold is at its floor.
  std::size_t max_rounds = 0;
  // When false, a single unpruned round is run.
  bool prune = true;
};

struct SearchReport {
  std::optional<dsl::Program> solution;
  std::optional<std::size_t> solution_subset;
  double solution_log_ps = 0;
  double threshold_at_discovery = 0;
  std::size_t solution_round = 0;
  std::uint64_t nodes_expanded = 0;
  std::uint64_t nodes_pruned_by_threshold = 0;
  std::uint64_t candidates_tested = 0;
  // log10 offset applied to every threshold, one entry per round run.
  std::vector<double> threshold_schedule_used;
  bool schedule_exhausted = false;
};

struct SynthesisOptions {
  std::size_t max_size = 6;
  WideningSchedule schedule;
  std::size_t threads = 1;
};

namespace detail {

struct SubsetSearchSpace {
  std::size_t subset_id = 0;
  std::vector<dsl::Op> ops;       // descending probability
  std::vector<double> log_probs;  // aligned with ops
  std::map<std::size_t, double> pst;
  double lowest = 0;
};

inline SubsetSearchSpace make_search_space(const InstructionSubset& subset,
                                           const ScopeModel& model) {
  SubsetSearchSpace sp;
  sp.subset_id = subset.id;
  for (const auto& e : model.table.entries()) {
    const auto op = dsl::parse_op(e.instruction);
    if (!op)
      throw std::invalid_argument("subset " + std::to_string(subset.id) +
                                  " contains non-DSL instruction \"" + e.instruction + "\"");
    sp.ops.push_back(*op);
    sp.log_probs.push_back(e.log10_prob);
  }
  for (const auto& [size, t] : model.thresholds.thresholds) sp.pst[size] = t.log10;
  sp.lowest = model.table.lowest_log_prob();
  return sp;
}

struct Counters {
  std::uint64_t expanded = 0;
  std::uint64_t pruned = 0;
  std::uint64_t tested = 0;
};

struct Found {
  dsl::Program program;
  double log_ps = 0;
};

/// Depth-first search over type-correct programs of exactly `size`
/// instructions whose running solution probability stays above `threshold`.
class DepthFirst {
 public:
  DepthFirst(const SubsetSearchSpace& sp, const dsl::TestCaseSpec& spec, std::size_t size,
             double threshold, Counters& counters, const std::atomic<bool>* stop)
      : sp_(sp), spec_(spec), size_(size), cut_(threshold - kThresholdSlack),
        counters_(counters), stop_(stop) {}

  std::optional<Found> run() {
    program_.clear();
    dsl::TypeStack ts(spec_.input_types());
    if (walk(ts, 0.0)) return Found{program_, found_ps_};
    return std::nullopt;
  }

 private:
  bool walk(const dsl::TypeStack& ts, double acc) {
    if (stop_ && stop_->load(std::memory_order_relaxed)) return false;
    if (program_.size() == size_) {
      if (ts.depth() == 0) return false;
      ++counters_.tested;
      if (dsl::passes(program_, spec_)) {
        found_ps_ = acc;
        return true;
      }
      return false;
    }
    for (std::size_t k = 0; k < sp_.ops.size(); ++k) {
      const dsl::Op op = sp_.ops[k];
      if (!ts.accepts(op)) continue;
      const double next = acc + sp_.log_probs[k];
      if (next < cut_) {
        ++counters_.pruned;
        continue;
      }
      ++counters_.expanded;
      dsl::TypeStack child = ts;
      child.apply(op);
      program_.push_back(op);
      if (walk(child, next)) return true;
      program_.pop_back();
    }
    return false;
  }

  const SubsetSearchSpace& sp_;
  const dsl::TestCaseSpec& spec_;
  std::size_t size_;
  double cut_;
  Counters& counters_;
  const std::atomic<bool>* stop_;
  dsl::Program program_;
  double found_ps_ = 0;
};

}  // namespace detail

/// Generate-and-test synthesis over instruction subsets. Each round visits
/// the subsets in family order and, within a subset, sizes 1..max_size;
/// partial programs whose solution probability falls below the round's
/// threshold for the target size are cut. The first passing program wins.
/// With several threads, subsets of a round are searched concurrently and
/// the lowest-indexed success is kept, so the solution matches the
/// single-threaded one; counters then depend on scheduling.
inline SearchReport synthesize(const dsl::TestCaseSpec& spec, const SubsetFamily& family,
                               const std::vector<ScopeModel>& models,
                               const SynthesisOptions& opt) {
  spec.validate();
  if (models.size() != family.subsets.size())
    throw std::invalid_argument("one model per subset is required");
  std::vector<detail::SubsetSearchSpace> spaces;
  spaces.reserve(models.size());
  for (std::size_t k = 0; k < models.size(); ++k)
    spaces.push_back(detail::make_search_space(family.subsets[k], models[k]));

  // Rounds needed for every threshold to reach its floor.
  std::size_t rounds = 1;
  if (opt.schedule.prune) {
    if (!(opt.schedule.step_log10 > 0)) throw std::invalid_argument("widening step must be positive");
    for (const auto& sp : spaces)
      for (const auto& [size, pst] : sp.pst) {
        if (size > opt.max_size) continue;
        const double floor = static_cast<double>(size) * sp.lowest;
        const double gap = std::max(0.0, pst - floor);
        rounds = std::max(rounds, 1 + static_cast<std::size_t>(std::ceil(gap / opt.schedule.step_log10)));
      }
  }
  if (opt.schedule.max_rounds > 0) rounds = std::min(rounds, opt.schedule.max_rounds);

  SearchReport report;
  for (std::size_t round = 0; round < rounds; ++round) {
    const double step = opt.schedule.step_log10;
    const double offset = opt.schedule.prune ? -static_cast<double>(round) * step : 0.0;
    report.threshold_schedule_used.push_back(offset);

    // Nothing when the size was already searched at its floor.
    auto threshold_for = [&](const detail::SubsetSearchSpace& sp,
                             std::size_t size) -> std::optional<double> {
      if (!opt.schedule.prune) return -std::numeric_limits<double>::infinity();
      const double floor = static_cast<double>(size) * sp.lowest;
      auto it = sp.pst.find(size);
      if (it == sp.pst.end()) return round == 0 ? std::optional<double>(floor) : std::nullopt;
      if (round > 0 && it->second - static_cast<double>(round - 1) * step <= floor)
        return std::nullopt;
      return std::max(it->second + offset, floor);
    };

    std::vector<detail::Counters> counters(spaces.size());
    std::vector<std::optional<detail::Found>> found(spaces.size());
    std::vector<double> found_threshold(spaces.size(), 0);
    std::atomic<std::size_t> best{spaces.size()};
    std::vector<std::atomic<bool>> stop(spaces.size());

    parallel_for(spaces.size(), opt.threads, [&](std::size_t k) {
      if (k > best.load()) return;
      const auto& sp = spaces[k];
      for (std::size_t size = 1; size <= opt.max_size && !found[k]; ++size) {
        const auto thr = threshold_for(sp, size);
        if (!thr) continue;
        detail::DepthFirst dfs(sp, spec, size, *thr, counters[k], &stop[k]);
        if (auto f = dfs.run()) {
          found[k] = std::move(f);
          found_threshold[k] = *thr;
        }
      }
      if (found[k]) {
        std::size_t cur = best.load();
        while (k < cur && !best.compare_exchange_weak(cur, k)) {
        }
        for (std::size_t j = k + 1; j < spaces.size(); ++j) stop[j].store(true);
      }
    });

    for (const auto& c : counters) {
      report.nodes_expanded += c.expanded;
      report.nodes_pruned_by_threshold += c.pruned;
      report.candidates_tested += c.tested;
    }
    const std::size_t winner = best.load();
    if (winner < spaces.size()) {
      report.solution = found[winner]->program;
      report.solution_log_ps = found[winner]->log_ps;
      report.solution_subset = spaces[winner].subset_id;
      report.threshold_at_discovery = found_threshold[winner];
      report.solution_round = round;
      return report;
    }
  }
  report.schedule_exhausted = true;
  return report;
}

inline nlohmann::json report_to_json(const SearchReport& r) {
  nlohmann::json j;
  if (r.solution) {
    j["solution"] = dsl::program_names(*r.solution);
    j["solution_subset"] = *r.solution_subset;
    j["solution_log10_ps"] = r.solution_log_ps;
    j["threshold_at_discovery"] = r.threshold_at_discovery;
    j["solution_round"] = r.solution_round;
  } else {
    j["solution"] = nullptr;
  }
  j["nodes_expanded"] = r.nodes_expanded;
  j["nodes_pruned_by_threshold"] = r.nodes_pruned_by_threshold;
  j["candidates_tested"] = r.candidates_tested;
  j["threshold_schedule_used"] = r.threshold_schedule_used;
  j["schedule_exhausted"] = r.schedule_exhausted;
  j["extension_order"] = "descending per-subset instruction probability";
  return j;
}

/// Options for a corpus of random, type-correct DSL programs that run
/// without faulting on sample inputs. Unit instructions keep program order.
struct DslCorpusOptions {
  std::size_t num_units = 2000;
  SizeDistribution sizes = SizeDistribution::uniform(1, 8);
  double zipf_exponent = 1.0;
  std::uint64_t seed = 1;
  std::optional<PoolLayout> pools = PoolLayout{12, 8, 3};
  std::vector<dsl::Type> input_types = {dsl::Type::List};
};

// Random value of the given type; lists are never empty.
inline dsl::Value random_value(Rng& rng, dsl::Type t) {
  if (t == dsl::Type::Int) return static_cast<dsl::Int>(rng.below(19)) - 9;
  dsl::List l(1 + rng.below(6));
  for (auto& x : l) x = static_cast<dsl::Int>(rng.below(19)) - 9;
  return l;
}

inline std::vector<dsl::Value> random_inputs(Rng& rng, const std::vector<dsl::Type>& types) {
  std::vector<dsl::Value> out;
  for (auto t : types) out.push_back(random_value(rng, t));
  return out;
}

/// Draws one type-correct program, or nothing if the pool dead-ends.
inline std::optional<dsl::Program> sample_program(Rng& rng, const std::vector<dsl::Op>& pool,
                                                  const WeightedSampler& sampler,
                                                  const std::vector<dsl::Type>& inputs,
                                                  std::size_t length) {
  dsl::TypeStack ts(inputs);
  dsl::Program p;
  for (std::size_t i = 0; i < length; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
      const dsl::Op op = pool[sampler(rng)];
      if (!ts.accepts(op)) continue;
      ts.apply(op);
      p.push_back(op);
      placed = true;
    }
    if (!placed) return std::nullopt;
  }
  if (ts.depth() == 0) return std::nullopt;
  return p;
}

inline Corpus generate_dsl_corpus(const DslCorpusOptions& opt) {
  const auto names = dsl::ranked_alphabet();
  const auto weights = zipf_weights(names.size(), opt.zipf_exponent);
  std::vector<std::vector<std::size_t>> pools;
  if (opt.pools) {
    pools = make_pools(names.size(), *opt.pools);
  } else {
    pools.emplace_back();
    for (std::size_t k = 0; k < names.size(); ++k) pools[0].push_back(k);
  }
  std::vector<std::vector<dsl::Op>> pool_ops;
  std::vector<WeightedSampler> samplers;
  for (const auto& pool : pools) {
    std::vector<dsl::Op> ops;
    std::vector<double> w;
    for (std::size_t k : pool) {
      ops.push_back(*dsl::parse_op(names[k]));
      w.push_back(weights[k]);
    }
    pool_ops.push_back(std::move(ops));
    samplers.emplace_back(w);
  }

  Rng rng(opt.seed);
  std::vector<ProgramUnit> units;
  const std::size_t width = std::to_string(opt.num_units).size();
  std::size_t failures = 0;
  while (units.size() < opt.num_units) {
    const std::size_t pool = pools.size() == 1 ? 0 : rng.below(pools.size());
    const std::size_t length = opt.sizes.draw(rng);
    auto program = sample_program(rng, pool_ops[pool], samplers[pool], opt.input_types, length);
    bool ok = program.has_value();
    for (int probe = 0; ok && probe < 3; ++probe)
      ok = !dsl::is_fault(dsl::evaluate(*program, random_inputs(rng, opt.input_types)));
    if (!ok) {
      if (++failures > 1000 * opt.num_units + 100000)
        throw std::runtime_error("could not sample enough runnable DSL programs");
      continue;
    }
    ProgramUnit pu;
    const std::string num = std::to_string(units.size() + 1);
    pu.id = "p" + std::string(width - num.size(), '0') + num;
    pu.instructions = dsl::program_names(*program);
    units.push_back(std::move(pu));
  }
  return Corpus(std::move(units));
}

/// Draws a type-correct program of `length` instructions from a subset's
/// instruction distribution.
inline std::optional<dsl::Program> sample_from_table(Rng& rng, const ProbabilityTable& table,
                                                     const std::vector<dsl::Type>& inputs,
                                                     std::size_t length) {
  std::vector<dsl::Op> ops;
  std::vector<double> weights;
  for (const auto& e : table.entries()) {
    const auto op = dsl::parse_op(e.instruction);
    if (!op) throw std::invalid_argument("non-DSL instruction \"" + e.instruction + "\"");
    ops.push_back(*op);
    weights.push_back(static_cast<double>(e.count));
  }
  return sample_program(rng, ops, WeightedSampler(weights), inputs, length);
}

/// Test cases that pin down a program's behaviour on random inputs.
/// Returns nothing if the program faults on any drawn input.
inline std::optional<dsl::TestCaseSpec> spec_from_program(const dsl::Program& program,
                                                          const std::vector<dsl::Type>& types,
                                                          std::size_t cases, Rng& rng) {
  dsl::TestCaseSpec spec;
  for (std::size_t c = 0; c < cases; ++c) {
    auto inputs = random_inputs(rng, types);
    auto out = dsl::evaluate(program, inputs);
    if (dsl::is_fault(out)) return std::nullopt;
    spec.cases.push_back({std::move(inputs), std::get<dsl::Value>(std::move(out))});
  }
  return spec;
}

}  // namespace isp
