#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isp/corpus.hpp"
#include "isp/generate.hpp"
#include "isp/parallel.hpp"
#include "isp/probability.hpp"

namespace isp {

struct CorpusSplit {
  Corpus train;
  Corpus test;
};

/// Uniform split without replacement. The training part takes
/// round(fraction * N) units, at least one and at most N - 1. For a fixed
/// seed the training sets of increasing fractions are nested. Both parts
/// keep corpus order.
inline CorpusSplit split_corpus(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0 && fraction < 1))
    throw std::invalid_argument("training fraction must lie strictly between 0 and 1");
  const std::size_t n = corpus.size();
  if (n < 2) throw std::invalid_argument("splitting needs at least two units");
  std::size_t k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n - 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < k; ++i) in_train[order[i]] = true;
  std::vector<ProgramUnit> train, test;
  for (std::size_t i = 0; i < n; ++i)
    (in_train[i] ? train : test).push_back(corpus.units()[i]);
  return {Corpus(std::move(train)), Corpus(std::move(test))};
}

struct SizeCoverage {
  double coverage_pct = 0;
  std::size_t n_test = 0;
  std::size_t n_covered = 0;
};

struct ValidationResult {
  double training_fraction = 0;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  // Sizes with a threshold. Sizes with no test units report 100% vacuously.
  std::map<std::size_t, SizeCoverage> per_size_coverage;
  std::vector<std::size_t> sizes_without_threshold;
  std::map<std::size_t, std::size_t> test_units_by_size;

  /// Mean over sizes that have test units; a size without a threshold
  /// counts as 0% since none of its units lie in any thresholded space.
  double mean_coverage() const {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& [size, count] : test_units_by_size) {
      if (count == 0) continue;
      auto it = per_size_coverage.find(size);
      sum += it == per_size_coverage.end() ? 0.0 : it->second.coverage_pct;
      ++n;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
  }
};

/// Coverage of `test` units by `thresholds`, per size 1..max_size. A test
/// unit whose instructions are outside the table counts as uncovered.
inline ValidationResult coverage_of(const Corpus& test, const ProbabilityTable& table,
                                    const ThresholdTable& thresholds, std::size_t max_size) {
  ValidationResult r;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> tally;  // size -> (n, covered)
  for (const auto& u : test.units()) {
    if (u.size() > max_size) continue;
    auto& [n, covered] = tally[u.size()];
    ++n;
    const auto thr = thresholds.at(u.size());
    if (!thr) continue;
    try {
      if (admissible(solution_probability(table, u), *thr)) ++covered;
    } catch (const ScopeError&) {
    }
  }
  for (std::size_t s = 1; s <= max_size; ++s) {
    const auto [n, covered] = tally.count(s) ? tally[s] : std::pair<std::size_t, std::size_t>{0, 0};
    r.test_units_by_size[s] = n;
    if (!thresholds.at(s)) {
      r.sizes_without_threshold.push_back(s);
      continue;
    }
    SizeCoverage c;
    c.n_test = n;
    c.n_covered = covered;
    c.coverage_pct = n ? 100.0 * static_cast<double>(covered) / static_cast<double>(n) : 100.0;
    r.per_size_coverage[s] = c;
  }
  return r;
}

struct ValidationOptions {
  std::vector<double> fractions;
  std::size_t max_size = 40;
  std::uint64_t seed = 1;
  // Each repeat r uses seed + r.
  std::size_t repeats = 1;
  // Stricter variant: instruction probabilities from the training part only.
  bool probabilities_from_training = false;
  std::size_t threads = 1;
};

/// Thresholds trained on a random part of the corpus, coverage measured on
/// the rest, for each training fraction.
inline std::vector<ValidationResult> validate(const Corpus& corpus, const ValidationOptions& opt) {
  for (double f : opt.fractions)
    if (!(f > 0 && f < 1))
      throw std::invalid_argument("training fraction must lie strictly between 0 and 1");
  if (opt.repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  const auto full_table = global_instruction_probs(corpus);

  struct Job {
    double fraction;
    std::size_t repeat;
  };
  std::vector<Job> jobs;
  for (double f : opt.fractions)
    for (std::size_t r = 0; r < opt.repeats; ++r) jobs.push_back({f, r});

  std::vector<ValidationResult> out(jobs.size());
  parallel_for(jobs.size(), opt.threads, [&](std::size_t j) {
    const auto seed = opt.seed + jobs[j].repeat;
    const auto split = split_corpus(corpus, jobs[j].fraction, seed);
    std::optional<ProbabilityTable> own;
    if (opt.probabilities_from_training) own = global_instruction_probs(split.train);
    const ProbabilityTable& table = own ? *own : full_table;
    const auto thresholds = derive_thresholds(split.train, table, opt.max_size);
    auto r = coverage_of(split.test, table, thresholds, opt.max_size);
    r.training_fraction = jobs[j].fraction;
    r.repeat = jobs[j].repeat;
    r.seed = seed;
    out[j] = std::move(r);
  });
  return out;
}

}  // namespace isp
