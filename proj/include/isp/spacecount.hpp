#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "isp/parallel.hpp"
#include "isp/probability.hpp"

namespace isp {

using BigInt = boost::multiprecision::cpp_int;

enum class CountingMode { Sequences, Multisets };

inline std::string to_string(CountingMode m) {
  return m == CountingMode::Sequences ? "sequences" : "multisets";
}

inline CountingMode parse_counting_mode(const std::string& s) {
  if (s == "sequences") return CountingMode::Sequences;
  if (s == "multisets") return CountingMode::Multisets;
  throw std::invalid_argument("unknown counting mode \"" + s + "\"");
}

// log10 of a non-negative integer; -inf for zero.
inline double log10_big(const BigInt& v) {
  if (v.is_zero()) return -std::numeric_limits<double>::infinity();
  if (boost::multiprecision::msb(v) < 1000) return std::log10(v.convert_to<double>());
  const std::string digits = v.str();
  const std::size_t lead = std::min<std::size_t>(17, digits.size());
  return static_cast<double>(digits.size() - lead) + std::log10(std::stod(digits.substr(0, lead)));
}

inline BigInt binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  BigInt r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

// S! / prod(m_i!) for the given occurrence counts.
inline BigInt multinomial(std::span<const std::size_t> counts) {
  BigInt r = 1;
  std::size_t n = 0;
  for (std::size_t m : counts) {
    n += m;
    r *= binomial(n, m);
  }
  return r;
}

inline BigInt baseline_size(std::size_t is_cap, std::size_t size) {
  if (is_cap < 1 || size < 1) throw std::invalid_argument("baseline needs cap >= 1 and size >= 1");
  return boost::multiprecision::pow(BigInt(is_cap), static_cast<unsigned>(size));
}

namespace detail {

// Bound checks are widened by this much so they never disagree with the
// exact per-leaf sum through rounding.
inline constexpr double kBoundMargin = 1e-9;

/// Depth-first enumeration of occurrence-count vectors over log-probs in
/// descending order. A branch is cut when even filling every remaining slot
/// with the best remaining instruction cannot reach the threshold; a branch
/// is taken whole, in closed form, when even the worst remaining instruction
/// everywhere stays above it. Everything between is walked to the leaves,
/// where the sum is formed in the same order as
/// ProbabilityTable::log_probability_of_counts.
class AdmissibleCounter {
 public:
  AdmissibleCounter(std::span<const double> log_probs, std::size_t size, double threshold,
                    CountingMode mode)
      : lp_(log_probs), size_(size), cut_(threshold - kThresholdSlack), mode_(mode) {
    const std::size_t n = lp_.size();
    binom_.assign(size + 1, std::vector<std::uint64_t>(size + 1, 0));
    for (std::size_t r = 0; r <= size; ++r) {
      binom_[r][0] = 1;
      for (std::size_t k = 1; k <= r; ++k)
        binom_[r][k] = binom_[r - 1][k - 1] + (k <= r - 1 ? binom_[r - 1][k] : 0);
    }
    // whole_[k][r]: completions of r slots over k instructions.
    whole_.assign(n + 1, std::vector<BigInt>(size + 1));
    for (std::size_t k = 1; k <= n; ++k)
      for (std::size_t r = 0; r <= size; ++r)
        whole_[k][r] = mode == CountingMode::Sequences
                           ? boost::multiprecision::pow(BigInt(k), static_cast<unsigned>(r))
                           : binomial(r + k - 1, k - 1);
  }

  BigInt run() {
    total_ = 0;
    if (lp_.empty() || size_ == 0) return 0;
    walk(0, size_, 0.0, BigInt(1));
    return total_;
  }

 private:
  void walk(std::size_t i, std::size_t r, double acc, const BigInt& coef) {
    const std::size_t n = lp_.size();
    if (r == 0) {
      if (acc >= cut_) total_ += coef;
      return;
    }
    if (i + 1 == n) {
      if (acc + static_cast<double>(r) * lp_[i] >= cut_) total_ += coef;
      return;
    }
    const double rd = static_cast<double>(r);
    if (acc + rd * lp_[i] < cut_ - kBoundMargin) return;
    if (acc + rd * lp_[n - 1] >= cut_ + kBoundMargin) {
      total_ += coef * whole_[n - i][r];
      return;
    }
    for (std::size_t m = r + 1; m-- > 0;) {
      const double next = m ? acc + static_cast<double>(m) * lp_[i] : acc;
      if (mode_ == CountingMode::Sequences)
        walk(i + 1, r - m, next, coef * binom_[r][m]);
      else
        walk(i + 1, r - m, next, coef);
    }
  }

  std::span<const double> lp_;
  std::size_t size_;
  double cut_;
  CountingMode mode_;
  std::vector<std::vector<std::uint64_t>> binom_;
  std::vector<std::vector<BigInt>> whole_;
  BigInt total_;
};

}  // namespace detail

/// Number of size-`size` solutions over the table's instructions whose
/// solution probability clears `threshold`. Exact.
inline BigInt count_admissible(const ProbabilityTable& table, std::size_t size,
                               double threshold, CountingMode mode) {
  if (size < 1) throw std::invalid_argument("size must be at least 1");
  if (table.empty()) throw ScopeError("empty probability table");
  if (size > 60) throw std::invalid_argument("size above 60 is not supported");
  const auto lp = table.log_probs();
  return detail::AdmissibleCounter(lp, size, threshold, mode).run();
}

/// Admissible nodes at every depth 1..size against the same threshold.
inline BigInt count_admissible_cumulative(const ProbabilityTable& table, std::size_t size,
                                          double threshold, CountingMode mode) {
  BigInt total = 0;
  for (std::size_t d = 1; d <= size; ++d) total += count_admissible(table, d, threshold, mode);
  return total;
}

/// Unpruned enumeration of every sequence or multiset; a test oracle.
inline BigInt brute_force_count(const ProbabilityTable& table, std::size_t size,
                                double threshold, CountingMode mode) {
  const std::size_t n = table.size();
  if (n < 1 || n > 8 || size < 1 || size > 8)
    throw std::invalid_argument("brute force is limited to 1..8 instructions and sizes 1..8");
  std::vector<std::size_t> digits(size, 0);
  std::vector<std::size_t> counts(n);
  BigInt total = 0;
  for (;;) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t d : digits) ++counts[d];
    if (admissible(table.log_probability_of_counts(counts), threshold)) total += 1;
    // Odometer; multisets keep digits non-decreasing.
    std::size_t pos = size;
    while (pos > 0 && digits[pos - 1] == n - 1) --pos;
    if (pos == 0) break;
    ++digits[pos - 1];
    for (std::size_t k = pos; k < size; ++k)
      digits[k] = mode == CountingMode::Multisets ? digits[pos - 1] : 0;
  }
  return total;
}

struct SpaceMeasurement {
  Scope scope;
  std::size_t size = 0;
  double threshold = 0;
  BigInt admissible_count;
  BigInt baseline_count;
  double reduction_oom = 0;  // +inf when nothing is admissible
  CountingMode mode = CountingMode::Sequences;
};

struct MeasureOptions {
  std::size_t is_cap = 10;
  CountingMode mode = CountingMode::Sequences;
  std::size_t threads = 1;
  // Count nodes at every depth up to the size instead of only full solutions.
  bool cumulative = false;
};

struct MeasureResult {
  std::vector<SpaceMeasurement> measurements;
  std::vector<std::pair<Scope, std::size_t>> missing;  // no threshold at size
};

inline MeasureResult measure(const std::vector<ScopeModel>& scopes,
                             const std::vector<std::size_t>& sizes, const MeasureOptions& opt) {
  struct Task {
    std::size_t scope;
    std::size_t size;
    double threshold;
  };
  MeasureResult result;
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < scopes.size(); ++s)
    for (std::size_t size : sizes) {
      const auto thr = scopes[s].thresholds.at(size);
      if (!thr)
        result.missing.emplace_back(scopes[s].table.scope(), size);
      else
        tasks.push_back({s, size, *thr});
    }
  result.measurements.resize(tasks.size());
  parallel_for(tasks.size(), opt.threads, [&](std::size_t k) {
    const auto& t = tasks[k];
    const auto& table = scopes[t.scope].table;
    SpaceMeasurement m;
    m.scope = table.scope();
    m.size = t.size;
    m.threshold = t.threshold;
    m.mode = opt.mode;
    m.admissible_count = opt.cumulative
                             ? count_admissible_cumulative(table, t.size, t.threshold, opt.mode)
                             : count_admissible(table, t.size, t.threshold, opt.mode);
    m.baseline_count = baseline_size(opt.is_cap, t.size);
    if (opt.cumulative)
      for (std::size_t d = 1; d < t.size; ++d) m.baseline_count += baseline_size(opt.is_cap, d);
    m.reduction_oom = m.admissible_count.is_zero()
                          ? std::numeric_limits<double>::infinity()
                          : log10_big(m.baseline_count) - log10_big(m.admissible_count);
    result.measurements[k] = std::move(m);
  });
  return result;
}

}  // namespace isp
