#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "isp/corpus.hpp"

namespace isp {

/// Seeded 64-bit engine plus the two draws the generators need. Draws are
/// built directly on the raw engine output so results do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do x = engine_(); while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Draws indices with fixed relative weights.
class WeightedSampler {
 public:
  explicit WeightedSampler(const std::vector<double>& weights) {
    if (weights.empty()) throw std::invalid_argument("no weights to sample from");
    double acc = 0;
    for (double w : weights) {
      if (!(w >= 0)) throw std::invalid_argument("negative weight");
      acc += w;
      cumulative_.push_back(acc);
    }
    if (!(acc > 0)) throw std::invalid_argument("weights sum to zero");
  }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(it - cumulative_.begin(), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

/// Bounded integer distribution for unit sizes. Text form:
///   fixed:N | uniform:A..B | geometric:P:A..B
/// Geometric is truncated to [A, B] by rejection; P is the per-step stop
/// probability.
struct SizeDistribution {
  enum class Kind { Fixed, Uniform, Geometric };
  Kind kind = Kind::Uniform;
  std::size_t min = 1;
  std::size_t max = 40;
  double p = 0.1;

  static SizeDistribution fixed(std::size_t n) { return {Kind::Fixed, n, n, 0}; }
  static SizeDistribution uniform(std::size_t a, std::size_t b) {
    return {Kind::Uniform, a, b, 0};
  }

  static SizeDistribution parse(const std::string& text) {
    auto bad = [&] {
      return std::invalid_argument("invalid size distribution \"" + text + "\"");
    };
    auto parse_range = [&](const std::string& r, std::size_t& a, std::size_t& b) {
      const auto dots = r.find("..");
      if (dots == std::string::npos) throw bad();
      try {
        std::size_t used = 0;
        a = std::stoul(r.substr(0, dots), &used);
        if (used != dots) throw bad();
        const std::string rhs = r.substr(dots + 2);
        b = std::stoul(rhs, &used);
        if (used != rhs.size()) throw bad();
      } catch (const std::logic_error&) {
        throw bad();
      }
    };
    SizeDistribution d;
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw bad();
    const std::string kind = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    if (kind == "fixed") {
      d.kind = Kind::Fixed;
      try {
        std::size_t used = 0;
        d.min = d.max = std::stoul(rest, &used);
        if (used != rest.size()) throw bad();
      } catch (const std::logic_error&) {
        throw bad();
      }
    } else if (kind == "uniform") {
      d.kind = Kind::Uniform;
      parse_range(rest, d.min, d.max);
    } else if (kind == "geometric") {
      d.kind = Kind::Geometric;
      const auto c2 = rest.find(':');
      if (c2 == std::string::npos) throw bad();
      try {
        d.p = std::stod(rest.substr(0, c2));
      } catch (const std::logic_error&) {
        throw bad();
      }
      if (!(d.p > 0 && d.p <= 1)) throw bad();
      parse_range(rest.substr(c2 + 1), d.min, d.max);
    } else {
      throw bad();
    }
    if (d.min < 1 || d.max < d.min) throw bad();
    return d;
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::Fixed: return "fixed:" + std::to_string(min);
      case Kind::Uniform:
        return "uniform:" + std::to_string(min) + ".." + std::to_string(max);
      case Kind::Geometric: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "geometric:%g:%zu..%zu", p, min, max);
        return buf;
      }
    }
    return {};
  }

  std::size_t draw(Rng& rng) const {
    switch (kind) {
      case Kind::Fixed: return min;
      case Kind::Uniform: return min + rng.below(max - min + 1);
      case Kind::Geometric:
        for (;;) {
          std::size_t n = min;
          while (n <= max && rng.uniform() >= p) ++n;
          if (n <= max) return n;
        }
    }
    return min;
  }
};

/// Overlapping instruction pools for clustered corpora. Each pool holds the
/// `shared` top-ranked instructions plus a window over the remaining ranks;
/// consecutive windows overlap.
struct PoolLayout {
  std::size_t pool_count = 0;
  std::size_t pool_size = 10;
  std::size_t shared = 3;
};

// Zero-based rank indices per pool.
inline std::vector<std::vector<std::size_t>> make_pools(std::size_t alphabet_size,
                                                        const PoolLayout& layout) {
  if (layout.pool_count == 0 || layout.pool_size == 0)
    throw std::invalid_argument("pool layout needs at least one non-empty pool");
  const std::size_t shared = std::min({layout.shared, layout.pool_size, alphabet_size});
  const std::size_t tail = alphabet_size - shared;
  const std::size_t window = std::min(layout.pool_size - shared, tail);
  const std::size_t stride = tail == 0 ? 0 : std::max<std::size_t>(1, tail / layout.pool_count);
  std::vector<std::vector<std::size_t>> pools;
  for (std::size_t j = 0; j < layout.pool_count; ++j) {
    std::vector<std::size_t> pool;
    for (std::size_t k = 0; k < shared; ++k) pool.push_back(k);
    for (std::size_t k = 0; k < window; ++k)
      pool.push_back(shared + (j * stride + k) % tail);
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    pools.push_back(std::move(pool));
  }
  return pools;
}

// Rank k (1-based) gets weight k^-exponent.
inline std::vector<double> zipf_weights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = std::pow(static_cast<double>(k + 1), -exponent);
  return w;
}

// "i1" is the most frequent instruction.
inline std::string ranked_instruction_name(std::size_t rank) {
  return "i" + std::to_string(rank);
}

struct ZipfCorpusOptions {
  std::size_t num_units = 1000;
  std::size_t alphabet_size = 100;
  double zipf_exponent = 1.0;
  SizeDistribution sizes = SizeDistribution::uniform(1, 40);
  std::uint64_t seed = 1;
  // Clustered mode when set: each unit draws from one randomly chosen pool.
  std::optional<PoolLayout> pools;
  // Optional ranked names; defaults to i1..iN.
  std::vector<InstructionId> names;
};

inline Corpus generate_zipf_corpus(const ZipfCorpusOptions& opt) {
  if (opt.num_units < 1) throw std::invalid_argument("num_units must be at least 1");
  if (opt.alphabet_size < 1) throw std::invalid_argument("alphabet_size must be at least 1");
  if (!(opt.zipf_exponent > 0)) throw std::invalid_argument("zipf exponent must be positive");
  if (opt.sizes.min < 1 || opt.sizes.max < opt.sizes.min)
    throw std::invalid_argument("invalid size distribution");
  if (!opt.names.empty() && opt.names.size() != opt.alphabet_size)
    throw std::invalid_argument("names must match alphabet_size");

  std::vector<InstructionId> names = opt.names;
  if (names.empty())
    for (std::size_t k = 1; k <= opt.alphabet_size; ++k)
      names.push_back(ranked_instruction_name(k));

  const auto weights = zipf_weights(opt.alphabet_size, opt.zipf_exponent);
  std::vector<std::vector<std::size_t>> pools;
  std::vector<WeightedSampler> samplers;
  if (opt.pools) {
    pools = make_pools(opt.alphabet_size, *opt.pools);
    for (const auto& pool : pools) {
      std::vector<double> w;
      for (std::size_t k : pool) w.push_back(weights[k]);
      samplers.emplace_back(w);
    }
  } else {
    pools.emplace_back();
    for (std::size_t k = 0; k < opt.alphabet_size; ++k) pools[0].push_back(k);
    samplers.emplace_back(weights);
  }

  Rng rng(opt.seed);
  std::vector<ProgramUnit> units;
  units.reserve(opt.num_units);
  const std::size_t width = std::to_string(opt.num_units).size();
  for (std::size_t u = 0; u < opt.num_units; ++u) {
    const std::size_t pool = pools.size() == 1 ? 0 : rng.below(pools.size());
    const std::size_t n = opt.sizes.draw(rng);
    ProgramUnit pu;
    std::string num = std::to_string(u + 1);
    pu.id = "u" + std::string(width - num.size(), '0') + num;
    for (std::size_t i = 0; i < n; ++i)
      pu.instructions.push_back(names[pools[pool][samplers[pool](rng)]]);
    units.push_back(std::move(pu));
  }
  return Corpus(std::move(units));
}

}  // namespace isp
