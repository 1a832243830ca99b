#include <cmath>
#include <map>
#include <random>

#include <boost/multiprecision/cpp_int.hpp>
#include <gtest/gtest.h>

#include "isp/generate.hpp"
#include "isp/probability.hpp"
#include "isp/subsets.hpp"

namespace isp {
namespace {

using boost::multiprecision::cpp_rational;

ProbabilityTable table_of(std::map<InstructionId, std::uint64_t> counts) {
  return ProbabilityTable(Scope::global(), counts);
}

double lin(double log10_value) { return std::pow(10.0, log10_value); }

Corpus clustered_corpus(std::size_t n, std::uint64_t seed) {
  ZipfCorpusOptions o;
  o.num_units = n;
  o.alphabet_size = 100;
  o.zipf_exponent = 1.0;
  o.sizes = SizeDistribution::uniform(1, 40);
  o.pools = PoolLayout{40, 10, 3};
  o.seed = seed;
  return generate_zipf_corpus(o);
}

TEST(GlobalProbsTest, CountsDuplicates) {
  const Corpus c({{"u1", {"a", "a", "b"}}});
  const auto t = global_instruction_probs(c);
  EXPECT_NEAR(lin(t.log_prob("a")), 2.0 / 3, 1e-15);
  EXPECT_NEAR(lin(t.log_prob("b")), 1.0 / 3, 1e-15);
  EXPECT_EQ(t.total_count(), 3u);
  EXPECT_EQ(t.entries()[0].instruction, "a");
}

TEST(GlobalProbsTest, SingleSymbol) {
  const Corpus c({{"u1", {"a"}}, {"u2", {"a"}}});
  EXPECT_EQ(global_instruction_probs(c).log_prob("a"), 0.0);
}

TEST(GlobalProbsTest, TopRankMatchesHarmonicNumber) {
  ZipfCorpusOptions o;
  o.num_units = 10000;
  o.alphabet_size = 200;
  o.zipf_exponent = 1.0;
  o.sizes = SizeDistribution::uniform(1, 40);
  o.seed = 1;
  const auto t = global_instruction_probs(generate_zipf_corpus(o));
  double h = 0;
  for (int k = 1; k <= 200; ++k) h += 1.0 / k;
  const double expected = 1.0 / h;  // ~0.170
  EXPECT_NEAR(expected, 0.170, 0.001);
  EXPECT_NEAR(lin(t.log_prob("i1")) / expected, 1.0, 0.10);
  EXPECT_EQ(t.entries()[0].instruction, "i1");

  // Rank-ordered values never increase and span more than two decades.
  for (std::size_t i = 1; i < t.size(); ++i)
    EXPECT_LE(t.entries()[i].log10_prob, t.entries()[i - 1].log10_prob);
  EXPECT_GT(t.highest_log_prob() - t.lowest_log_prob(), 2.0);
}

TEST(SubsetProbsTest, Examples) {
  const Corpus c({{"u1", {"a", "a", "b"}}, {"u2", {"a"}}, {"u3", {"b"}}});
  InstructionSubset s{0, {"a", "b"}, {"u1"}};
  auto t = subset_instruction_probs(c, s);
  EXPECT_NEAR(lin(t.log_prob("a")), 2.0 / 3, 1e-15);
  EXPECT_EQ(t.scope().label(), "is:0");

  InstructionSubset s2{1, {"a", "b"}, {"u2", "u3"}};
  t = subset_instruction_probs(c, s2);
  EXPECT_DOUBLE_EQ(t.log_prob("a"), std::log10(0.5));
  EXPECT_DOUBLE_EQ(t.log_prob("b"), std::log10(0.5));

  EXPECT_THROW(subset_instruction_probs(c, InstructionSubset{2, {"a"}, {}}), CorpusError);
}

TEST(SubsetProbsTest, PerSizeVariantCountsOnlyThatSize) {
  const Corpus c({{"u1", {"a", "b"}}, {"u2", {"a", "a", "a"}}});
  InstructionSubset s{0, {"a", "b"}, {"u1", "u2"}};
  const auto t2 = subset_instruction_probs(c, s, 2);
  EXPECT_DOUBLE_EQ(t2.log_prob("b"), std::log10(0.5));
  const auto t3 = subset_instruction_probs(c, s, 3);
  EXPECT_EQ(t3.size(), 1u);
  EXPECT_THROW(subset_instruction_probs(c, s, 7), CorpusError);
}

TEST(NormalizationTest, EveryTableSumsToOne) {
  const auto c = clustered_corpus(3000, 2);
  EXPECT_NEAR(global_instruction_probs(c).linear_sum(), 1.0, 1e-9);
  const auto f = cluster_subsets(c, 10);
  for (const auto& s : f.subsets)
    EXPECT_NEAR(subset_instruction_probs(c, s).linear_sum(), 1.0, 1e-9) << s.id;
}

TEST(SolutionProbabilityTest, Examples) {
  const auto half = table_of({{"a", 1}, {"b", 1}});
  const std::vector<InstructionId> ab{"a", "b"};
  EXPECT_NEAR(solution_probability(half, ab), std::log10(0.25), 1e-15);
  const std::vector<InstructionId> a{"a"};
  EXPECT_EQ(solution_probability(half, a), half.log_prob("a"));

  const auto skew = table_of({{"a", 9}, {"b", 1}});
  const std::vector<InstructionId> aab{"a", "a", "b"};
  EXPECT_NEAR(solution_probability(skew, aab), std::log10(0.081), 1e-14);

  const std::vector<InstructionId> z{"z"};
  EXPECT_THROW(solution_probability(skew, z), ScopeError);
}

TEST(SolutionProbabilityTest, AppendingNeverIncreases) {
  std::mt19937_64 rng(3);
  const auto t = table_of({{"a", 5}, {"b", 3}, {"c", 1}, {"d", 1}});
  const std::vector<InstructionId> names{"a", "b", "c", "d"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<InstructionId> ms;
    double prev = 0;
    for (int k = 0; k < 12; ++k) {
      ms.push_back(names[rng() % 4]);
      const double ps = solution_probability(t, ms);
      EXPECT_LE(ps, prev + 1e-12);
      prev = ps;
    }
  }
}

// Exact rational product of count/total per occurrence.
cpp_rational exact_ps(const ProbabilityTable& t, const std::vector<InstructionId>& ms) {
  cpp_rational p = 1;
  for (const auto& ins : ms) p *= cpp_rational(t.entries()[*t.index_of(ins)].count, t.total_count());
  return p;
}

TEST(SolutionProbabilityTest, LogDomainAgreesWithExactRationals) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 1000; ++trial) {
    std::map<InstructionId, std::uint64_t> counts;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) counts["x" + std::to_string(i)] = 1 + rng() % 20;
    const auto t = table_of(counts);
    std::vector<InstructionId> ms;
    const int size = 1 + static_cast<int>(rng() % 10);
    for (int k = 0; k < size; ++k) ms.push_back("x" + std::to_string(rng() % n));
    const double exact = exact_ps(t, ms).convert_to<double>();
    const double viaLog = lin(solution_probability(t, ms));
    EXPECT_NEAR(viaLog / exact, 1.0, 1e-9);
  }
}

TEST(ThresholdTest, MinimumPerSize) {
  const Corpus c({{"u1", {"a", "b"}}, {"u2", {"a", "a"}}});
  const auto t = table_of({{"a", 9}, {"b", 1}});
  const auto th = derive_thresholds(c, t, {"u1", "u2"}, 40);
  ASSERT_EQ(th.thresholds.size(), 1u);
  EXPECT_NEAR(*th.at(2), std::log10(0.09), 1e-14);
  EXPECT_EQ(th.thresholds.at(2).support, 2u);
  EXPECT_FALSE(th.at(1).has_value());
}

TEST(ThresholdTest, SingletonIsExact) {
  const Corpus c({{"u1", {"a", "b", "b"}}});
  const auto t = global_instruction_probs(c);
  const auto th = derive_thresholds(c, t, 40);
  EXPECT_EQ(*th.at(3), solution_probability(t, c.units()[0]));
}

TEST(ThresholdTest, SizesAboveMaxAreIgnored) {
  const Corpus c({{"u1", {"a", "b", "b"}}, {"u2", {"a"}}});
  const auto th = derive_thresholds(c, global_instruction_probs(c), 2);
  EXPECT_TRUE(th.at(1).has_value());
  EXPECT_FALSE(th.at(3).has_value());
}

TEST(ThresholdTest, EveryScopeUnitClearsItsThreshold) {
  const auto c = clustered_corpus(3000, 6);
  const auto g = global_model(c, 40);
  for (const auto& u : c.units())
    EXPECT_GE(solution_probability(g.table, u), *g.thresholds.at(u.size()));
  const auto f = cluster_subsets(c, 10);
  const auto models = subset_models(c, f, 40, 2);
  for (std::size_t k = 0; k < f.subsets.size(); ++k)
    for (const auto& id : f.subsets[k].covered_units) {
      const auto& u = c.at(id);
      EXPECT_GE(solution_probability(models[k].table, u), *models[k].thresholds.at(u.size()));
    }
}

TEST(RangeTest, Examples) {
  const auto t = table_of({{"a", 9}, {"b", 1}});
  const auto r = probability_range(t, 2);
  EXPECT_NEAR(r.min_possible, std::log10(0.01), 1e-14);
  EXPECT_NEAR(r.max_possible, std::log10(0.81), 1e-14);
  EXPECT_FALSE(r.observed_min.has_value());

  const auto r1 = probability_range(t, 1, std::vector<double>{-0.5, -0.1, -0.3, -0.2});
  EXPECT_EQ(r1.min_possible, t.lowest_log_prob());
  EXPECT_EQ(r1.max_possible, t.highest_log_prob());
  EXPECT_EQ(*r1.observed_min, -0.5);
  EXPECT_EQ(*r1.observed_max, -0.1);
  EXPECT_DOUBLE_EQ(*r1.observed_median, -0.25);
}

TEST(RangeTest, ObservedWithinPossible) {
  const auto c = clustered_corpus(5000, 8);
  const auto f = cluster_subsets(c, 10);
  const auto models = subset_models(c, f, 40);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < f.subsets.size(); ++k) {
    if (f.subsets[k].members.size() != 10) continue;
    auto obs = observed_by_size(c, models[k].table, f.subsets[k].covered_units, 40);
    if (!obs.count(20)) continue;
    const auto r = probability_range(models[k].table, 20, obs[20]);
    EXPECT_GE(*r.observed_min, r.min_possible);
    EXPECT_LE(*r.observed_max, r.max_possible);
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}

TEST(ScopeTest, LabelsRoundTrip) {
  EXPECT_EQ(Scope::parse("global"), Scope::global());
  EXPECT_EQ(Scope::parse("is:42"), Scope::of_subset(42));
  EXPECT_THROW(Scope::parse("is:"), ScopeError);
  EXPECT_THROW(Scope::parse("subset"), ScopeError);
}

}  // namespace
}  // namespace isp
