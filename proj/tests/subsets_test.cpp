#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "isp/generate.hpp"
#include "isp/subsets.hpp"

namespace isp {
namespace {

Corpus make(std::vector<ProgramUnit> units) { return Corpus(std::move(units)); }

TEST(ClusterTest, UnionWithinCapGivesOneSubset) {
  const auto c = make({{"u1", {"a", "b"}}, {"u2", {"b", "c"}}, {"u3", {"a", "b", "c"}}});
  const auto f = cluster_subsets(c, 3);
  ASSERT_EQ(f.subsets.size(), 1u);
  EXPECT_EQ(f.subsets[0].members, (std::vector<InstructionId>{"a", "b", "c"}));
  // Largest unit first, then corpus order.
  EXPECT_EQ(f.subsets[0].covered_units, (std::vector<std::string>{"u3", "u1", "u2"}));
}

TEST(ClusterTest, DisjointUnitsOverCapSplit) {
  const auto c = make({{"u1", {"a", "b"}}, {"u2", {"c", "d"}}});
  const auto f = cluster_subsets(c, 2);
  ASSERT_EQ(f.subsets.size(), 2u);
  EXPECT_EQ(f.subsets[0].members, (std::vector<InstructionId>{"a", "b"}));
  EXPECT_EQ(f.subsets[1].members, (std::vector<InstructionId>{"c", "d"}));
}

TEST(ClusterTest, OversizeUnitsAreExcludedAndReported) {
  const auto c = make({{"big", {"a", "b", "c"}}, {"ok", {"a", "a"}}});
  const auto f = cluster_subsets(c, 2);
  EXPECT_EQ(f.excluded_units, std::vector<std::string>{"big"});
  ASSERT_EQ(f.subsets.size(), 1u);
  EXPECT_EQ(f.subsets[0].members, std::vector<InstructionId>{"a"});
}

TEST(ClusterTest, ClusteredCorpusInvariants) {
  ZipfCorpusOptions o;
  o.num_units = 1000;
  o.alphabet_size = 50;
  o.sizes = SizeDistribution::uniform(1, 20);
  o.pools = PoolLayout{12, 10, 3};
  o.seed = 5;
  const auto c = generate_zipf_corpus(o);
  const auto f = cluster_subsets(c, 10);
  EXPECT_LT(f.subsets.size(), 1000u);

  std::set<std::string> excluded(f.excluded_units.begin(), f.excluded_units.end());
  for (const auto& u : c.units()) {
    const auto uniq = u.unique_instructions();
    if (uniq.size() > 10) {
      EXPECT_TRUE(excluded.count(u.id));
      continue;
    }
    EXPECT_FALSE(covering_subsets(uniq, f).empty()) << u.id;
  }
  for (const auto& s : f.subsets) {
    EXPECT_FALSE(s.members.empty());
    EXPECT_LE(s.members.size(), 10u);
    std::set<InstructionId> rebuilt;
    for (const auto& id : s.covered_units)
      for (const auto& ins : c.at(id).instructions) rebuilt.insert(ins);
    EXPECT_EQ(std::vector<InstructionId>(rebuilt.begin(), rebuilt.end()), s.members);
  }
}

TEST(CoveringTest, Queries) {
  SubsetFamily f;
  f.cap = 2;
  f.subsets = {{0, {"a", "b"}, {"u1"}}, {1, {"c", "d"}, {"u2"}}};
  auto ids = [](const std::vector<InstructionSubset>& v) {
    std::vector<std::size_t> out;
    for (const auto& s : v) out.push_back(s.id);
    return out;
  };
  EXPECT_EQ(ids(covering_subsets({"a"}, f)), std::vector<std::size_t>{0});
  EXPECT_TRUE(covering_subsets({"a", "c"}, f).empty());
  EXPECT_EQ(ids(covering_subsets({}, f)), (std::vector<std::size_t>{0, 1}));
}

TEST(FamilyIoTest, RoundTrip) {
  const auto c = make({{"u1", {"a", "b"}}, {"u2", {"c", "d"}}, {"u3", {"d"}}});
  const auto f = cluster_subsets(c, 2);
  std::stringstream buf;
  write_family(buf, f);
  const auto back = read_family(buf, 2);
  EXPECT_EQ(back.subsets, f.subsets);
  EXPECT_EQ(back.cap, 2u);
  std::istringstream bad("{\"id\":0,\"members\":[]}\n");
  EXPECT_THROW(read_family(bad), CorpusError);
}

}  // namespace
}  // namespace isp
