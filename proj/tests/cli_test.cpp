#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "isp/corpus.hpp"
#include "isp/subsets.hpp"

namespace isp {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("isp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(ISP_CLI) + " " + args + " >" + path("stdout") + " 2>" + path("stderr");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

std::string fixture(const std::string& name) { return std::string(ISP_FIXTURES) + "/" + name; }

TEST_F(CliTest, GenerateThenCluster) {
  ASSERT_EQ(run("gen --units 500 --alphabet 40 --pools 8 --pool-size 8 --shared 2 --seed 3 -o " +
                path("c.jsonl")), 0);
  ASSERT_EQ(run("cluster -i " + path("c.jsonl") + " --cap 8 -o " + path("f.jsonl")), 0);
  const auto c = load_corpus(path("c.jsonl"));
  EXPECT_EQ(c.size(), 500u);
  const auto f = load_family(path("f.jsonl"));
  std::size_t covered = 0;
  for (const auto& s : f.subsets) covered += s.covered_units.size();
  EXPECT_EQ(covered + f.excluded_units.size(), 500u);
  for (const auto& u : c.units())
    if (u.unique_instructions().size() <= 8) EXPECT_FALSE(covering_subsets(u.unique_instructions(), f).empty());
}

TEST_F(CliTest, MeasureFromCsvFixtures) {
  ASSERT_EQ(run("measure --tables " + fixture("toy_table.csv") + " --thresholds " +
                fixture("toy_thresholds.csv") + " --sizes 2..2 --cap 2 -o " + path("m.csv")), 0);
  EXPECT_EQ(slurp(path("m.csv")),
            "scope,size,mode,threshold_log10,admissible_count,baseline_count,reduction_oom\n"
            "global,2,sequences,-0.301029995664,1,4,0.602059991328\n");
}

TEST_F(CliTest, FullPipelineIsReproducible) {
  const std::string corpus = path("c.jsonl");
  ASSERT_EQ(run("gen --units 2000 --alphabet 60 --pools 10 --pool-size 10 --shared 3 --seed 9 -o " + corpus), 0);
  ASSERT_EQ(run("cluster -i " + corpus + " --cap 10 -o " + path("f.jsonl")), 0);
  for (const char* tag : {"a", "b"}) {
    const std::string t = tag;
    ASSERT_EQ(run("probs -i " + corpus + " --family " + path("f.jsonl") + " -o " + path("p" + t)), 0);
    ASSERT_EQ(run("thresholds -i " + corpus + " --family " + path("f.jsonl") + " -o " + path("t" + t)), 0);
    ASSERT_EQ(run("measure --tables " + path("p" + t) + " --thresholds " + path("t" + t) +
                  " --sizes 3..8 -o " + path("m" + t)), 0);
  }
  EXPECT_EQ(slurp(path("pa")), slurp(path("pb")));
  EXPECT_EQ(slurp(path("ta")), slurp(path("tb")));
  EXPECT_EQ(slurp(path("ma")), slurp(path("mb")));
  EXPECT_GT(slurp(path("ma")).size(), 100u);
}

TEST_F(CliTest, SynthFindsConstant) {
  const std::string corpus = path("c.jsonl");
  std::ofstream(corpus) << R"({"id":"a","instructions":["push1","push2","add"]})" "\n"
                        << R"({"id":"b","instructions":["push1","dup","add"]})" "\n";
  ASSERT_EQ(run("cluster -i " + corpus + " --cap 10 -o " + path("f.jsonl")), 0);
  ASSERT_EQ(run("synth -i " + corpus + " --family " + path("f.jsonl") + " --spec " +
                fixture("const3_spec.json") + " --max-size 3 -o " + path("r.json")), 0);
  const auto r = nlohmann::json::parse(slurp(path("r.json")));
  ASSERT_FALSE(r["solution"].is_null());
  EXPECT_FALSE(r["schedule_exhausted"].get<bool>());
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run("bogus"), 2);
  EXPECT_EQ(run("gen --units -3"), 2);
  EXPECT_EQ(run("measure --sizes 2..2"), 2);
  EXPECT_EQ(run("cluster -i " + path("missing.jsonl") + " -o " + path("f.jsonl")), 1);
  EXPECT_NE(slurp(path("stderr")).find("error"), std::string::npos);
  std::ofstream(path("bad.jsonl")) << "{oops\n";
  EXPECT_EQ(run("probs -i " + path("bad.jsonl") + " -o " + path("p.csv")), 1);
  EXPECT_NE(slurp(path("stderr")).find("line 1"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("p.csv")));
}

}  // namespace
}  // namespace isp
