#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "isp/report.hpp"

namespace isp {
namespace {

TEST(FormatTest, TwelveSignificantDigits) {
  EXPECT_EQ(format_real(std::log10(0.5)), "-0.301029995664");
  EXPECT_EQ(format_real(0.0), "0");
  EXPECT_EQ(format_real(40.0), "40");
  EXPECT_EQ(format_real(1.0 / 3), "0.333333333333");
  EXPECT_EQ(format_real(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_real(-std::numeric_limits<double>::infinity()), "-inf");
}

const Corpus& sample() {
  static const Corpus c({{"u1", {"a", "a", "b"}}, {"u2", {"b", "c"}}, {"u3", {"c", "c", "a"}}});
  return c;
}

TEST(CsvTest, TablesRoundTripBitForBit) {
  const auto g = global_instruction_probs(sample());
  const auto s = subset_instruction_probs(sample(), InstructionSubset{3, {"a", "b"}, {"u1"}});
  std::stringstream buf;
  write_tables_csv(buf, {g, s});
  const std::string text = buf.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "scope,instruction,count,log10_probability");
  EXPECT_NE(text.find("is:3,a,2,-0.176091259056\n"), std::string::npos);
  const auto back = read_tables_csv(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].scope(), Scope::global());
  EXPECT_EQ(back[1].scope(), Scope::of_subset(3));
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(back[0].entries()[i].instruction, g.entries()[i].instruction);
    EXPECT_EQ(back[0].entries()[i].log10_prob, g.entries()[i].log10_prob);
  }
  std::stringstream again;
  write_tables_csv(again, back);
  EXPECT_EQ(again.str(), text);
}

TEST(CsvTest, ThresholdsRoundTrip) {
  const auto g = global_model(sample(), 40);
  std::stringstream buf;
  write_thresholds_csv(buf, {g.thresholds});
  const auto back = read_thresholds_csv(buf);
  ASSERT_EQ(back.size(), 1u);
  ASSERT_EQ(back[0].thresholds.size(), g.thresholds.thresholds.size());
  for (const auto& [size, t] : g.thresholds.thresholds) {
    EXPECT_NEAR(*back[0].at(size), t.log10, 1e-11 * std::abs(t.log10));
    EXPECT_EQ(back[0].thresholds.at(size).support, t.support);
  }
}

TEST(CsvTest, MalformedInput) {
  std::istringstream wrong_header("scope,size\n");
  EXPECT_THROW(read_thresholds_csv(wrong_header), std::runtime_error);
  std::istringstream short_row("scope,size,count,log10_probability\nglobal,2\n");
  EXPECT_THROW(read_thresholds_csv(short_row), std::runtime_error);
  std::istringstream bad_scope("scope,instruction,count,log10_probability\nsome,a,1,0\n");
  EXPECT_THROW(read_tables_csv(bad_scope), std::runtime_error);
  std::istringstream empty("");
  EXPECT_THROW(read_tables_csv(empty), std::runtime_error);
}

TEST(CsvTest, MeasurementsAndValidationRows) {
  SpaceMeasurement m;
  m.scope = Scope::of_subset(1);
  m.size = 2;
  m.threshold = std::log10(0.5);
  m.admissible_count = 1;
  m.baseline_count = 4;
  m.reduction_oom = std::log10(4.0);
  std::ostringstream out;
  write_measurements_csv(out, {m});
  EXPECT_EQ(out.str(),
            "scope,size,mode,threshold_log10,admissible_count,baseline_count,reduction_oom\n"
            "is:1,2,sequences,-0.301029995664,1,4,0.602059991328\n");

  ValidationResult r;
  r.training_fraction = 0.05;
  r.test_units_by_size = {{1, 3}, {2, 4}};
  r.per_size_coverage[2] = SizeCoverage{75.0, 4, 3};
  std::ostringstream v;
  write_validation_csv(v, {r});
  EXPECT_EQ(v.str(), "fraction,size,coverage_pct,n_test_pus,repeat\n0.05,1,,3,0\n0.05,2,75,4,0\n");
}

TEST(AtomicWriteTest, ReplacesTargetAndLeavesNoTemp) {
  const auto dir = std::filesystem::temp_directory_path() / "isp_report_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "out.csv").string();
  write_file_atomic(path, "first\n");
  write_file_atomic(path, "second\n");
  std::ifstream in(path);
  std::stringstream got;
  got << in.rdbuf();
  EXPECT_EQ(got.str(), "second\n");
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace isp
