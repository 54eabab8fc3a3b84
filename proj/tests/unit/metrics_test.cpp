#include "da/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace da;
using json = nlohmann::json;

namespace {

json header(const std::string& hash = "abc") {
  return {{"type", "header"},
          {"config_hash", hash},
          {"sections",
           {{{"label", "none"}, {"start_s", 0.0}, {"duration_s", 300.0}},
            {{"label", "low"}, {"start_s", 300.0}, {"duration_s", 300.0}},
            {{"label", "medium"}, {"start_s", 600.0}, {"duration_s", 300.0}}}}};
}

std::string line(const json& j) { return j.dump() + "\n"; }

std::string task(double t, const std::string& kind = "smartphone") {
  return line({{"type", "task_start"}, {"t", t}, {"kind", kind}});
}

RunCounts counts_of(const std::string& hash, std::vector<int> per_section) {
  RunCounts r;
  r.config_hash = hash;
  const RiskLevel labels[] = {RiskLevel::none, RiskLevel::low, RiskLevel::medium, RiskLevel::high};
  for (std::size_t i = 0; i < per_section.size(); ++i) {
    r.sections.push_back({labels[i], 300.0 * i, 300.0, per_section[i]});
  }
  return r;
}

std::vector<std::uint64_t> seeds(std::uint64_t n) {
  std::vector<std::uint64_t> out(n);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

}  // namespace

TEST(CountSecondaryTasks, EmptyLogIsAllZeros) {
  const auto c = count_secondary_tasks(std::string_view{});
  EXPECT_TRUE(c.sections.empty());
  EXPECT_EQ(c.persuasion_count, 0);
  EXPECT_EQ(c.message_count, 0);
}

TEST(CountSecondaryTasks, HeaderOnlyGivesZeroPerSection) {
  const auto c = count_secondary_tasks(line(header()));
  ASSERT_EQ(c.sections.size(), 3u);
  for (const auto& s : c.sections) EXPECT_EQ(s.task_count, 0);
  EXPECT_EQ(c.config_hash, "abc");
}

TEST(CountSecondaryTasks, CountsStartsInHalfOpenSections) {
  std::string log = line(header());
  log += task(10.0);
  log += task(300.0);  // first instant of section 2
  log += task(400.0, "drinking");
  log += line({{"type", "task_end"}, {"t", 420.0}, {"kind", "drinking"}, {"t_start", 400.0}});
  log += task(599.5, "reaching");
  log += line({{"type", "decision"}, {"t", 600.0}, {"persuade", true}});
  log += line({{"type", "message"}, {"t", 600.0}, {"kind", "persuasion"}});
  log += task(601.0);
  log += line({{"type", "decision"}, {"t", 605.0}, {"persuade", false}});
  const auto c = count_secondary_tasks(log);
  ASSERT_EQ(c.sections.size(), 3u);
  EXPECT_EQ(c.sections[0].task_count, 1);
  EXPECT_EQ(c.sections[1].task_count, 3);
  EXPECT_EQ(c.sections[2].task_count, 1);
  EXPECT_EQ(c.sections[1].label, RiskLevel::low);
  EXPECT_EQ(c.persuasion_count, 1);
  EXPECT_EQ(c.message_count, 1);
}

TEST(CountSecondaryTasks, BlankLinesSkipped) {
  const auto c = count_secondary_tasks(line(header()) + "\n" + task(1.0) + "\n");
  EXPECT_EQ(c.sections[0].task_count, 1);
}

TEST(CountSecondaryTasks, ErrorsCarryLineNumber) {
  const std::string good = line(header()) + task(5.0);
  try {
    count_secondary_tasks(good + "{not json\n");
    FAIL();
  } catch (const LogParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    count_secondary_tasks(good + task(4.0));
    FAIL();
  } catch (const LogParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    count_secondary_tasks(task(1.0));
    FAIL();
  } catch (const LogParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  EXPECT_THROW(count_secondary_tasks(good + line({{"t", 6.0}})), LogParseError);
}

TEST(CountSecondaryTasks, LogObjectMatchesJsonl) {
  MockLlmClient llm(MockMode::echo);
  const auto log = run_session(build_standard_scenario(), PolicyKind::persuasion, {}, llm, 17);
  const auto a = count_secondary_tasks(log);
  const auto b = count_secondary_tasks(log.to_jsonl());
  ASSERT_EQ(a.sections.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a.sections[i].task_count, b.sections[i].task_count);
  EXPECT_EQ(a.persuasion_count, b.persuasion_count);
  EXPECT_EQ(a.config_hash, b.config_hash);
  int starts = 0;
  for (const auto& r : log.records()) starts += r["type"] == "task_start";
  int total = 0;
  for (const auto& s : a.sections) total += s.task_count;
  EXPECT_EQ(total, starts);
}

TEST(Stats, MeanAndPopulationSd) {
  const std::vector<double> xs = {2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(mean_of(xs), 5.0);
  EXPECT_DOUBLE_EQ(population_sd(xs), 2.0);
  const std::vector<double> one = {3.0};
  EXPECT_DOUBLE_EQ(population_sd(one), 0.0);
}

TEST(Aggregate, PerSectionStats) {
  const std::vector<RunCounts> runs = {counts_of("h", {1, 2, 3}), counts_of("h", {3, 2, 1}),
                                       counts_of("h", {2, 2, 2})};
  const auto a = aggregate(runs);
  EXPECT_EQ(a.runs, 3u);
  ASSERT_EQ(a.sections.size(), 3u);
  EXPECT_DOUBLE_EQ(a.sections[0].mean, 2.0);
  EXPECT_NEAR(a.sections[0].sd, std::sqrt(2.0 / 3.0), 1e-12);
  EXPECT_DOUBLE_EQ(a.sections[1].sd, 0.0);
  EXPECT_EQ(a.sections[2].counts, (std::vector<int>{3, 1, 2}));
}

TEST(Aggregate, RefusesMixedConfigurations) {
  const std::vector<RunCounts> mixed = {counts_of("h", {1, 2, 3}), counts_of("g", {1, 2, 3})};
  EXPECT_THROW(aggregate(mixed), std::invalid_argument);
  const std::vector<RunCounts> layout = {counts_of("h", {1, 2, 3}), counts_of("h", {1, 2})};
  EXPECT_THROW(aggregate(layout), std::invalid_argument);
}

TEST(ComparePolicies, NeedsTenSeeds) {
  const auto s = seeds(9);
  EXPECT_THROW(compare_policies(build_standard_scenario(), {}, s), std::invalid_argument);
}

TEST(ComparePolicies, RowsDescendingRiskWithIndependentMeans) {
  const auto scenario = build_standard_scenario();
  const auto s = seeds(12);
  const auto report = compare_policies(scenario, {}, s);
  ASSERT_EQ(report.rows.size(), 4u);
  const RiskLevel order[] = {RiskLevel::high, RiskLevel::medium, RiskLevel::low, RiskLevel::none};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(report.rows[i].label, order[i]);

  // Recompute each mean from individual runs.
  for (const auto policy : {PolicyKind::baseline, PolicyKind::persuasion}) {
    std::array<double, 4> sum{};
    for (const auto seed : s) {
      MockLlmClient llm(MockMode::fail);
      const auto c = count_secondary_tasks(run_session(scenario, policy, {}, llm, seed));
      for (std::size_t i = 0; i < 4; ++i) sum[i] += c.sections[i].task_count;
    }
    for (const auto& row : report.rows) {
      const auto& stats = policy == PolicyKind::baseline ? row.baseline : row.persuasion;
      EXPECT_NEAR(stats.mean, sum[row.section] / s.size(), 1e-12);
    }
  }
  for (const auto& row : report.rows) {
    EXPECT_NEAR(row.mean_difference, row.persuasion.mean - row.baseline.mean, 1e-12);
  }
}

TEST(ComparePolicies, PersuasionNeverIncreasesPairedCounts) {
  const auto s = seeds(20);
  const auto report = compare_policies(build_standard_scenario(), {}, s);
  for (const auto& row : report.rows) {
    ASSERT_EQ(row.baseline.counts.size(), s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      EXPECT_LE(row.persuasion.counts[k], row.baseline.counts[k]) << to_string(row.label);
    }
    EXPECT_LE(row.mean_difference, 0.0);
    EXPECT_DOUBLE_EQ(row.sign_consistency, 1.0);
  }
  EXPECT_DOUBLE_EQ(report.baseline_persuasions_mean, 0.0);
  EXPECT_GT(report.persuasion_persuasions_mean, 0.0);
}

TEST(ComparePolicies, NullResponseModelGivesIdenticalCounts) {
  SyntheticDriverConfig inert;
  inert.compliance_p = 0.0;
  inert.suppression_factor = 1.0;
  const auto s = seeds(10);
  const auto report = compare_policies(build_standard_scenario(), inert, s);
  for (const auto& row : report.rows) {
    EXPECT_EQ(row.persuasion.counts, row.baseline.counts);
    EXPECT_DOUBLE_EQ(row.mean_difference, 0.0);
  }
}

TEST(ComparePolicies, BaselineOrderingMoreTasksAtLowerRisk) {
  const auto s = seeds(50);
  const auto report = compare_policies(build_standard_scenario(), {}, s);
  // rows: high, medium, low, none
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_GT(report.rows[i].baseline.mean, report.rows[i - 1].baseline.mean);
  }
}

TEST(ComparisonReport, JsonAndTable) {
  const auto s = seeds(10);
  const auto report = compare_policies(build_standard_scenario(), {}, s);
  const auto j = report.to_json();
  EXPECT_EQ(j["seeds"].size(), 10u);
  ASSERT_EQ(j["rows"].size(), 4u);
  EXPECT_EQ(j["rows"][0]["risk"], "high");
  const auto table = report.to_table();
  EXPECT_NE(table.find("Risk level"), std::string::npos);
  const auto hi = table.find("High risk");
  const auto no = table.find("No risk");
  ASSERT_NE(hi, std::string::npos);
  ASSERT_NE(no, std::string::npos);
  EXPECT_LT(hi, table.find("Medium risk"));
  EXPECT_LT(table.find("Low risk"), no);
}
