#pragma once

#include "da/scenario.hpp"
#include "da/session.hpp"
#include "da/synthetic_driver.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace da {

/// Malformed session log; line() is 1-based (the header is line 1).
class LogParseError : public std::runtime_error {
 public:
  LogParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct SectionCount {
  RiskLevel label = RiskLevel::none;
  double start_s = 0.0;
  double duration_s = 0.0;
  int task_count = 0;
};

/// Counts for one session log.
struct RunCounts {
  std::string config_hash;
  std::vector<SectionCount> sections;
  int persuasion_count = 0;   // decisions with persuade = true
  int message_count = 0;      // all delivered messages and alerts
};

RunCounts count_secondary_tasks(std::string_view jsonl);
RunCounts count_secondary_tasks(const SessionLog& log);

struct SectionStats {
  RiskLevel label = RiskLevel::none;
  std::vector<int> counts;  // one per run
  double mean = 0.0;
  double sd = 0.0;          // population SD
};

struct AggregateStats {
  std::vector<SectionStats> sections;
  double persuasion_mean = 0.0;
  double persuasion_sd = 0.0;
  std::size_t runs = 0;
};

double mean_of(std::span<const double> xs);
/// Population standard deviation (divides by n).
double population_sd(std::span<const double> xs);

/// Throws std::invalid_argument when runs disagree on config hash or section layout.
AggregateStats aggregate(std::span<const RunCounts> runs);

struct ComparisonRow {
  std::size_t section = 0;
  RiskLevel label = RiskLevel::none;
  SectionStats baseline;
  SectionStats persuasion;
  double mean_difference = 0.0;  // persuasion - baseline, averaged over paired seeds
  // Share of seeds whose paired difference does not oppose the sign of the mean
  // difference (ties count as consistent), and the stricter share with the same sign.
  double sign_consistency = 0.0;
  double strict_sign_share = 0.0;
};

struct ComparisonReport {
  std::string scenario;
  std::vector<std::uint64_t> seeds;
  std::vector<ComparisonRow> rows;  // descending risk: high, medium, low, none
  double baseline_persuasions_mean = 0.0;
  double persuasion_persuasions_mean = 0.0;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

inline constexpr std::size_t kMinComparisonSeeds = 10;

/// Paired comparison: both policies run on every seed with the same driver
/// randomness. Requires at least kMinComparisonSeeds seeds.
ComparisonReport compare_policies(const Scenario& scenario, const SyntheticDriverConfig& driver,
                                  std::span<const std::uint64_t> seeds,
                                  const SessionOptions& options = {},
                                  MockMode llm_mode = MockMode::fail);

}  // namespace da
