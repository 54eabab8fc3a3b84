#include "da/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace da {
namespace {

using json = nlohmann::json;

SectionStats stats_for(RiskLevel label, std::vector<int> counts) {
  SectionStats s;
  s.label = label;
  std::vector<double> xs(counts.begin(), counts.end());
  s.mean = mean_of(xs);
  s.sd = population_sd(xs);
  s.counts = std::move(counts);
  return s;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string section_name(RiskLevel label) {
  switch (label) {
    case RiskLevel::high:
      return "High risk";
    case RiskLevel::medium:
      return "Medium risk";
    case RiskLevel::low:
      return "Low risk";
    case RiskLevel::none:
      return "No risk";
  }
  return "?";
}

}  // namespace

LogParseError::LogParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

RunCounts count_secondary_tasks(std::string_view jsonl) {
  RunCounts out;
  std::size_t line_no = 0;
  bool have_header = false;
  double last_t = -INFINITY;

  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw LogParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        if (rec.at("type").get<std::string>() != "header") {
          throw LogParseError(line_no, "first record must be the header");
        }
        out.config_hash = rec.at("config_hash").get<std::string>();
        for (const auto& s : rec.at("sections")) {
          out.sections.push_back({risk_level_from_string(s.at("label").get<std::string>()),
                                  s.at("start_s").get<double>(), s.at("duration_s").get<double>(),
                                  0});
        }
        have_header = true;
        continue;
      }
      const std::string type = rec.at("type").get<std::string>();
      const double t = rec.at("t").get<double>();
      if (t < last_t) throw LogParseError(line_no, "record time decreases");
      last_t = t;
      if (type == "task_start") {
        for (auto& s : out.sections) {
          if (t >= s.start_s && t < s.start_s + s.duration_s) {
            ++s.task_count;
            break;
          }
        }
      } else if (type == "decision") {
        if (rec.at("persuade").get<bool>()) ++out.persuasion_count;
      } else if (type == "message") {
        ++out.message_count;
      }
    } catch (const LogParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw LogParseError(line_no, std::string("malformed record: ") + e.what());
    }
  }
  // An empty log has no header and therefore no sections: all counts stay zero.
  return out;
}

RunCounts count_secondary_tasks(const SessionLog& log) {
  return count_secondary_tasks(log.to_jsonl());
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double population_sd(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (const double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

AggregateStats aggregate(std::span<const RunCounts> runs) {
  AggregateStats out;
  out.runs = runs.size();
  if (runs.empty()) return out;
  const auto& first = runs.front();
  for (const auto& r : runs) {
    if (r.config_hash != first.config_hash) {
      throw std::invalid_argument("cannot aggregate logs with different config hashes (" +
                                  first.config_hash + " vs " + r.config_hash + ")");
    }
    if (r.sections.size() != first.sections.size()) {
      throw std::invalid_argument("cannot aggregate logs with different section layouts");
    }
  }
  for (std::size_t i = 0; i < first.sections.size(); ++i) {
    std::vector<int> counts;
    for (const auto& r : runs) counts.push_back(r.sections[i].task_count);
    out.sections.push_back(stats_for(first.sections[i].label, std::move(counts)));
  }
  std::vector<double> persuasions;
  for (const auto& r : runs) persuasions.push_back(r.persuasion_count);
  out.persuasion_mean = mean_of(persuasions);
  out.persuasion_sd = population_sd(persuasions);
  return out;
}

ComparisonReport compare_policies(const Scenario& scenario, const SyntheticDriverConfig& driver,
                                  std::span<const std::uint64_t> seeds,
                                  const SessionOptions& options, MockMode llm_mode) {
  if (seeds.size() < kMinComparisonSeeds) {
    throw std::invalid_argument("compare_policies needs at least " +
                                std::to_string(kMinComparisonSeeds) + " seeds");
  }
  std::vector<RunCounts> base_runs, pers_runs;
  for (const auto seed : seeds) {
    MockLlmClient llm_a(llm_mode), llm_b(llm_mode);
    base_runs.push_back(count_secondary_tasks(
        run_session(scenario, PolicyKind::baseline, driver, llm_a, seed, options)));
    pers_runs.push_back(count_secondary_tasks(
        run_session(scenario, PolicyKind::persuasion, driver, llm_b, seed, options)));
  }
  const auto base = aggregate(base_runs);
  const auto pers = aggregate(pers_runs);

  ComparisonReport report;
  report.scenario = scenario.name;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.baseline_persuasions_mean = base.persuasion_mean;
  report.persuasion_persuasions_mean = pers.persuasion_mean;

  for (std::size_t i = 0; i < scenario.sections.size(); ++i) {
    ComparisonRow row;
    row.section = i;
    row.label = scenario.sections[i].label;
    row.baseline = base.sections[i];
    row.persuasion = pers.sections[i];
    std::vector<double> diffs;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      diffs.push_back(static_cast<double>(pers.sections[i].counts[k] - base.sections[i].counts[k]));
    }
    row.mean_difference = mean_of(diffs);
    const double sign = (row.mean_difference > 0.0) - (row.mean_difference < 0.0);
    std::size_t consistent = 0, strict = 0;
    for (const double d : diffs) {
      const double ds = (d > 0.0) - (d < 0.0);
      if (ds == sign || ds == 0.0) ++consistent;
      if (ds == sign && ds != 0.0) ++strict;
    }
    row.sign_consistency = static_cast<double>(consistent) / static_cast<double>(diffs.size());
    row.strict_sign_share = static_cast<double>(strict) / static_cast<double>(diffs.size());
    report.rows.push_back(std::move(row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const auto& a, const auto& b) { return a.label > b.label; });
  return report;
}

json ComparisonReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"section", r.section},
                         {"risk", da::to_string(r.label)},
                         {"baseline", {{"mean", r.baseline.mean}, {"sd", r.baseline.sd},
                                       {"counts", r.baseline.counts}}},
                         {"persuasion", {{"mean", r.persuasion.mean}, {"sd", r.persuasion.sd},
                                         {"counts", r.persuasion.counts}}},
                         {"mean_difference", r.mean_difference},
                         {"sign_consistency", r.sign_consistency},
                         {"strict_sign_share", r.strict_sign_share}});
  }
  return {{"scenario", scenario},
          {"seeds", seeds},
          {"rows", rows_json},
          {"persuasion_count_mean",
           {{"baseline", baseline_persuasions_mean}, {"persuasion", persuasion_persuasions_mean}}}};
}

std::string ComparisonReport::to_table() const {
  std::ostringstream os;
  os << "Secondary tasks per section (" << seeds.size() << " paired seeds)\n";
  os << "Risk level    Baseline mean   SD      Persuasion mean   SD      Diff    Consistent\n";
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%-13s %13s %6s %17s %6s %7s %10s\n",
                  section_name(r.label).c_str(), fixed(r.baseline.mean, 2).c_str(),
                  fixed(r.baseline.sd, 3).c_str(), fixed(r.persuasion.mean, 2).c_str(),
                  fixed(r.persuasion.sd, 3).c_str(), fixed(r.mean_difference, 2).c_str(),
                  (fixed(100.0 * r.sign_consistency, 0) + "%").c_str());
    os << line;
  }
  return os.str();
}

}  // namespace da
