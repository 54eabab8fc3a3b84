#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace da {

// Ordinal road-risk factors. Each enum is ordered from least to most risky,
// so the underlying value doubles as the factor's rank.
enum class RoadCondition : std::uint8_t { normal, wet, construction, congested_surface };
enum class Lighting : std::uint8_t { daylight, gloomy, dusk, dark };
enum class Weather : std::uint8_t { clear, cloudy, rain };

enum class RiskLevel : std::uint8_t { none, low, medium, high };

inline constexpr std::array<RiskLevel, 4> kAllRiskLevels = {RiskLevel::none, RiskLevel::low,
                                                            RiskLevel::medium, RiskLevel::high};

inline constexpr int kMaxOrdinalLevel = 3;

/// Snapshot of the five road-risk parameters at one instant.
struct RiskFactorState {
  int traffic_flow = 0;         // 0 = light .. 3 = congested
  int pedestrian_activity = 0;  // 0 .. 3
  RoadCondition road_condition = RoadCondition::normal;
  Lighting lighting = Lighting::daylight;
  Weather weather = Weather::clear;

  bool operator==(const RiskFactorState&) const = default;
};

bool is_valid(const RiskFactorState& state);

struct RiskSection {
  RiskLevel label = RiskLevel::none;
  double duration_s = 0.0;
  RiskFactorState state;
};

struct Scenario {
  std::string name;
  std::vector<RiskSection> sections;

  double total_duration() const;
  double section_start(std::size_t index) const;
  /// Index of the section whose half-open interval [start, start + duration) contains t.
  std::size_t section_index_at(double t) const;
};

/// Thrown when a scenario document is structurally valid JSON but violates the schema.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Additive ordinal scoring. Ranks come from the enum order; cut points are the
// highest score still mapped to each level.
struct RiskScoring {
  std::array<int, 4> road_rank = {0, 1, 2, 2};
  std::array<int, 4> lighting_rank = {0, 1, 2, 3};
  std::array<int, 3> weather_rank = {0, 1, 2};
  int none_max = 1;
  int low_max = 6;
  int medium_max = 8;
};

/// The four five-minute sections driven in the user study: no, low, medium and high risk.
Scenario build_standard_scenario();

/// Throws std::out_of_range when t is outside [0, total duration).
const RiskFactorState& state_at(const Scenario& scenario, double t);

int risk_score(const RiskFactorState& state, const RiskScoring& scoring = {});
RiskLevel classify_risk(const RiskFactorState& state, const RiskScoring& scoring = {});

/// `[t=12.0] traffic=0 pedestrians=0 road=normal lighting=daylight weather=clear`
std::string serialize_timestamped(const RiskFactorState& state, double t);

struct TimestampedState {
  RiskFactorState state;
  double t = 0.0;
};
/// Inverse of serialize_timestamped. Throws std::invalid_argument on malformed input.
TimestampedState parse_timestamped(std::string_view line);

// Enum <-> wire names. The from_string variants throw std::invalid_argument.
std::string_view to_string(RiskLevel level);
std::string_view to_string(RoadCondition road);
std::string_view to_string(Lighting lighting);
std::string_view to_string(Weather weather);
RiskLevel risk_level_from_string(std::string_view s);
RoadCondition road_condition_from_string(std::string_view s);
Lighting lighting_from_string(std::string_view s);
Weather weather_from_string(std::string_view s);

nlohmann::json to_json(const RiskFactorState& state);
nlohmann::json to_json(const Scenario& scenario);

/// Validates and converts a scenario document; errors name the offending field path.
Scenario scenario_from_json(const nlohmann::json& doc);
Scenario load_scenario_file(const std::string& path);

}  // namespace da
