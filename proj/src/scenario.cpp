#include "da/scenario.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace da {
namespace {

constexpr std::array<std::string_view, 4> kRiskNames = {"none", "low", "medium", "high"};
constexpr std::array<std::string_view, 4> kRoadNames = {"normal", "wet", "construction",
                                                        "congested_surface"};
constexpr std::array<std::string_view, 4> kLightingNames = {"daylight", "gloomy", "dusk", "dark"};
constexpr std::array<std::string_view, 3> kWeatherNames = {"clear", "cloudy", "rain"};

template <typename Enum, std::size_t N>
Enum enum_from(std::string_view s, const std::array<std::string_view, N>& names,
               std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  throw std::invalid_argument("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

bool ordinal_ok(int v) { return v >= 0 && v <= kMaxOrdinalLevel; }

std::string format_tenths(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

// Splits "key=value" and checks the key.
std::string_view expect_field(std::string_view token, std::string_view key) {
  const auto eq = token.find('=');
  if (eq == std::string_view::npos || token.substr(0, eq) != key) {
    throw std::invalid_argument("expected field '" + std::string(key) + "' in '" +
                                std::string(token) + "'");
  }
  return token.substr(eq + 1);
}

int parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ScenarioError(path + "." + key + ": missing");
  }
  return obj.at(key);
}

int require_ordinal(const nlohmann::json& obj, const char* key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_number_integer() || !ordinal_ok(v.get<int>())) {
    throw ScenarioError(path + "." + key + ": expected integer level 0-3, got " + v.dump());
  }
  return v.get<int>();
}

template <typename Fn>
auto require_enum(const nlohmann::json& obj, const char* key, const std::string& path, Fn parse) {
  const auto& v = require(obj, key, path);
  if (!v.is_string()) throw ScenarioError(path + "." + key + ": expected string, got " + v.dump());
  try {
    return parse(v.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(path + "." + key + ": " + e.what());
  }
}

}  // namespace

bool is_valid(const RiskFactorState& s) {
  return ordinal_ok(s.traffic_flow) && ordinal_ok(s.pedestrian_activity) &&
         static_cast<std::size_t>(s.road_condition) < kRoadNames.size() &&
         static_cast<std::size_t>(s.lighting) < kLightingNames.size() &&
         static_cast<std::size_t>(s.weather) < kWeatherNames.size();
}

double Scenario::total_duration() const {
  double total = 0.0;
  for (const auto& s : sections) total += s.duration_s;
  return total;
}

double Scenario::section_start(std::size_t index) const {
  double start = 0.0;
  for (std::size_t i = 0; i < index && i < sections.size(); ++i) start += sections[i].duration_s;
  return start;
}

std::size_t Scenario::section_index_at(double t) const {
  if (!(t >= 0.0)) throw std::out_of_range("t=" + std::to_string(t) + " before scenario start");
  double start = 0.0;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const double end = start + sections[i].duration_s;
    if (t < end) return i;
    start = end;
  }
  throw std::out_of_range("t=" + std::to_string(t) + " at or past scenario end " +
                          std::to_string(start));
}

Scenario build_standard_scenario() {
  constexpr double kSectionSeconds = 300.0;
  Scenario s;
  s.name = "standard";
  // Clear weather, good visibility, light traffic, few pedestrians.
  s.sections.push_back({RiskLevel::none, kSectionSeconds,
                        {0, 0, RoadCondition::normal, Lighting::daylight, Weather::clear}});
  // Moderate rain, slippery surface, gloomy light.
  s.sections.push_back({RiskLevel::low, kSectionSeconds,
                        {1, 1, RoadCondition::wet, Lighting::gloomy, Weather::rain}});
  // Construction with a single usable lane, cloudy, limited visibility.
  s.sections.push_back({RiskLevel::medium, kSectionSeconds,
                        {2, 1, RoadCondition::construction, Lighting::dusk, Weather::cloudy}});
  // Evening, poor visibility, heavy traffic and congestion.
  s.sections.push_back({RiskLevel::high, kSectionSeconds,
                        {3, 2, RoadCondition::congested_surface, Lighting::dark, Weather::clear}});
  return s;
}

const RiskFactorState& state_at(const Scenario& scenario, double t) {
  return scenario.sections[scenario.section_index_at(t)].state;
}

int risk_score(const RiskFactorState& s, const RiskScoring& scoring) {
  return s.traffic_flow + s.pedestrian_activity +
         scoring.road_rank[static_cast<std::size_t>(s.road_condition)] +
         scoring.lighting_rank[static_cast<std::size_t>(s.lighting)] +
         scoring.weather_rank[static_cast<std::size_t>(s.weather)];
}

RiskLevel classify_risk(const RiskFactorState& s, const RiskScoring& scoring) {
  const int score = risk_score(s, scoring);
  if (score <= scoring.none_max) return RiskLevel::none;
  if (score <= scoring.low_max) return RiskLevel::low;
  if (score <= scoring.medium_max) return RiskLevel::medium;
  return RiskLevel::high;
}

std::string serialize_timestamped(const RiskFactorState& s, double t) {
  std::string out = "[t=" + format_tenths(t) + "]";
  out += " traffic=" + std::to_string(s.traffic_flow);
  out += " pedestrians=" + std::to_string(s.pedestrian_activity);
  out += " road=" + std::string(to_string(s.road_condition));
  out += " lighting=" + std::string(to_string(s.lighting));
  out += " weather=" + std::string(to_string(s.weather));
  return out;
}

TimestampedState parse_timestamped(std::string_view line) {
  if (line.size() < 4 || line.substr(0, 3) != "[t=") {
    throw std::invalid_argument("timestamped line must start with '[t='");
  }
  const auto close = line.find(']');
  if (close == std::string_view::npos) throw std::invalid_argument("missing ']' in timestamp");

  TimestampedState out;
  out.t = parse_double(line.substr(3, close - 3));

  std::vector<std::string_view> tokens;
  std::string_view rest = line.substr(close + 1);
  while (!rest.empty()) {
    const auto start = rest.find_first_not_of(' ');
    if (start == std::string_view::npos) break;
    rest.remove_prefix(start);
    const auto end = rest.find(' ');
    tokens.push_back(rest.substr(0, end));
    rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
  }
  if (tokens.size() != 5) {
    throw std::invalid_argument("expected 5 fields, got " + std::to_string(tokens.size()));
  }
  out.state.traffic_flow = parse_int(expect_field(tokens[0], "traffic"));
  out.state.pedestrian_activity = parse_int(expect_field(tokens[1], "pedestrians"));
  out.state.road_condition = road_condition_from_string(expect_field(tokens[2], "road"));
  out.state.lighting = lighting_from_string(expect_field(tokens[3], "lighting"));
  out.state.weather = weather_from_string(expect_field(tokens[4], "weather"));
  if (!is_valid(out.state)) throw std::invalid_argument("factor level out of range");
  return out;
}

std::string_view to_string(RiskLevel v) { return kRiskNames.at(static_cast<std::size_t>(v)); }
std::string_view to_string(RoadCondition v) { return kRoadNames.at(static_cast<std::size_t>(v)); }
std::string_view to_string(Lighting v) { return kLightingNames.at(static_cast<std::size_t>(v)); }
std::string_view to_string(Weather v) { return kWeatherNames.at(static_cast<std::size_t>(v)); }

RiskLevel risk_level_from_string(std::string_view s) {
  return enum_from<RiskLevel>(s, kRiskNames, "risk level");
}
RoadCondition road_condition_from_string(std::string_view s) {
  return enum_from<RoadCondition>(s, kRoadNames, "road condition");
}
Lighting lighting_from_string(std::string_view s) {
  return enum_from<Lighting>(s, kLightingNames, "lighting");
}
Weather weather_from_string(std::string_view s) {
  return enum_from<Weather>(s, kWeatherNames, "weather");
}

nlohmann::json to_json(const RiskFactorState& s) {
  return {{"traffic_flow", s.traffic_flow},
          {"pedestrian_activity", s.pedestrian_activity},
          {"road_condition", to_string(s.road_condition)},
          {"lighting", to_string(s.lighting)},
          {"weather", to_string(s.weather)}};
}

nlohmann::json to_json(const Scenario& scenario) {
  auto sections = nlohmann::json::array();
  for (const auto& sec : scenario.sections) {
    sections.push_back({{"label", to_string(sec.label)},
                        {"duration_s", sec.duration_s},
                        {"state", to_json(sec.state)}});
  }
  return {{"name", scenario.name}, {"sections", std::move(sections)}};
}

Scenario scenario_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ScenarioError("scenario: expected a JSON object");
  Scenario out;
  const auto& name = require(doc, "name", "scenario");
  if (!name.is_string()) throw ScenarioError("scenario.name: expected string");
  out.name = name.get<std::string>();

  const auto& sections = require(doc, "sections", "scenario");
  if (!sections.is_array() || sections.empty()) {
    throw ScenarioError("scenario.sections: expected a non-empty array");
  }
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const std::string path = "scenario.sections[" + std::to_string(i) + "]";
    const auto& sec = sections[i];
    RiskSection section;
    section.label = require_enum(sec, "label", path, risk_level_from_string);
    const auto& dur = require(sec, "duration_s", path);
    if (!dur.is_number() || !(dur.get<double>() > 0.0) || !std::isfinite(dur.get<double>())) {
      throw ScenarioError(path + ".duration_s: expected a positive number, got " + dur.dump());
    }
    section.duration_s = dur.get<double>();

    const auto& st = require(sec, "state", path);
    const std::string spath = path + ".state";
    section.state.traffic_flow = require_ordinal(st, "traffic_flow", spath);
    section.state.pedestrian_activity = require_ordinal(st, "pedestrian_activity", spath);
    section.state.road_condition = require_enum(st, "road_condition", spath,
                                                road_condition_from_string);
    section.state.lighting = require_enum(st, "lighting", spath, lighting_from_string);
    section.state.weather = require_enum(st, "weather", spath, weather_from_string);
    out.sections.push_back(section);
  }
  return out;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError("scenario file '" + path + "': invalid JSON: " + e.what());
  }
  return scenario_from_json(doc);
}

}  // namespace da
