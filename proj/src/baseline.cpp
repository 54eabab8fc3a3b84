#include "da/baseline.hpp"

#include <stdexcept>

namespace da {
namespace {

using json = nlohmann::json;

int factor_value(const RiskFactorState& s, RiskFactor f) {
  switch (f) {
    case RiskFactor::traffic_flow:
      return s.traffic_flow;
    case RiskFactor::pedestrian_activity:
      return s.pedestrian_activity;
    case RiskFactor::road_condition:
      return static_cast<int>(s.road_condition);
    case RiskFactor::lighting:
      return static_cast<int>(s.lighting);
    case RiskFactor::weather:
      return static_cast<int>(s.weather);
  }
  throw std::invalid_argument("bad risk factor");
}

int parse_factor_value(RiskFactor f, const json& v) {
  switch (f) {
    case RiskFactor::traffic_flow:
    case RiskFactor::pedestrian_activity:
      if (!v.is_number_integer()) throw std::invalid_argument("expected integer level");
      return v.get<int>();
    case RiskFactor::road_condition:
      return static_cast<int>(road_condition_from_string(v.get<std::string>()));
    case RiskFactor::lighting:
      return static_cast<int>(lighting_from_string(v.get<std::string>()));
    case RiskFactor::weather:
      return static_cast<int>(weather_from_string(v.get<std::string>()));
  }
  throw std::invalid_argument("bad risk factor");
}

json factor_value_json(RiskFactor f, int v) {
  switch (f) {
    case RiskFactor::road_condition:
      return to_string(static_cast<RoadCondition>(v));
    case RiskFactor::lighting:
      return to_string(static_cast<Lighting>(v));
    case RiskFactor::weather:
      return to_string(static_cast<Weather>(v));
    default:
      return v;
  }
}

}  // namespace

std::string_view to_string(RiskFactor f) {
  switch (f) {
    case RiskFactor::traffic_flow:
      return "traffic_flow";
    case RiskFactor::pedestrian_activity:
      return "pedestrian_activity";
    case RiskFactor::road_condition:
      return "road_condition";
    case RiskFactor::lighting:
      return "lighting";
    case RiskFactor::weather:
      return "weather";
  }
  return "?";
}

RiskFactor risk_factor_from_string(std::string_view s) {
  for (auto f : {RiskFactor::traffic_flow, RiskFactor::pedestrian_activity,
                 RiskFactor::road_condition, RiskFactor::lighting, RiskFactor::weather}) {
    if (to_string(f) == s) return f;
  }
  throw std::invalid_argument("unknown risk factor '" + std::string(s) + "'");
}

bool AlertCondition::holds(const RiskFactorState& state) const {
  const int v = factor_value(state, factor);
  return op == CompareOp::eq ? v == value : v >= value;
}

std::vector<AlertRule> default_alert_rules() {
  return {
      {{RiskFactor::weather, CompareOp::eq, static_cast<int>(Weather::rain)}, "Raining outside"},
      {{RiskFactor::pedestrian_activity, CompareOp::ge, 2}, "Increased pedestrian activity ahead"},
      {{RiskFactor::road_condition, CompareOp::eq, static_cast<int>(RoadCondition::construction)},
       "Construction zone approaching"},
      {{RiskFactor::traffic_flow, CompareOp::ge, 3}, "Entering urban area"},
  };
}

std::vector<AlertRule> alert_rules_from_json(const json& doc) {
  if (!doc.is_array()) throw std::invalid_argument("alert rules: expected array");
  std::vector<AlertRule> rules;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string path = "rules[" + std::to_string(i) + "]";
    const auto& r = doc[i];
    try {
      AlertRule rule;
      rule.condition.factor = risk_factor_from_string(r.at("factor").get<std::string>());
      const auto op = r.at("op").get<std::string>();
      if (op == "eq") {
        rule.condition.op = CompareOp::eq;
      } else if (op == "ge") {
        rule.condition.op = CompareOp::ge;
      } else {
        throw std::invalid_argument("op must be 'eq' or 'ge'");
      }
      rule.condition.value = parse_factor_value(rule.condition.factor, r.at("value"));
      rule.message = r.at("message").get<std::string>();
      if (rule.message.empty()) throw std::invalid_argument("message is empty");
      rules.push_back(std::move(rule));
    } catch (const std::exception& e) {
      throw std::invalid_argument(path + ": " + e.what());
    }
  }
  return rules;
}

json to_json(const std::vector<AlertRule>& rules) {
  json out = json::array();
  for (const auto& r : rules) {
    out.push_back({{"factor", to_string(r.condition.factor)},
                   {"op", r.condition.op == CompareOp::eq ? "eq" : "ge"},
                   {"value", factor_value_json(r.condition.factor, r.condition.value)},
                   {"message", r.message}});
  }
  return out;
}

json to_json(const BaselineAlert& a) {
  return {{"t", a.t},
          {"text", a.message},
          {"channel", to_string(Channel::audio)},
          {"source", to_string(MessageSource::baseline)}};
}

AlertMonitor::AlertMonitor(std::vector<AlertRule> rules)
    : rules_(std::move(rules)), previous_(rules_.size(), false) {}

std::vector<BaselineAlert> AlertMonitor::evaluate(const RiskFactorState& state, double t) {
  std::vector<BaselineAlert> fired;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const bool now = rules_[i].condition.holds(state);
    if (now && !previous_[i]) fired.push_back({t, rules_[i].message});
    previous_[i] = now;
  }
  return fired;
}

std::vector<double> evaluation_ticks(double total_duration, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("evaluation period must be > 0");
  std::vector<double> ticks;
  // k * period, never accumulated.
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * period;
    if (!(t < total_duration)) break;
    ticks.push_back(t);
  }
  return ticks;
}

std::vector<BaselineAlert> baseline_alerts(const Scenario& scenario, double eval_period_s,
                                           const std::vector<AlertRule>& rules) {
  AlertMonitor monitor(rules);
  std::vector<BaselineAlert> out;
  for (const double t : evaluation_ticks(scenario.total_duration(), eval_period_s)) {
    auto fired = monitor.evaluate(state_at(scenario, t), t);
    out.insert(out.end(), fired.begin(), fired.end());
  }
  return out;
}

}  // namespace da
