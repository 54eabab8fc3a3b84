#pragma once

#include "da/persuasion.hpp"
#include "da/scenario.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace da {

enum class RiskFactor { traffic_flow, pedestrian_activity, road_condition, lighting, weather };
enum class CompareOp { eq, ge };

std::string_view to_string(RiskFactor f);
RiskFactor risk_factor_from_string(std::string_view s);

/// Predicate over one factor. `value` is the factor's ordinal (enum rank for
/// categorical factors), so `weather eq 2` means rain.
struct AlertCondition {
  RiskFactor factor = RiskFactor::weather;
  CompareOp op = CompareOp::eq;
  int value = 0;

  bool holds(const RiskFactorState& state) const;
};

struct AlertRule {
  AlertCondition condition;
  std::string message;
};

/// The four fixed verbal alerts of the conventional system.
std::vector<AlertRule> default_alert_rules();

// Rule file: [{"factor": "weather", "op": "eq", "value": "rain", "message": "..."}]
// Categorical values are given by name, ordinal ones as integers.
std::vector<AlertRule> alert_rules_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const std::vector<AlertRule>& rules);

struct BaselineAlert {
  double t = 0.0;
  std::string message;
};

/// Same record shape as persuasion messages, without a strategy:
/// {"t", "text", "channel": "audio", "source": "baseline"}.
nlohmann::json to_json(const BaselineAlert& alert);

/// Tracks rising edges of each rule across evaluations. Fires once per onset.
class AlertMonitor {
 public:
  explicit AlertMonitor(std::vector<AlertRule> rules = default_alert_rules());

  /// Evaluates every rule against `state`; returns the alerts whose
  /// predicate went false -> true since the previous call. The first call
  /// treats every predicate as previously false.
  std::vector<BaselineAlert> evaluate(const RiskFactorState& state, double t);

  const std::vector<AlertRule>& rules() const { return rules_; }

 private:
  std::vector<AlertRule> rules_;
  std::vector<bool> previous_;
};

/// Alerts for a whole scenario evaluated every eval_period_s from t = 0.
/// Depends only on the scenario; there is no driver input.
std::vector<BaselineAlert> baseline_alerts(const Scenario& scenario, double eval_period_s,
                                           const std::vector<AlertRule>& rules = default_alert_rules());

/// Evaluation instants k * period for k = 0, 1, ... while < total duration.
std::vector<double> evaluation_ticks(double total_duration, double period);

}  // namespace da
