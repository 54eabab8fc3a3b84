#include "da/hmi.hpp"

namespace da {

using json = nlohmann::json;

std::string_view to_string(Avatar a) {
  switch (a) {
    case Avatar::lively:
      return "lively";
    case Avatar::tense:
      return "tense";
    case Avatar::encourage:
      return "encourage";
  }
  return "lively";
}

std::string_view to_string(Border b) {
  switch (b) {
    case Border::default_style:
      return "default";
    case Border::yellow_flicker:
      return "yellow_flicker";
    case Border::red:
      return "red";
  }
  return "default";
}

Border border_for(RiskLevel risk) {
  switch (risk) {
    case RiskLevel::high:
      return Border::red;
    case RiskLevel::medium:
    case RiskLevel::low:
      return Border::yellow_flicker;
    case RiskLevel::none:
      break;
  }
  return Border::default_style;
}

Avatar avatar_for(RiskLevel risk, double score, std::optional<double> last_encouragement_t,
                  double t, const TriggerPolicy& policy) {
  if (score > 0.0 && score >= policy.threshold(risk)) return Avatar::tense;
  if (last_encouragement_t && t >= *last_encouragement_t &&
      t - *last_encouragement_t < kEncourageHoldSeconds) {
    return Avatar::encourage;
  }
  return Avatar::lively;
}

json factors_json(const RiskFactorState& s) {
  return {{"traffic_flow", s.traffic_flow},
          {"pedestrian_activity", s.pedestrian_activity},
          {"road_condition", to_string(s.road_condition)},
          {"lighting", to_string(s.lighting)},
          {"weather", to_string(s.weather)}};
}

json StateFrame::to_json() const {
  json task_names = json::array();
  for (const auto k : tasks) task_names.push_back(to_string(k));
  return {{"type", "state"},
          {"t", t},
          {"risk", to_string(risk)},
          {"factors", factors_json(factors)},
          {"avatar", to_string(avatar)},
          {"border", to_string(border)},
          {"tasks", std::move(task_names)},
          {"score", score}};
}

StateFrame make_state_frame(double t, const RiskFactorState& state, double score,
                            std::vector<DistractionKind> tasks,
                            std::optional<double> last_encouragement_t,
                            const TriggerPolicy& policy) {
  StateFrame f;
  f.t = t;
  f.risk = classify_risk(state);
  f.factors = state;
  f.avatar = avatar_for(f.risk, score, last_encouragement_t, t, policy);
  f.border = border_for(f.risk);
  f.tasks = std::move(tasks);
  f.score = score;
  return f;
}

json message_frame(const PersuasionMessage& m) {
  json j = to_json(m);
  j["type"] = "message";
  return j;
}

json alert_frame(const BaselineAlert& alert) {
  json j = to_json(alert);
  j["type"] = "message";
  return j;
}

json error_frame(std::string_view code, std::string_view detail) {
  return {{"type", "error"}, {"code", code}, {"detail", detail}};
}

}  // namespace da
