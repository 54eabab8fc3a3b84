#include "da/trigger.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace da {
namespace {

using json = nlohmann::json;

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

double read_number(const json& obj, const char* key, double fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw std::invalid_argument(path + "." + key + ": expected number");
  return v.get<double>();
}

}  // namespace

double TriggerPolicy::threshold(RiskLevel risk) const {
  switch (risk) {
    case RiskLevel::none:
      return threshold_none;
    case RiskLevel::low:
      return threshold_low;
    case RiskLevel::medium:
      return threshold_medium;
    case RiskLevel::high:
      return threshold_high;
  }
  throw std::invalid_argument("bad risk level");
}

void TriggerPolicy::validate() const {
  if (!(threshold_high <= threshold_medium && threshold_medium <= threshold_low &&
        threshold_low <= threshold_none)) {
    throw std::invalid_argument("thresholds must satisfy high <= medium <= low <= none");
  }
  if (threshold_high < 0.0) throw std::invalid_argument("thresholds must be non-negative");
  if (!(cooldown_s >= 0.0)) throw std::invalid_argument("cooldown_s must be >= 0");
  if (!(eval_period_s > 0.0)) throw std::invalid_argument("eval_period_s must be > 0");
}

TriggerPolicy trigger_policy_from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("policy: expected object");
  TriggerPolicy p;
  if (doc.contains("thresholds")) {
    const auto& th = doc.at("thresholds");
    if (!th.is_object()) throw std::invalid_argument("policy.thresholds: expected object");
    for (const auto& [key, _] : th.items()) {
      if (key != "none" && key != "low" && key != "medium" && key != "high") {
        throw std::invalid_argument("policy.thresholds." + key + ": unknown risk level");
      }
    }
    p.threshold_none = read_number(th, "none", p.threshold_none, "policy.thresholds");
    p.threshold_low = read_number(th, "low", p.threshold_low, "policy.thresholds");
    p.threshold_medium = read_number(th, "medium", p.threshold_medium, "policy.thresholds");
    p.threshold_high = read_number(th, "high", p.threshold_high, "policy.thresholds");
  }
  p.cooldown_s = read_number(doc, "cooldown_s", p.cooldown_s, "policy");
  p.eval_period_s = read_number(doc, "eval_period_s", p.eval_period_s, "policy");
  p.validate();
  return p;
}

json to_json(const TriggerPolicy& p) {
  return {{"thresholds",
           {{"none", p.threshold_none},
            {"low", p.threshold_low},
            {"medium", p.threshold_medium},
            {"high", p.threshold_high}}},
          {"cooldown_s", p.cooldown_s},
          {"eval_period_s", p.eval_period_s}};
}

TriggerPolicy load_trigger_policy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open policy file '" + path + "'");
  return trigger_policy_from_json(json::parse(in));
}

std::string_view to_string(TriggerReason r) {
  switch (r) {
    case TriggerReason::below_threshold:
      return "below_threshold";
    case TriggerReason::cooldown_active:
      return "cooldown_active";
    case TriggerReason::threshold_exceeded:
      return "threshold_exceeded";
    case TriggerReason::risk_escalation:
      return "risk_escalation";
  }
  return "?";
}

TriggerReason trigger_reason_from_string(std::string_view s) {
  for (auto r : {TriggerReason::below_threshold, TriggerReason::cooldown_active,
                 TriggerReason::threshold_exceeded, TriggerReason::risk_escalation}) {
    if (to_string(r) == s) return r;
  }
  throw std::invalid_argument("unknown trigger reason '" + std::string(s) + "'");
}

TriggerDecision decide(RiskLevel risk, double score, std::optional<double> last_persuasion_t,
                       double t, const TriggerPolicy& policy,
                       std::optional<RiskLevel> previous_risk) {
  TriggerDecision d{false, TriggerReason::below_threshold, risk, score, t};
  // A zero score never fires, even with a zero threshold.
  if (!(score > 0.0) || score < policy.threshold(risk)) return d;

  const bool cooling = last_persuasion_t && (t - *last_persuasion_t) < policy.cooldown_s;
  if (!cooling) {
    d.persuade = true;
    d.reason = TriggerReason::threshold_exceeded;
    return d;
  }
  if (previous_risk && risk > *previous_risk) {
    d.persuade = true;
    d.reason = TriggerReason::risk_escalation;
    return d;
  }
  d.reason = TriggerReason::cooldown_active;
  return d;
}

double cohen_kappa(std::span<const bool> a, std::span<const bool> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("kappa needs non-empty label lists");
  if (a.size() != b.size()) {
    throw std::invalid_argument("kappa label lists differ in length (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  // 2x2 confusion counts.
  std::size_t both_yes = 0, both_no = 0, a_yes = 0, b_yes = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    both_yes += (a[i] && b[i]) ? 1 : 0;
    both_no += (!a[i] && !b[i]) ? 1 : 0;
    a_yes += a[i] ? 1 : 0;
    b_yes += b[i] ? 1 : 0;
  }
  const double n = static_cast<double>(a.size());
  const double p_o = static_cast<double>(both_yes + both_no) / n;
  const double pa = static_cast<double>(a_yes) / n;
  const double pb = static_cast<double>(b_yes) / n;
  const double p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
  if (p_e >= 1.0) return 1.0;  // both raters used one identical label throughout
  return (p_o - p_e) / (1.0 - p_e);
}

std::string_view to_string(AdjudicationLabel label) {
  return label == AdjudicationLabel::require_persuasion ? "require persuasion"
                                                        : "do not require persuasion";
}

std::string build_adjudication_prompt(std::string_view scenario_text, std::string_view driver_text) {
  std::string p;
  p += "You are a driving assistant in a Level 3 automated vehicle. ";
  p += "Judge whether the driver should be persuaded to adjust their secondary tasks now, ";
  p += "given the road risk and the driver's recent distraction.\n";
  p += "Road state: ";
  p += scenario_text;
  p += "\nDriver state: ";
  p += driver_text;
  p += "\nAnswer with exactly one label: \"require persuasion\" or \"do not require persuasion\".";
  return p;
}

std::optional<AdjudicationLabel> parse_adjudication(std::string_view completion) {
  const std::string text = lowercase(completion);
  // The negative label contains the positive one, so test it first.
  if (text.find("do not require persuasion") != std::string::npos) {
    return AdjudicationLabel::no_persuasion;
  }
  if (text.find("require persuasion") != std::string::npos) {
    return AdjudicationLabel::require_persuasion;
  }
  return std::nullopt;
}

AdjudicationResult adjudicate_llm(std::string_view scenario_text, std::string_view driver_text,
                                  LlmClient& llm, const TriggerPolicy& policy) {
  if (scenario_text.empty() || driver_text.empty()) {
    throw std::invalid_argument("adjudication needs non-empty scenario and driver texts");
  }
  AdjudicationResult result;
  try {
    result.completion = llm.complete(build_adjudication_prompt(scenario_text, driver_text));
    if (auto label = parse_adjudication(result.completion)) {
      result.label = *label;
      return result;
    }
    result.detail = "unparseable completion";
  } catch (const LlmError& e) {
    result.detail = std::string("llm error: ") + e.what();
  }

  const auto road = parse_timestamped(scenario_text);
  const double score = parse_driver_score(driver_text);
  const auto verdict = decide(classify_risk(road.state), score, std::nullopt, road.t, policy);
  result.degraded = true;
  result.label = verdict.persuade ? AdjudicationLabel::require_persuasion
                                  : AdjudicationLabel::no_persuasion;
  return result;
}

}  // namespace da
