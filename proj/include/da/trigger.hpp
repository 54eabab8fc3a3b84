#pragma once

#include "da/driver.hpp"
#include "da/llm_client.hpp"
#include "da/scenario.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace da {

// Thresholds live on the window-score scale and tighten as risk rises:
// at high risk any task fires, with no risk only phone-level distraction does.
struct TriggerPolicy {
  double threshold_none = 6.7;
  double threshold_low = 4.7;
  double threshold_medium = 3.8;
  double threshold_high = 0.1;
  double cooldown_s = 60.0;
  double eval_period_s = 5.0;

  double threshold(RiskLevel risk) const;
  /// Throws std::invalid_argument when the ordering or ranges are violated.
  void validate() const;
};

TriggerPolicy trigger_policy_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const TriggerPolicy& policy);
TriggerPolicy load_trigger_policy_file(const std::string& path);

enum class TriggerReason { below_threshold, cooldown_active, threshold_exceeded, risk_escalation };

std::string_view to_string(TriggerReason reason);
TriggerReason trigger_reason_from_string(std::string_view s);

struct TriggerDecision {
  bool persuade = false;
  TriggerReason reason = TriggerReason::below_threshold;
  RiskLevel risk = RiskLevel::none;
  double score = 0.0;
  double t = 0.0;
};

/// Pure persuasion verdict.
///
/// Fires when the window score reaches the risk threshold and the cooldown
/// since the last persuasion has elapsed. If the risk rose since the previous
/// evaluation the cooldown is bypassed; that case is reported as
/// risk_escalation, otherwise a firing decision is threshold_exceeded.
TriggerDecision decide(RiskLevel risk, double score, std::optional<double> last_persuasion_t,
                       double t, const TriggerPolicy& policy = {},
                       std::optional<RiskLevel> previous_risk = std::nullopt);

/// Cohen's kappa over two binary label sequences. Throws std::invalid_argument
/// on empty or mismatched input; returns 1.0 for the all-same-label case.
double cohen_kappa(std::span<const bool> labels_a, std::span<const bool> labels_b);

enum class AdjudicationLabel { require_persuasion, no_persuasion };

std::string_view to_string(AdjudicationLabel label);

struct AdjudicationResult {
  AdjudicationLabel label = AdjudicationLabel::no_persuasion;
  bool degraded = false;     // rule-based fallback was used
  std::string detail;        // why the fallback happened, empty otherwise
  std::string completion;    // raw LLM text when one was received
};

/// Prompt asking the model to label one scenario as requiring persuasion or not.
std::string build_adjudication_prompt(std::string_view scenario_text, std::string_view driver_text);

/// Finds "do not require persuasion" / "require persuasion" (case-insensitive).
std::optional<AdjudicationLabel> parse_adjudication(std::string_view completion);

/// LLM labelling of a (road line, driver line) pair. Unparseable completions and
/// transport failures fall back to decide() on the parsed texts and set `degraded`.
AdjudicationResult adjudicate_llm(std::string_view scenario_text, std::string_view driver_text,
                                  LlmClient& llm, const TriggerPolicy& policy = {});

}  // namespace da
