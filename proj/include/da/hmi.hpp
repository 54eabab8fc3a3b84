#pragma once

#include "da/baseline.hpp"
#include "da/driver.hpp"
#include "da/persuasion.hpp"
#include "da/scenario.hpp"
#include "da/trigger.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string_view>
#include <vector>

namespace da {

enum class Avatar { lively, tense, encourage };
enum class Border { default_style, yellow_flicker, red };

std::string_view to_string(Avatar a);
std::string_view to_string(Border b);

inline constexpr double kEncourageHoldSeconds = 10.0;

Border border_for(RiskLevel risk);

/// Tense while the window score is at or above the risk threshold; otherwise
/// "encourage" for kEncourageHoldSeconds after a SocialInteraction message.
Avatar avatar_for(RiskLevel risk, double score, std::optional<double> last_encouragement_t,
                  double t, const TriggerPolicy& policy = {});

nlohmann::json factors_json(const RiskFactorState& s);

struct StateFrame {
  double t = 0.0;
  RiskLevel risk = RiskLevel::none;
  RiskFactorState factors;
  Avatar avatar = Avatar::lively;
  Border border = Border::default_style;
  std::vector<DistractionKind> tasks;
  double score = 0.0;

  nlohmann::json to_json() const;
};

StateFrame make_state_frame(double t, const RiskFactorState& state, double score,
                            std::vector<DistractionKind> tasks,
                            std::optional<double> last_encouragement_t,
                            const TriggerPolicy& policy = {});

nlohmann::json message_frame(const PersuasionMessage& m);
nlohmann::json alert_frame(const BaselineAlert& alert);
nlohmann::json error_frame(std::string_view code, std::string_view detail);

}  // namespace da
