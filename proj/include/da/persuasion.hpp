#pragma once

#include "da/llm_client.hpp"
#include "da/scenario.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace da {

enum class Strategy {
  status_feedback,
  emphasize_risk,
  default_concern,
  reliable_advice,
  social_connection,
  social_interaction,
};

inline constexpr std::array<Strategy, 6> kAllStrategies = {
    Strategy::status_feedback,  Strategy::emphasize_risk,    Strategy::default_concern,
    Strategy::reliable_advice,  Strategy::social_connection, Strategy::social_interaction};

/// Grouping of strategies into the three persuasion elements; two strategies each.
enum class PersuasionElement { remind_unreasonable, improve_execution, increase_motivation };

PersuasionElement element_of(Strategy s);
/// The other strategy in the same element.
Strategy sibling_of(Strategy s);

/// Wire names: "StatusFeedback", "EmphasizeRisk", ...
std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);
std::string_view to_string(PersuasionElement e);

/// One-line description of how each strategy persuades; embedded in prompts.
std::string_view strategy_description(Strategy s);

/// The four phrasing principles drivers asked for, in order.
const std::array<std::string_view, 4>& persuasion_principles();

enum class Channel { visual, audio, both };
enum class MessageSource { llm, template_table, baseline };

std::string_view to_string(Channel c);
std::string_view to_string(MessageSource s);

inline constexpr std::size_t kMaxMessageChars = 200;

struct PersuasionMessage {
  /// Throws std::length_error for empty text or text over kMaxMessageChars.
  PersuasionMessage(std::string text, Channel channel, Strategy strategy, double t,
                    MessageSource source);

  std::string text;
  Channel channel;
  Strategy strategy;
  double t;
  MessageSource source;
};

/// JSONL record: {"t", "text", "channel", "strategy", "source"}.
nlohmann::json to_json(const PersuasionMessage& m);

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

struct SelectionConfig {
  double threshold_none = 6.7;
  double focus_streak_s = 120.0;
};

/// Deterministic scheduler.
///   focused (streak >= focus_streak_s, score 0) -> SocialInteraction
///   high -> EmphasizeRisk, medium -> ReliableAdvice, low -> StatusFeedback
///   none -> DefaultConcern at or above threshold_none, SocialConnection below it
/// A choice equal to the last strategy used is swapped for its sibling.
Strategy select_strategy(RiskLevel risk, double score, std::span<const Strategy> history,
                         double focused_streak_s, const SelectionConfig& config = {});

/// Generation prompt: persona, principles, strategy description, road and
/// driver lines, then a one-sentence output instruction.
std::string build_prompt(const RiskFactorState& state, double t, std::string_view driver_text,
                         Strategy strategy);

enum class ViolationKind { empty, too_long, too_many_words, blacklisted };

struct Violation {
  ViolationKind kind;
  std::string detail;
  bool operator==(const Violation&) const = default;
};

std::string_view to_string(ViolationKind k);

struct MessageRules {
  std::size_t max_chars = kMaxMessageChars;
  std::size_t max_words = 25;
  std::vector<std::string> blacklist = {"must", "immediately", "danger!", "crash", "die", "accident"};
};

MessageRules message_rules_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const MessageRules& rules);

/// Checks the machine-checkable principles: length, word count and command or
/// threat vocabulary (whole-word, case-insensitive). Empty result = valid.
std::vector<Violation> validate_message(std::string_view text, const MessageRules& rules = {});

/// Strategy x risk level table. Entries may contain "{weather}", replaced by a
/// short phrase for the current weather.
class TemplateTable {
 public:
  TemplateTable();  // built-in defaults

  const std::string& entry(Strategy s, RiskLevel risk) const;
  void set(Strategy s, RiskLevel risk, std::string text);
  std::string render(Strategy s, RiskLevel risk, Weather weather) const;

  static TemplateTable from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

 private:
  std::array<std::array<std::string, 4>, 6> entries_;
};

TemplateTable load_template_table_file(const std::string& path);

std::string_view weather_phrase(Weather w);

std::string fallback_template(Strategy strategy, const RiskFactorState& state,
                              const TemplateTable& table = TemplateTable{});

/// Trims whitespace and one pair of wrapping quotes from a completion.
std::string clean_completion(std::string_view raw);

struct GenerateOptions {
  const TemplateTable* templates = nullptr;  // null -> defaults
  const MessageRules* rules = nullptr;       // null -> defaults
};

/// Never fails: any LLM error or a completion that fails validation yields
/// the template message instead.
PersuasionMessage generate(std::string_view prompt, LlmClient& llm, Strategy strategy,
                           const RiskFactorState& state, double t,
                           const GenerateOptions& options = {});

}  // namespace da
