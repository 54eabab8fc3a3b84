#pragma once

#include "da/baseline.hpp"
#include "da/driver.hpp"
#include "da/llm_client.hpp"
#include "da/persuasion.hpp"
#include "da/scenario.hpp"
#include "da/synthetic_driver.hpp"
#include "da/trigger.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace da {

enum class PolicyKind { baseline, persuasion };

std::string_view to_string(PolicyKind p);
PolicyKind policy_kind_from_string(std::string_view s);

/// Everything a session needs besides the scenario, driver and LLM.
struct SessionOptions {
  TriggerPolicy trigger;
  AttentionWindow window;
  DistractionWeights weights;
  SelectionConfig selection;
  std::vector<AlertRule> alert_rules = default_alert_rules();
  TemplateTable templates;
  MessageRules message_rules;
};

/// Append-only JSONL session record. Line 1 is the header; every later line
/// is a record with a "type" and a "t" that never decreases.
class SessionLog {
 public:
  SessionLog() = default;
  explicit SessionLog(nlohmann::json header);

  /// Throws std::logic_error if record["t"] is earlier than the last record.
  void append(nlohmann::json record);

  const nlohmann::json& header() const { return header_; }
  const std::vector<nlohmann::json>& records() const { return records_; }

  std::string to_jsonl() const;
  void write(const std::string& path) const;

 private:
  nlohmann::json header_;
  std::vector<nlohmann::json> records_;
};

/// FNV-1a digest of the canonical JSON dump of the session configuration
/// (seed excluded), used to refuse aggregating logs from different setups.
std::string config_hash(const Scenario& scenario, PolicyKind policy, const SessionOptions& options,
                        const std::optional<SyntheticDriverConfig>& driver);

nlohmann::json session_header(const Scenario& scenario, PolicyKind policy,
                              const SessionOptions& options,
                              const std::optional<SyntheticDriverConfig>& driver,
                              std::optional<std::uint64_t> seed);

/// A persuasion message the policy wants delivered. Generation is left to the
/// caller so live sessions can run the LLM call off the simulation loop.
struct MessageRequest {
  Strategy strategy;
  RiskFactorState state;
  double t;
  std::string prompt;
  bool encouragement = false;
};

struct TickResult {
  double t = 0.0;
  std::size_t section = 0;
  RiskLevel risk = RiskLevel::none;
  double score = 0.0;
  std::optional<TriggerDecision> decision;   // persuasion policy only
  std::optional<MessageRequest> request;     // persuasion policy only
  std::vector<BaselineAlert> alerts;         // baseline policy only
};

/// Simulation core shared by batch runs and live sessions. Driver input
/// arrives through start_task/stop_task; evaluate() runs the active policy.
class SessionEngine {
 public:
  SessionEngine(const Scenario& scenario, PolicyKind policy, SessionOptions options,
                SessionLog& log);

  /// Opens a task at `t`. Throws std::invalid_argument if one of that kind is active.
  void start_task(DistractionKind kind, double t);
  /// Closes the active task of this kind. Throws std::invalid_argument if none is active.
  void stop_task(DistractionKind kind, double t_end);
  bool task_active(DistractionKind kind) const;
  std::vector<DistractionKind> active_tasks() const;

  /// Evaluates the policy at `t` and logs the state and decision records.
  TickResult evaluate(double t);

  /// Logs a generated message. Persuasion messages (not encouragement) feed
  /// the anti-repetition history.
  void deliver(const PersuasionMessage& message, bool encouragement = false);

  double score_at(double t) const;
  const Scenario& scenario() const { return scenario_; }
  const SessionOptions& options() const { return options_; }
  PolicyKind policy() const { return policy_; }
  const EventStore& events() const { return events_; }

 private:
  const Scenario& scenario_;
  PolicyKind policy_;
  SessionOptions options_;
  SessionLog& log_;
  EventStore events_;
  AlertMonitor monitor_;

  std::optional<double> last_persuasion_t_;
  std::optional<RiskLevel> previous_risk_;
  std::vector<Strategy> history_;
  double focus_since_ = 0.0;
};

/// Runs a full session with the synthetic driver at the evaluation cadence.
/// Deterministic for fixed inputs, seed and a deterministic LLM client.
SessionLog run_session(const Scenario& scenario, PolicyKind policy,
                       const SyntheticDriverConfig& driver, LlmClient& llm, std::uint64_t seed,
                       const SessionOptions& options = {});

}  // namespace da
