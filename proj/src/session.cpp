#include "da/session.hpp"

#include <fstream>
#include <stdexcept>

namespace da {
namespace {

using json = nlohmann::json;

std::string fnv1a_hex(std::string_view text) { return prompt_hash(text); }

}  // namespace

std::string_view to_string(PolicyKind p) {
  return p == PolicyKind::baseline ? "baseline" : "persuasion";
}

PolicyKind policy_kind_from_string(std::string_view s) {
  if (s == "baseline") return PolicyKind::baseline;
  if (s == "persuasion") return PolicyKind::persuasion;
  throw std::invalid_argument("unknown policy '" + std::string(s) + "' (baseline|persuasion)");
}

SessionLog::SessionLog(json header) : header_(std::move(header)) {}

void SessionLog::append(json record) {
  const double t = record.at("t").get<double>();
  if (!records_.empty() && t < records_.back().at("t").get<double>()) {
    throw std::logic_error("session log record at t=" + std::to_string(t) +
                           " precedes the previous record");
  }
  records_.push_back(std::move(record));
}

std::string SessionLog::to_jsonl() const {
  std::string out = header_.dump();
  out += '\n';
  for (const auto& r : records_) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void SessionLog::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << to_jsonl();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::string config_hash(const Scenario& scenario, PolicyKind policy, const SessionOptions& options,
                        const std::optional<SyntheticDriverConfig>& driver) {
  json canonical = {{"scenario", to_json(scenario)},
                    {"policy", to_string(policy)},
                    {"trigger", to_json(options.trigger)},
                    {"window_s", options.window.length_s},
                    {"weights",
                     {{"smartphone", options.weights.smartphone},
                      {"in_vehicle_device", options.weights.in_vehicle_device},
                      {"reaching", options.weights.reaching},
                      {"drinking", options.weights.drinking}}},
                    {"selection",
                     {{"threshold_none", options.selection.threshold_none},
                      {"focus_streak_s", options.selection.focus_streak_s}}},
                    {"alert_rules", to_json(options.alert_rules)},
                    {"templates", options.templates.to_json()},
                    {"message_rules", to_json(options.message_rules)},
                    {"driver", driver ? to_json(*driver) : json(nullptr)}};
  return fnv1a_hex(canonical.dump());
}

json session_header(const Scenario& scenario, PolicyKind policy, const SessionOptions& options,
                    const std::optional<SyntheticDriverConfig>& driver,
                    std::optional<std::uint64_t> seed) {
  json sections = json::array();
  for (std::size_t i = 0; i < scenario.sections.size(); ++i) {
    sections.push_back({{"label", to_string(scenario.sections[i].label)},
                        {"start_s", scenario.section_start(i)},
                        {"duration_s", scenario.sections[i].duration_s}});
  }
  return {{"type", "header"},
          {"scenario", scenario.name},
          {"sections", std::move(sections)},
          {"policy", to_string(policy)},
          {"trigger", to_json(options.trigger)},
          {"seed", seed ? json(*seed) : json(nullptr)},
          {"driver", driver ? json("synthetic") : json("live")},
          {"config_hash", config_hash(scenario, policy, options, driver)}};
}

SessionEngine::SessionEngine(const Scenario& scenario, PolicyKind policy, SessionOptions options,
                             SessionLog& log)
    : scenario_(scenario),
      policy_(policy),
      options_(std::move(options)),
      log_(log),
      monitor_(options_.alert_rules) {
  if (scenario_.sections.empty()) throw std::invalid_argument("scenario has no sections");
  options_.trigger.validate();
  options_.weights.validate();
  if (!(options_.window.length_s > 0.0)) throw std::invalid_argument("window length must be > 0");
}

void SessionEngine::start_task(DistractionKind kind, double t) {
  if (events_.ongoing(kind)) {
    throw std::invalid_argument(std::string(to_string(kind)) + " task already active");
  }
  events_.start(kind, t);
  log_.append({{"type", "task_start"}, {"t", t}, {"kind", to_string(kind)}});
}

void SessionEngine::stop_task(DistractionKind kind, double t_end) {
  const auto index = events_.ongoing(kind);
  if (!index) throw std::invalid_argument(std::string(to_string(kind)) + " task is not active");
  events_.finish(*index, t_end);
  const auto& e = events_.events()[*index];
  log_.append({{"type", "task_end"}, {"t", t_end}, {"kind", to_string(kind)},
               {"t_start", e.t_start}});
}

bool SessionEngine::task_active(DistractionKind kind) const {
  return events_.ongoing(kind).has_value();
}

std::vector<DistractionKind> SessionEngine::active_tasks() const {
  std::vector<DistractionKind> out;
  for (const auto i : events_.ongoing_indices()) out.push_back(events_.events()[i].kind);
  return out;
}

double SessionEngine::score_at(double t) const {
  return window_score(events_.events(), t, options_.window, options_.weights);
}

TickResult SessionEngine::evaluate(double t) {
  TickResult r;
  r.t = t;
  r.section = scenario_.section_index_at(t);
  const auto& state = scenario_.sections[r.section].state;
  r.risk = classify_risk(state);
  r.score = score_at(t);

  const std::string driver_line =
      serialize_driver_state(events_.events(), t, options_.window, options_.weights);
  log_.append({{"type", "state"},
               {"t", t},
               {"section", r.section},
               {"risk", to_string(r.risk)},
               {"score", r.score},
               {"road", serialize_timestamped(state, t)},
               {"driver", driver_line}});

  if (r.score > 0.0 || !events_.ongoing_indices().empty()) focus_since_ = t;

  if (policy_ == PolicyKind::baseline) {
    r.alerts = monitor_.evaluate(state, t);
    for (const auto& a : r.alerts) {
      json rec = to_json(a);
      rec["type"] = "message";
      rec["kind"] = "alert";
      log_.append(std::move(rec));
    }
  } else {
    const auto d = decide(r.risk, r.score, last_persuasion_t_, t, options_.trigger, previous_risk_);
    r.decision = d;
    log_.append({{"type", "decision"},
                 {"t", t},
                 {"persuade", d.persuade},
                 {"reason", to_string(d.reason)},
                 {"risk", to_string(d.risk)},
                 {"score", d.score}});

    const double streak = t - focus_since_;
    if (d.persuade) {
      const Strategy s = select_strategy(r.risk, r.score, history_, streak, options_.selection);
      r.request = MessageRequest{s, state, t, build_prompt(state, t, driver_line, s), false};
      last_persuasion_t_ = t;
      focus_since_ = t;
    } else if (r.score == 0.0 && streak >= options_.selection.focus_streak_s) {
      // Positive-feedback path; encouragement is exempt from anti-repetition.
      const Strategy s = select_strategy(r.risk, 0.0, {}, streak, options_.selection);
      r.request = MessageRequest{s, state, t, build_prompt(state, t, driver_line, s), true};
      focus_since_ = t;
    }
  }
  previous_risk_ = r.risk;
  return r;
}

void SessionEngine::deliver(const PersuasionMessage& message, bool encouragement) {
  json rec = to_json(message);
  rec["type"] = "message";
  rec["kind"] = encouragement ? "encouragement" : "persuasion";
  log_.append(std::move(rec));
  if (!encouragement) history_.push_back(message.strategy);
}

SessionLog run_session(const Scenario& scenario, PolicyKind policy,
                       const SyntheticDriverConfig& driver_config, LlmClient& llm,
                       std::uint64_t seed, const SessionOptions& options) {
  SessionLog log(session_header(scenario, policy, options, driver_config, seed));
  SessionEngine engine(scenario, policy, options, log);
  SyntheticDriver driver(driver_config, seed);
  const GenerateOptions gen{&engine.options().templates, &engine.options().message_rules};

  const double period = options.trigger.eval_period_s;
  for (const double t : evaluation_ticks(scenario.total_duration(), period)) {
    for (const auto& end : driver.finish_due(t)) engine.stop_task(end.kind, end.t_end);
    const RiskLevel section_risk = scenario.sections[scenario.section_index_at(t)].label;
    if (const auto start = driver.maybe_start(t, period, section_risk)) {
      if (start->replaces_active) engine.stop_task(start->kind, t);
      engine.start_task(start->kind, t);
    }

    const TickResult tick = engine.evaluate(t);
    if (tick.request) {
      const auto& req = *tick.request;
      engine.deliver(generate(req.prompt, llm, req.strategy, req.state, req.t, gen),
                     req.encouragement);
      if (!req.encouragement) driver.on_message(t);
    }
  }
  return log;
}

}  // namespace da
