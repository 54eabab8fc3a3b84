#include "da/synthetic_driver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace da {
namespace {

using json = nlohmann::json;

constexpr double kRateWindowSeconds = 300.0;

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void SyntheticDriverConfig::validate() const {
  for (const double r : base_task_rate) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("task rates must be >= 0");
  }
  double share_total = 0.0;
  for (const auto& t : tasks) {
    if (!(t.share >= 0.0)) throw std::invalid_argument("task shares must be >= 0");
    if (!(t.min_duration_s > 0.0) || t.max_duration_s < t.min_duration_s) {
      throw std::invalid_argument("task durations must satisfy 0 < min <= max");
    }
    share_total += t.share;
  }
  if (!(share_total > 0.0)) throw std::invalid_argument("task shares must not all be zero");
  if (!probability(compliance_p)) throw std::invalid_argument("compliance_p must be in [0, 1]");
  if (!probability(suppression_factor)) {
    throw std::invalid_argument("suppression_factor must be in [0, 1]");
  }
  if (!(suppression_s >= 0.0) || !(compliance_window_s >= 0.0)) {
    throw std::invalid_argument("suppression_s and compliance_window_s must be >= 0");
  }
}

SyntheticDriverConfig synthetic_driver_from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("driver: expected object");
  SyntheticDriverConfig c;
  if (doc.contains("base_task_rate")) {
    const auto& r = doc.at("base_task_rate");
    for (const auto level : kAllRiskLevels) {
      const std::string key(to_string(level));
      if (r.contains(key)) c.base_task_rate[static_cast<std::size_t>(level)] = r.at(key).get<double>();
    }
  }
  if (doc.contains("tasks")) {
    const auto& t = doc.at("tasks");
    for (const auto kind : kAllDistractionKinds) {
      const std::string key(to_string(kind));
      if (!t.contains(key)) continue;
      auto& p = c.tasks[static_cast<std::size_t>(kind)];
      p.share = t.at(key).value("share", p.share);
      p.min_duration_s = t.at(key).value("min_duration_s", p.min_duration_s);
      p.max_duration_s = t.at(key).value("max_duration_s", p.max_duration_s);
    }
  }
  c.compliance_p = doc.value("compliance_p", c.compliance_p);
  c.compliance_window_s = doc.value("compliance_window_s", c.compliance_window_s);
  c.suppression_s = doc.value("suppression_s", c.suppression_s);
  c.suppression_factor = doc.value("suppression_factor", c.suppression_factor);
  c.validate();
  return c;
}

json to_json(const SyntheticDriverConfig& c) {
  json rates = json::object();
  for (const auto level : kAllRiskLevels) rates[std::string(to_string(level))] = c.task_rate(level);
  json tasks = json::object();
  for (const auto kind : kAllDistractionKinds) {
    const auto& p = c.tasks[static_cast<std::size_t>(kind)];
    tasks[std::string(to_string(kind))] = {{"share", p.share},
                                           {"min_duration_s", p.min_duration_s},
                                           {"max_duration_s", p.max_duration_s}};
  }
  return {{"base_task_rate", rates},
          {"tasks", tasks},
          {"compliance_p", c.compliance_p},
          {"compliance_window_s", c.compliance_window_s},
          {"suppression_s", c.suppression_s},
          {"suppression_factor", c.suppression_factor}};
}

double DrawStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

TickDraws DrawStream::next() {
  TickDraws d;
  d.initiate = uniform();
  d.kind = uniform();
  d.duration = uniform();
  d.comply = uniform();
  d.comply_delay = uniform();
  return d;
}

SyntheticDriver::SyntheticDriver(SyntheticDriverConfig config, std::uint64_t seed)
    : config_(std::move(config)), draws_(seed) {
  config_.validate();
}

std::vector<TaskEnd> SyntheticDriver::finish_due(double t) {
  std::vector<TaskEnd> out;
  for (std::size_t i = 0; i < active_end_.size(); ++i) {
    if (active_end_[i] && *active_end_[i] <= t) {
      out.push_back({static_cast<DistractionKind>(i), *active_end_[i]});
      active_end_[i].reset();
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TaskEnd& a, const TaskEnd& b) { return a.t_end < b.t_end; });
  return out;
}

bool SyntheticDriver::busy() const {
  return std::any_of(active_end_.begin(), active_end_.end(),
                     [](const auto& e) { return e.has_value(); });
}

DistractionKind SyntheticDriver::pick_kind(double u) const {
  double total = 0.0;
  for (const auto& p : config_.tasks) total += p.share;
  double acc = 0.0;
  for (std::size_t i = 0; i < config_.tasks.size(); ++i) {
    acc += config_.tasks[i].share / total;
    if (u < acc) return static_cast<DistractionKind>(i);
  }
  // Rounding can leave acc a hair under 1; fall back to the last kind with weight.
  for (std::size_t i = config_.tasks.size(); i-- > 0;) {
    if (config_.tasks[i].share > 0.0) return static_cast<DistractionKind>(i);
  }
  return DistractionKind::drinking;
}

std::optional<TaskStart> SyntheticDriver::maybe_start(double t, double period_s,
                                                      RiskLevel section_risk) {
  current_ = draws_.next();

  double p = config_.task_rate(section_risk) * period_s / kRateWindowSeconds;
  if (t < suppressed_until_) p *= config_.suppression_factor;
  if (!(current_.initiate < std::min(p, 1.0))) return std::nullopt;

  const DistractionKind kind = pick_kind(current_.kind);
  const auto& profile = config_.tasks[static_cast<std::size_t>(kind)];
  const double duration =
      profile.min_duration_s + current_.duration * (profile.max_duration_s - profile.min_duration_s);
  auto& slot = active_end_[static_cast<std::size_t>(kind)];
  const bool replaces = slot.has_value();
  slot = t + duration;
  return TaskStart{kind, duration, replaces};
}

std::vector<TaskEnd> SyntheticDriver::on_message(double t) {
  std::vector<TaskEnd> out;
  if (config_.suppression_s > 0.0) suppressed_until_ = t + config_.suppression_s;
  if (!(current_.comply < config_.compliance_p)) return out;
  const double wrap_up = t + current_.comply_delay * config_.compliance_window_s;
  for (std::size_t i = 0; i < active_end_.size(); ++i) {
    if (active_end_[i] && wrap_up < *active_end_[i]) {
      active_end_[i] = wrap_up;
      out.push_back({static_cast<DistractionKind>(i), wrap_up});
    }
  }
  return out;
}

}  // namespace da
