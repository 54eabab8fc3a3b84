#include "da/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace da {
namespace {

constexpr std::array<std::string_view, 4> kKindNames = {"smartphone", "in_vehicle_device",
                                                        "reaching", "drinking"};

std::string format_tenths(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

}  // namespace

std::string_view to_string(DistractionKind kind) {
  return kKindNames.at(static_cast<std::size_t>(kind));
}

DistractionKind distraction_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<DistractionKind>(i);
  }
  throw std::invalid_argument("unknown distraction kind '" + std::string(s) + "'");
}

double DistractionWeights::of(DistractionKind kind) const {
  switch (kind) {
    case DistractionKind::smartphone:
      return smartphone;
    case DistractionKind::in_vehicle_device:
      return in_vehicle_device;
    case DistractionKind::reaching:
      return reaching;
    case DistractionKind::drinking:
      return drinking;
  }
  throw std::invalid_argument("bad distraction kind");
}

void DistractionWeights::validate() const {
  for (const auto kind : kAllDistractionKinds) {
    const double w = of(kind);
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("weight for " + std::string(to_string(kind)) +
                                  " must be positive");
    }
  }
}

bool DistractionEvent::intersects(double window_open, double t) const {
  if (t_start > t) return false;
  return !t_end || *t_end > window_open;
}

double window_score(std::span<const DistractionEvent> events, double t,
                    const AttentionWindow& window, const DistractionWeights& weights) {
  const double open = t - window.length_s;
  double score = 0.0;
  for (const auto& e : events) {
    if (e.intersects(open, t)) score += weights.of(e.kind);
  }
  return score;
}

std::string serialize_driver_state(std::span<const DistractionEvent> events, double t,
                                   const AttentionWindow& window,
                                   const DistractionWeights& weights) {
  const double open = t - window.length_s;
  std::vector<const DistractionEvent*> in_window;
  for (const auto& e : events) {
    if (e.intersects(open, t)) in_window.push_back(&e);
  }
  // Chronological by start; stable keeps insertion order for ties.
  std::stable_sort(in_window.begin(), in_window.end(),
                   [](const auto* a, const auto* b) { return a->t_start < b->t_start; });

  std::string tasks;
  double score = 0.0;
  for (const auto* e : in_window) {
    if (!tasks.empty()) tasks += ',';
    tasks += to_string(e->kind);
    score += weights.of(e->kind);
  }
  if (tasks.empty()) tasks = "none";
  return "[t=" + format_tenths(t) + "] tasks=" + tasks + " score=" + format_tenths(score);
}

double parse_driver_score(std::string_view line) {
  const auto pos = line.rfind("score=");
  if (pos == std::string_view::npos) throw std::invalid_argument("driver line has no score field");
  const std::string value(line.substr(pos + 6));
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad driver score '" + value + "'");
  }
  if (used != value.size() || v < 0.0) throw std::invalid_argument("bad driver score '" + value + "'");
  return v;
}

nlohmann::json to_json(const DistractionEvent& e) {
  nlohmann::json j;
  j["t_start"] = e.t_start;
  j["t_end"] = e.t_end ? nlohmann::json(*e.t_end) : nlohmann::json(nullptr);
  j["kind"] = to_string(e.kind);
  return j;
}

DistractionEvent distraction_event_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("event: expected object");
  DistractionEvent e;
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw std::invalid_argument("event.kind: expected string");
  }
  e.kind = distraction_kind_from_string(j["kind"].get<std::string>());
  if (!j.contains("t_start") || !j["t_start"].is_number()) {
    throw std::invalid_argument("event.t_start: expected number");
  }
  e.t_start = j["t_start"].get<double>();
  if (j.contains("t_end") && !j["t_end"].is_null()) {
    if (!j["t_end"].is_number()) throw std::invalid_argument("event.t_end: expected number or null");
    e.t_end = j["t_end"].get<double>();
    if (*e.t_end < e.t_start) throw std::invalid_argument("event.t_end precedes t_start");
  }
  return e;
}

EventStore::EventStore() : events_(std::make_shared<const std::vector<DistractionEvent>>()) {}

std::shared_ptr<std::vector<DistractionEvent>> EventStore::mutable_copy() {
  auto copy = std::make_shared<std::vector<DistractionEvent>>(*events_);
  events_ = copy;
  return copy;
}

std::size_t EventStore::start(DistractionKind kind, double t_start) {
  append(DistractionEvent{kind, t_start, std::nullopt});
  return events_->size() - 1;
}

void EventStore::append(const DistractionEvent& event) {
  if (!events_->empty() && event.t_start < events_->back().t_start) {
    throw std::invalid_argument("events must be appended in start-time order");
  }
  if (event.t_end && *event.t_end < event.t_start) {
    throw std::invalid_argument("event ends before it starts");
  }
  mutable_copy()->push_back(event);
}

void EventStore::finish(std::size_t index, double t_end) {
  const auto& current = events_->at(index);
  if (current.t_end) throw std::logic_error("event already finished");
  if (t_end < current.t_start) throw std::invalid_argument("event ends before it starts");
  (*mutable_copy())[index].t_end = t_end;
}

std::optional<std::size_t> EventStore::ongoing(DistractionKind kind) const {
  for (std::size_t i = events_->size(); i-- > 0;) {
    const auto& e = (*events_)[i];
    if (e.kind == kind && !e.t_end) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> EventStore::ongoing_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < events_->size(); ++i) {
    if (!(*events_)[i].t_end) out.push_back(i);
  }
  return out;
}

}  // namespace da
