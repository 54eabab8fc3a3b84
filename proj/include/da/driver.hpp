#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace da {

enum class DistractionKind : std::uint8_t { smartphone, in_vehicle_device, reaching, drinking };

inline constexpr std::array<DistractionKind, 4> kAllDistractionKinds = {
    DistractionKind::smartphone, DistractionKind::in_vehicle_device, DistractionKind::reaching,
    DistractionKind::drinking};

std::string_view to_string(DistractionKind kind);
DistractionKind distraction_kind_from_string(std::string_view s);

// Attention-allocation ratings on the 0-10 distraction scale from driver
// interviews. "drinking" reuses the rating given for eating.
struct DistractionWeights {
  double smartphone = 6.7;
  double in_vehicle_device = 4.7;
  double reaching = 3.9;
  double drinking = 3.8;

  double of(DistractionKind kind) const;
  /// Throws std::invalid_argument unless every weight is strictly positive.
  void validate() const;
};

struct DistractionEvent {
  DistractionKind kind = DistractionKind::smartphone;
  double t_start = 0.0;
  std::optional<double> t_end;  // nullopt while the task is ongoing

  bool intersects(double window_open, double t) const;
  bool operator==(const DistractionEvent&) const = default;
};

struct AttentionWindow {
  double length_s = 30.0;
};

/// Sum of weights of events intersecting the window (t - length_s, t].
double window_score(std::span<const DistractionEvent> events, double t,
                    const AttentionWindow& window = {}, const DistractionWeights& weights = {});

/// `[t=45.0] tasks=smartphone,drinking score=10.5`, or `tasks=none score=0.0` when empty.
std::string serialize_driver_state(std::span<const DistractionEvent> events, double t,
                                   const AttentionWindow& window = {},
                                   const DistractionWeights& weights = {});

/// Extracts the score field from a serialized driver-state line.
double parse_driver_score(std::string_view line);

// JSONL event line: {"t_start": s, "t_end": s|null, "kind": "<enum>"}
nlohmann::json to_json(const DistractionEvent& event);
DistractionEvent distraction_event_from_json(const nlohmann::json& j);

/// Append-only store with a single writer. Readers take immutable snapshots
/// and can score them concurrently while the writer keeps appending.
class EventStore {
 public:
  using Snapshot = std::shared_ptr<const std::vector<DistractionEvent>>;

  EventStore();

  /// Opens a new ongoing event. Events must be appended in t_start order.
  std::size_t start(DistractionKind kind, double t_start);
  void append(const DistractionEvent& event);
  /// Closes the ongoing event at `index`. Throws if already closed or t_end < t_start.
  void finish(std::size_t index, double t_end);

  /// Index of the most recent ongoing event of this kind, if any.
  std::optional<std::size_t> ongoing(DistractionKind kind) const;
  std::vector<std::size_t> ongoing_indices() const;

  Snapshot snapshot() const { return events_; }
  const std::vector<DistractionEvent>& events() const { return *events_; }
  std::size_t size() const { return events_->size(); }

 private:
  // Copy-on-write so published snapshots never change underneath a reader.
  std::shared_ptr<std::vector<DistractionEvent>> mutable_copy();

  std::shared_ptr<const std::vector<DistractionEvent>> events_;
};

}  // namespace da
