#pragma once

#include "da/driver.hpp"
#include "da/scenario.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace da {

struct TaskProfile {
  double share = 0.25;        // relative probability of choosing this kind
  double min_duration_s = 5.0;
  double max_duration_s = 20.0;
};

// Stochastic stand-in for a human driver. Counts are not meant to match any
// study magnitude; the defaults only preserve the direction of the findings
// (more secondary tasks as risk falls, fewer under persuasion).
struct SyntheticDriverConfig {
  // Expected task initiations per 300 s of driving, indexed by RiskLevel.
  std::array<double, 4> base_task_rate = {8.0, 6.6, 5.6, 2.0};
  std::array<TaskProfile, 4> tasks = {{
      {0.35, 15.0, 40.0},  // smartphone
      {0.25, 10.0, 25.0},  // in_vehicle_device
      {0.15, 4.0, 10.0},   // reaching
      {0.25, 4.0, 12.0},   // drinking
  }};
  double compliance_p = 0.7;        // chance an active task ends soon after a message
  double compliance_window_s = 10.0;
  double suppression_s = 45.0;      // initiation chance is scaled after a message
  double suppression_factor = 0.5;

  double task_rate(RiskLevel level) const { return base_task_rate[static_cast<std::size_t>(level)]; }
  void validate() const;
};

SyntheticDriverConfig synthetic_driver_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SyntheticDriverConfig& config);

/// Uniform draws consumed by the driver at one evaluation tick. The same
/// number is drawn every tick regardless of what the driver does, so two
/// sessions with the same seed see the same randomness whatever the policy.
struct TickDraws {
  double initiate = 0.0;
  double kind = 0.0;
  double duration = 0.0;
  double comply = 0.0;
  double comply_delay = 0.0;
};

class DrawStream {
 public:
  explicit DrawStream(std::uint64_t seed) : engine_(seed) {}
  TickDraws next();

 private:
  // 53-bit uniform in [0, 1), independent of the standard library's distributions.
  double uniform();
  std::mt19937_64 engine_;
};

struct TaskStart {
  DistractionKind kind;
  double duration_s;
  bool replaces_active = false;  // a task of this kind was running and ends at the same t
};

struct TaskEnd {
  DistractionKind kind;
  double t_end;
};

/// Per-tick behaviour of the synthetic driver. Initiations are independent of
/// tasks already in progress, so tasks of different kinds may overlap.
/// Picking a kind that is already active restarts it.
class SyntheticDriver {
 public:
  SyntheticDriver(SyntheticDriverConfig config, std::uint64_t seed);

  /// Tasks whose scheduled end is at or before `t`, in end-time order.
  std::vector<TaskEnd> finish_due(double t);

  /// Draws this tick's randomness, then possibly starts a task at `t`.
  std::optional<TaskStart> maybe_start(double t, double period_s, RiskLevel section_risk);

  /// Reaction to a persuasion message delivered at `t`: suppresses new
  /// initiations and, with probability compliance_p, brings every active task's
  /// end forward to within compliance_window_s. Returns the tasks rescheduled.
  std::vector<TaskEnd> on_message(double t);

  bool busy() const;
  const SyntheticDriverConfig& config() const { return config_; }

 private:
  DistractionKind pick_kind(double u) const;

  SyntheticDriverConfig config_;
  DrawStream draws_;
  TickDraws current_;
  std::array<std::optional<double>, 4> active_end_;
  double suppressed_until_ = -1.0;
};

}  // namespace da
