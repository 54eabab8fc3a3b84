#include "da/synthetic_driver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

using namespace da;

namespace {

double oracle_uniform(std::mt19937_64& e) { return std::ldexp(static_cast<double>(e() >> 11), -53); }

}  // namespace

TEST(DrawStream, FiveDrawsPerTickFromMt19937_64) {
  DrawStream s(42);
  std::mt19937_64 oracle(42);
  for (int tick = 0; tick < 100; ++tick) {
    const auto d = s.next();
    EXPECT_EQ(d.initiate, oracle_uniform(oracle));
    EXPECT_EQ(d.kind, oracle_uniform(oracle));
    EXPECT_EQ(d.duration, oracle_uniform(oracle));
    EXPECT_EQ(d.comply, oracle_uniform(oracle));
    EXPECT_EQ(d.comply_delay, oracle_uniform(oracle));
  }
}

TEST(DrawStream, UnitInterval) {
  DrawStream s(7);
  for (int i = 0; i < 10000; ++i) {
    const auto d = s.next();
    for (const double u : {d.initiate, d.kind, d.duration, d.comply, d.comply_delay}) {
      EXPECT_GE(u, 0.0);
      EXPECT_LT(u, 1.0);
    }
  }
}

TEST(DriverConfig, DefaultsValidate) {
  const SyntheticDriverConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.task_rate(RiskLevel::none), 8.0);
  EXPECT_DOUBLE_EQ(c.task_rate(RiskLevel::high), 2.0);
  // Rates fall as risk rises.
  for (int i = 1; i < 4; ++i) EXPECT_LT(c.base_task_rate[i], c.base_task_rate[i - 1]);
}

TEST(DriverConfig, ValidateRejectsBadValues) {
  SyntheticDriverConfig c;
  c.base_task_rate[2] = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.compliance_p = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.tasks[0].max_duration_s = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  for (auto& t : c.tasks) t.share = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.suppression_factor = -0.1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(DriverConfig, JsonRoundTripAndShippedFile) {
  const SyntheticDriverConfig c;
  EXPECT_EQ(to_json(synthetic_driver_from_json(to_json(c))), to_json(c));
  std::ifstream in(DA_SOURCE_DIR "/config/driver.json");
  ASSERT_TRUE(in);
  EXPECT_EQ(to_json(synthetic_driver_from_json(nlohmann::json::parse(in))), to_json(c));
  EXPECT_THROW(synthetic_driver_from_json(nlohmann::json{{"compliance_p", 2.0}}), std::invalid_argument);
}

TEST(SyntheticDriver, InitiationRateMatchesConfig) {
  const SyntheticDriverConfig c;
  for (const auto level : kAllRiskLevels) {
    SyntheticDriver d(c, 1000 + static_cast<int>(level));
    const int ticks = 60000;
    int starts = 0;
    for (int k = 0; k < ticks; ++k) {
      const double t = 5.0 * k;
      d.finish_due(t);
      if (d.maybe_start(t, 5.0, level)) ++starts;
    }
    const double p = c.task_rate(level) * 5.0 / 300.0;
    const double mean = ticks * p;
    const double sd = std::sqrt(ticks * p * (1 - p));
    EXPECT_NEAR(starts, mean, 5 * sd) << to_string(level);
  }
}

TEST(SyntheticDriver, KindSharesAndDurations) {
  const SyntheticDriverConfig c;
  SyntheticDriver d(c, 9);
  std::array<int, 4> counts{};
  int total = 0;
  for (int k = 0; k < 200000; ++k) {
    const double t = 5.0 * k;
    d.finish_due(t);
    if (const auto s = d.maybe_start(t, 5.0, RiskLevel::none)) {
      const auto& prof = c.tasks[static_cast<std::size_t>(s->kind)];
      EXPECT_GE(s->duration_s, prof.min_duration_s);
      EXPECT_LE(s->duration_s, prof.max_duration_s);
      ++counts[static_cast<std::size_t>(s->kind)];
      ++total;
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double p = c.tasks[i].share;
    EXPECT_NEAR(static_cast<double>(counts[i]) / total, p, 5 * std::sqrt(p * (1 - p) / total));
  }
}

TEST(SyntheticDriver, ZeroRateNeverStarts) {
  SyntheticDriverConfig c;
  c.base_task_rate = {0, 0, 0, 0};
  SyntheticDriver d(c, 3);
  for (int k = 0; k < 1000; ++k) EXPECT_FALSE(d.maybe_start(5.0 * k, 5.0, RiskLevel::none));
}

TEST(SyntheticDriver, TasksEndAtScheduledTimeInOrder) {
  SyntheticDriverConfig c;
  c.base_task_rate = {300, 300, 300, 300};  // p = 1 per 5 s tick
  SyntheticDriver d(c, 5);
  std::array<std::optional<double>, 4> expected_end{};
  for (int k = 0; k < 400; ++k) {
    const double t = 5.0 * k;
    const auto ends = d.finish_due(t);
    for (std::size_t i = 1; i < ends.size(); ++i) EXPECT_LE(ends[i - 1].t_end, ends[i].t_end);
    for (const auto& e : ends) {
      auto& slot = expected_end[static_cast<std::size_t>(e.kind)];
      ASSERT_TRUE(slot.has_value());
      EXPECT_DOUBLE_EQ(e.t_end, *slot);
      EXPECT_LE(e.t_end, t);
      slot.reset();
    }
    for (const auto& slot : expected_end) {
      if (slot) {
        EXPECT_GT(*slot, t);
      }
    }
    const auto s = d.maybe_start(t, 5.0, RiskLevel::none);
    ASSERT_TRUE(s.has_value());
    auto& slot = expected_end[static_cast<std::size_t>(s->kind)];
    EXPECT_EQ(s->replaces_active, slot.has_value());
    slot = t + s->duration_s;
  }
}

TEST(SyntheticDriver, SuppressionHalvesInitiationWindow) {
  // Replays the draw stream to predict every tick.
  SyntheticDriverConfig c;
  SyntheticDriver d(c, 77);
  DrawStream oracle(77);
  const double p = c.task_rate(RiskLevel::low) * 5.0 / 300.0;
  for (int k = 0; k < 2000; ++k) {
    const double t = 5.0 * k;
    d.finish_due(t);
    const bool suppressed = (k % 40) >= 1 && (k % 40) <= 8;  // message at k%40==0, t < t_msg + 45
    const auto draws = oracle.next();
    const bool expect_start = draws.initiate < (suppressed ? p * 0.5 : p);
    EXPECT_EQ(d.maybe_start(t, 5.0, RiskLevel::low).has_value(), expect_start) << k;
    if (k % 40 == 0) d.on_message(t);
  }
}

TEST(SyntheticDriver, FullComplianceEndsAllTasksWithinWindow) {
  SyntheticDriverConfig c;
  c.base_task_rate = {300, 300, 300, 300};
  c.compliance_p = 1.0;
  for (int seed = 0; seed < 50; ++seed) {
    SyntheticDriver d(c, seed);
    d.maybe_start(0.0, 5.0, RiskLevel::none);
    d.maybe_start(5.0, 5.0, RiskLevel::none);
    ASSERT_TRUE(d.busy());
    const auto moved = d.on_message(5.0);
    for (const auto& m : moved) {
      EXPECT_GE(m.t_end, 5.0);
      EXPECT_LE(m.t_end, 15.0);
    }
    d.finish_due(15.0);
    EXPECT_FALSE(d.busy());
  }
}

TEST(SyntheticDriver, NoComplianceKeepsSchedule) {
  SyntheticDriverConfig c;
  c.base_task_rate = {300, 300, 300, 300};
  c.compliance_p = 0.0;
  SyntheticDriver d(c, 1);
  const auto s = d.maybe_start(0.0, 5.0, RiskLevel::none);
  ASSERT_TRUE(s);
  EXPECT_TRUE(d.on_message(0.0).empty());
  EXPECT_TRUE(d.finish_due(s->duration_s - 1e-9).empty());
  EXPECT_EQ(d.finish_due(s->duration_s).size(), 1u);
}

TEST(SyntheticDriver, ComplianceDecidedByDrawStream) {
  SyntheticDriverConfig c;
  c.base_task_rate = {300, 300, 300, 300};
  int complied = 0;
  const int n = 4000;
  for (int seed = 0; seed < n; ++seed) {
    SyntheticDriver d(c, seed);
    DrawStream oracle(seed);
    const auto draws = oracle.next();
    const auto s = d.maybe_start(0.0, 5.0, RiskLevel::none);
    ASSERT_TRUE(s);
    const double wrap_up = draws.comply_delay * 10.0;
    const bool expect_move = draws.comply < 0.7 && wrap_up < s->duration_s;
    const auto moved = d.on_message(0.0);
    ASSERT_EQ(!moved.empty(), expect_move) << seed;
    if (expect_move) {
      EXPECT_DOUBLE_EQ(moved[0].t_end, wrap_up);
    }
    if (draws.comply < 0.7) ++complied;
  }
  EXPECT_NEAR(static_cast<double>(complied) / n, 0.7, 5 * std::sqrt(0.21 / n));
}

TEST(SyntheticDriverProperty, MessagesOnlyRemoveStarts) {
  // Same seed with and without messages: the messaged run starts a subset of
  // the ticks, with identical kind and duration.
  const SyntheticDriverConfig c;
  std::mt19937 schedule(99);
  for (int seed = 0; seed < 100; ++seed) {
    SyntheticDriver quiet(c, seed), nudged(c, seed);
    for (int k = 0; k < 240; ++k) {
      const double t = 5.0 * k;
      const auto level = static_cast<RiskLevel>(k / 60);
      quiet.finish_due(t);
      nudged.finish_due(t);
      const auto a = quiet.maybe_start(t, 5.0, level);
      const auto b = nudged.maybe_start(t, 5.0, level);
      if (b) {
        ASSERT_TRUE(a.has_value());
        EXPECT_EQ(a->kind, b->kind);
        EXPECT_EQ(a->duration_s, b->duration_s);
      }
      if (std::uniform_int_distribution<int>(0, 9)(schedule) == 0) nudged.on_message(t);
    }
  }
}
