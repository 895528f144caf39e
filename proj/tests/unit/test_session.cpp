#include <gtest/gtest.h>

#include "sher/config.hpp"
#include "sher/session.hpp"

using namespace sher;

namespace {

SimConfig live_config() {
  SimConfig cfg = default_config();
  cfg.trial.mode = ControlMode::Teleop;
  cfg.trial.max_duration = 2.0;
  cfg.sensor_noise_rms = 0.0;
  return cfg;
}

MasterVelocityCmd push(double vx) {
  MasterVelocityCmd m;
  m.v = Vec3(vx, 0, 0);
  return m;
}

}  // namespace

TEST(Session, IdleDoesNotMove) {
  LiveSession s(live_config());
  const StateSnapshot a = s.snapshot();
  s.apply(push(5.0));
  for (int k = 0; k < 50; ++k) {
    s.tick();
  }
  const StateSnapshot b = s.snapshot();
  EXPECT_FALSE(b.trial_running);
  EXPECT_EQ(a.tip, b.tip);
  EXPECT_EQ(b.tick, 50U);
  EXPECT_NEAR(b.t, 0.05, 1e-15);
}

TEST(Session, StalenessHoldsVelocityThenZeroes) {
  LiveSession s(live_config());
  EXPECT_EQ(s.staleness_ticks(), 100U);
  s.apply(StartTrialCmd{});
  const Vec3 tip0 = s.snapshot().tip;
  s.apply(push(2.0));
  for (int k = 0; k < 300; ++k) {
    s.tick();
  }
  // 100 ticks at 2 mm/s scaled by 0.5.
  EXPECT_NEAR(s.snapshot().tip.x() - tip0.x(), 0.1, 1e-9);
}

TEST(Session, LatestVelocityWins) {
  LiveSession s(live_config());
  s.apply(StartTrialCmd{});
  const Vec3 tip0 = s.snapshot().tip;
  s.apply(push(2.0));
  s.apply(push(-2.0));
  for (int k = 0; k < 50; ++k) {
    s.tick();
  }
  EXPECT_NEAR(s.snapshot().tip.x() - tip0.x(), -0.05, 1e-9);
}

TEST(Session, TrialEndsAtMaxDuration) {
  LiveSession s(live_config());
  StartTrialCmd st;
  st.color_order = parse_color_order("BGRY");
  s.apply(st);
  EXPECT_TRUE(s.trial_running());
  EXPECT_EQ(s.snapshot().color, "B");
  for (int k = 0; k < 2000; ++k) {
    s.tick();
  }
  EXPECT_FALSE(s.trial_running());
  const auto done = s.take_finished();
  ASSERT_EQ(done.size(), 1U);
  EXPECT_FALSE(done[0].summary.completed);
  EXPECT_FALSE(done[0].aborted);
  EXPECT_EQ(order_string(done[0].order), "BGRY");
  EXPECT_EQ(done[0].rows.size(), 400U);
  EXPECT_TRUE(s.take_finished().empty());
}

TEST(Session, ZeroDurationTrialFinishesImmediately) {
  SimConfig cfg = live_config();
  cfg.trial.max_duration = 0.0;
  LiveSession s(cfg);
  s.apply(StartTrialCmd{});
  EXPECT_FALSE(s.trial_running());
  const auto done = s.take_finished();
  ASSERT_EQ(done.size(), 1U);
  EXPECT_TRUE(done[0].rows.empty());
}

TEST(Session, ModeScaleAndResetCommands) {
  LiveSession s(live_config());
  s.apply(SetModeCmd{ControlMode::AdaptiveCoop});
  s.apply(SetScaleCmd{0.25});
  s.apply(ClutchCmd{true});
  StateSnapshot snap = s.snapshot();
  EXPECT_EQ(snap.mode, ControlMode::AdaptiveCoop);
  EXPECT_EQ(snap.scale, 0.25);
  EXPECT_TRUE(snap.clutch);
  s.apply(ResetCmd{77});
  snap = s.snapshot();
  EXPECT_FALSE(snap.clutch);
  EXPECT_EQ(snap.mode, ControlMode::AdaptiveCoop);
  EXPECT_EQ(s.command_log().size(), 4U);
  EXPECT_EQ(s.command_log()[0].tick, 0U);
}

TEST(Session, CooperativeModeUsesAdmittanceInverse) {
  SimConfig cfg = live_config();
  cfg.trial.mode = ControlMode::Coop;
  cfg.trial.initial_depth = -5.0;
  LiveSession s(cfg);
  s.apply(StartTrialCmd{});
  const Vec3 tip0 = s.snapshot().tip;
  s.apply(push(1.0));
  for (int k = 0; k < 50; ++k) {
    s.tick();
  }
  // No scaling in cooperative modes: the hand wrench reproduces v exactly.
  EXPECT_NEAR(s.snapshot().tip.x() - tip0.x(), 0.05, 1e-9);
}

TEST(Session, ClutchStopsTeleopMotion) {
  LiveSession s(live_config());
  s.apply(StartTrialCmd{});
  const Vec3 tip0 = s.snapshot().tip;
  s.apply(ClutchCmd{true});
  s.apply(push(3.0));
  for (int k = 0; k < 50; ++k) {
    s.tick();
  }
  EXPECT_EQ(s.snapshot().tip, tip0);
}

TEST(Session, TimelineReproducesManualSession) {
  const SimConfig cfg = live_config();
  LiveSession s(cfg);
  std::vector<TrialRecord> manual;
  auto drain = [&] {
    for (TrialRecord& r : s.take_finished()) {
      manual.push_back(std::move(r));
    }
  };
  for (int k = 0; k < 10; ++k) {
    s.tick();
  }
  s.apply(StartTrialCmd{});
  for (int k = 0; k < 2100; ++k) {
    if (k % 40 == 0) {
      s.apply(push(std::sin(k * 0.01) * 4.0));
    }
    if (k == 500) {
      s.apply(SetModeCmd{ControlMode::AdaptiveTeleop});
    }
    s.tick();
    drain();
  }
  s.apply(ResetCmd{5});
  s.apply(StartTrialCmd{});
  while (s.trial_running()) {
    s.tick();
  }
  drain();
  ASSERT_EQ(manual.size(), 2U);

  const std::vector<TrialRecord> replay = run_command_timeline(cfg, s.command_log());
  ASSERT_EQ(replay.size(), manual.size());
  for (std::size_t i = 0; i < manual.size(); ++i) {
    EXPECT_EQ(csv_string(replay[i]), csv_string(manual[i]));
  }
  EXPECT_EQ(replay[1].seed, 5U);
}

TEST(Session, TimelineRespectsMaxTicks) {
  const std::vector<TimedCommand> tl = {{0, StartTrialCmd{}}};
  SimConfig cfg = live_config();
  cfg.trial.max_duration = 100.0;
  const auto out = run_command_timeline(cfg, tl, 100);
  EXPECT_TRUE(out.empty());
}

TEST(Session, ResetAbandonsRunningTrial) {
  LiveSession s(live_config());
  s.apply(StartTrialCmd{});
  for (int k = 0; k < 10; ++k) {
    s.tick();
  }
  s.apply(ResetCmd{3});
  EXPECT_FALSE(s.trial_running());
  EXPECT_TRUE(s.take_finished().empty());
}
