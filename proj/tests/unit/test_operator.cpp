#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "sher/config.hpp"
#include "sher/operator.hpp"
#include "sher/sim.hpp"

using namespace sher;

namespace {

// |H(e^{jw})| of a filter measured by driving it with a long sinusoid.
double sine_gain(Biquad f, double hz, double fs) {
  double peak = 0.0;
  const int n = static_cast<int>(4 * fs);
  for (int k = 0; k < n; ++k) {
    const double y = f.process(std::sin(2 * std::numbers::pi * hz * k / fs));
    if (k > n / 2) {
      peak = std::max(peak, std::abs(y));
    }
  }
  return peak;
}

}  // namespace

TEST(Operator, ButterworthCornerGains) {
  const double fs = 1000.0;
  EXPECT_NEAR(sine_gain(Biquad::lowpass(12, fs), 12, fs), std::numbers::sqrt2 / 2, 2e-3);
  EXPECT_NEAR(sine_gain(Biquad::highpass(8, fs), 8, fs), std::numbers::sqrt2 / 2, 2e-3);
  EXPECT_NEAR(sine_gain(Biquad::lowpass(12, fs), 0.5, fs), 1.0, 1e-3);
  EXPECT_LT(sine_gain(Biquad::highpass(8, fs), 0.5, fs), 5e-3);
  EXPECT_LT(sine_gain(Biquad::lowpass(12, fs), 120, fs), 0.011);
}

TEST(Operator, TremorRmsAndBand) {
  const double dt = 1e-3;
  TremorGenerator gen(0.182, 8.0, 12.0, dt, 77);
  const int segment = 4000;
  const int segments = 50;
  std::array<double, 3> sq{};
  // Segment-averaged periodogram power at a few probe frequencies.
  const std::array<double, 3> probe_hz = {1.0, 10.0, 50.0};
  std::array<double, 3> power{};
  for (int s = 0; s < segments; ++s) {
    std::array<std::complex<double>, 3> bin{};
    for (int k = 0; k < segment; ++k) {
      (void)gen.step();
      const Vec3& x = gen.displacement();
      for (std::size_t a = 0; a < 3; ++a) {
        sq[a] += x(static_cast<Eigen::Index>(a)) * x(static_cast<Eigen::Index>(a));
      }
      for (std::size_t f = 0; f < 3; ++f) {
        bin[f] += x.x() * std::polar(1.0, -2 * std::numbers::pi * probe_hz[f] * k * dt);
      }
    }
    for (std::size_t f = 0; f < 3; ++f) {
      power[f] += std::norm(bin[f]) / segments;
    }
  }
  for (double s : sq) {
    EXPECT_NEAR(std::sqrt(s / (segment * segments)), 0.182, 0.182 * 0.05);
  }
  EXPECT_GT(power[1], 100.0 * power[0]);
  EXPECT_GT(power[1], 50.0 * power[2]);
}

TEST(Operator, TremorVelocityIntegratesToDisplacement) {
  TremorGenerator gen(0.182, 8.0, 12.0, 1e-3, 5);
  Vec3 x = Vec3::Zero();
  for (int k = 0; k < 5000; ++k) {
    x += gen.step() * 1e-3;
  }
  EXPECT_LT((x - gen.displacement()).norm(), 1e-12);
}

TEST(Operator, ZeroRmsTremorIsSilent) {
  TremorGenerator gen(0.0, 8.0, 12.0, 1e-3, 5);
  for (int k = 0; k < 100; ++k) {
    EXPECT_EQ(gen.step(), Vec3::Zero());
  }
}

TEST(Operator, DriftIsPiecewiseConstantInRange) {
  OperatorParams p;
  DriftSchedule drift(p, 42);
  Eigen::Vector2d last = drift.at(0.0);
  double segment_start = 0.0;
  int changes = 0;
  for (int k = 1; k <= 120000; ++k) {
    const double t = k * 1e-3;
    const Eigen::Vector2d b = drift.at(t);
    EXPECT_GE(b.norm(), p.drift_min - 1e-12);
    EXPECT_LE(b.norm(), p.drift_max + 1e-12);
    if (b != last) {
      const double len = t - segment_start;
      EXPECT_GE(len, p.drift_segment_min - 2e-3);
      EXPECT_LE(len, p.drift_segment_max + 2e-3);
      segment_start = t;
      ++changes;
      last = b;
    }
  }
  EXPECT_GE(changes, 120 / 6 - 1);
  EXPECT_LE(changes, 120 / 3);
}

TEST(Operator, PivotServoAtTargetOnlyRecentres) {
  OperatorParams p;
  const RigidTransform pose = RigidTransform::translation(Vec3(0, 0, 300));
  const Vec3 tip(0, 0, 250);
  const Vec3 port(0, 0, 256);
  const PivotCommand c = pivot_servo(p, pose, tip, port, tip);
  EXPECT_NEAR(c.lever, 6.0, 1e-12);
  EXPECT_LT(c.body_velocity.norm(), 1e-12);
}

TEST(Operator, PivotServoLateralMotionRotatesAboutPort) {
  OperatorParams p;
  p.rcm_awareness = 0.0;
  const RigidTransform pose = RigidTransform::translation(Vec3(0, 0, 300));
  const Vec3 tip(0, 0, 250);
  const Vec3 port(0, 0, 256);
  const PivotCommand c = pivot_servo(p, pose, tip, port, tip + Vec3(1, 0, 0));
  // Tip speed capped at tip_gain * 1 mm = 2 mm/s; pivot at the port, so the
  // tip velocity equals omega x (tip - port).
  const Vec3 w = c.body_velocity.tail<3>();
  const Vec3 v_handle = c.body_velocity.head<3>();
  const Vec3 v_tip = v_handle + w.cross(tip - pose.p());
  EXPECT_LT((v_tip - Vec3(2, 0, 0)).norm(), 1e-12);
  const Vec3 v_port = v_handle + w.cross(port - pose.p());
  EXPECT_LT(v_port.norm(), 1e-12);
}

TEST(Operator, PivotServoCapsTipSpeed) {
  OperatorParams p;
  const RigidTransform pose = RigidTransform::translation(Vec3(0, 0, 300));
  const Vec3 tip(0, 0, 250);
  const PivotCommand c = pivot_servo(p, pose, tip, Vec3(0, 0, 256), tip + Vec3(0, 100, 0));
  const Vec3 v_tip = c.body_velocity.head<3>() + c.body_velocity.tail<3>().cross(tip - pose.p());
  EXPECT_NEAR(v_tip.norm(), p.velocity_cap, 1e-9);
}

TEST(Operator, ShallowToolTranslates) {
  OperatorParams p;
  const RigidTransform pose = RigidTransform::translation(Vec3(0, 0, 300));
  const Vec3 tip(0, 0, 257);  // still outside the port
  const PivotCommand c = pivot_servo(p, pose, tip, Vec3(0, 0, 256), tip + Vec3(0, 0, -1));
  EXPECT_LT(c.lever, p.min_lever);
  EXPECT_EQ(c.body_velocity.tail<3>(), Vec3::Zero());
  EXPECT_NEAR(c.body_velocity(2), -2.0, 1e-12);
}

TEST(Operator, ScriptedOperatorIsSeedDeterministic) {
  for (ControlMode m : kAllModes) {
    SimConfig cfg = default_config();
    cfg.trial.mode = m;
    Simulation a(cfg);
    Simulation b(cfg);
    ScriptedOperator oa(cfg, 9);
    ScriptedOperator ob(cfg, 9);
    for (int k = 0; k < 500; ++k) {
      const OperatorCommand ca = oa.emit(a);
      const OperatorCommand cb = ob.emit(b);
      ASSERT_EQ(ca.hand_wrench, cb.hand_wrench);
      ASSERT_EQ(ca.master_velocity, cb.master_velocity);
      ASSERT_EQ(ca.clutch, cb.clutch);
      a.step(ca);
      b.step(cb);
    }
    if (is_teleop(m)) {
      EXPECT_EQ(oa.master_position(), ob.master_position());
    }
  }
}

TEST(Operator, CooperativeCommandIsAdmittanceInverse) {
  SimConfig cfg = default_config();
  cfg.trial.mode = ControlMode::Coop;
  cfg.operator_model.tremor_rms = 0.0;
  Simulation sim(cfg);
  ScriptedOperator op(cfg, 3);
  const OperatorCommand c = op.emit(sim);
  EXPECT_EQ(c.master_velocity, Vec6::Zero());
  const Vec6 v = cooperative_velocity(cfg.admittance, c.hand_wrench);
  // With tremor off the commanded velocity is the servo plus drift: lateral
  // drift bias lies in [drift_min, drift_max].
  EXPECT_GT(v.norm(), 0.0);
  EXPECT_LT(v.norm(), 10.0);
}

TEST(Operator, TeleopMasterClutchesAtWorkspaceEdge) {
  SimConfig cfg = default_config();
  cfg.trial.mode = ControlMode::Teleop;
  cfg.operator_model.master_workspace = 2.0;
  Simulation sim(cfg);
  ScriptedOperator op(cfg, 3);
  bool clutched = false;
  for (int k = 0; k < 5000 && !clutched; ++k) {
    const OperatorCommand c = op.emit(sim);
    clutched = c.clutch;
    EXPECT_LE(op.master_position().norm(), 2.0 + 1e-9);
    sim.step(c);
  }
  EXPECT_TRUE(clutched);
}
