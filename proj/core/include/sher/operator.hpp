#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "sher/config.hpp"
#include "sher/se3.hpp"

namespace sher {

class Simulation;

// What an operator hands to the controller on one tick. Cooperative modes
// read `hand_wrench`; teleoperation modes read `master_velocity` and `clutch`.
struct OperatorCommand {
  Vec6 hand_wrench = Vec6::Zero();      // {B}, (mN, mN*mm)
  Vec6 master_velocity = Vec6::Zero();  // master frame, (mm/s, rad/s)
  bool clutch = false;
};

// Direct-form-I biquad.
class Biquad {
 public:
  static Biquad lowpass(double cutoff_hz, double sample_hz);
  static Biquad highpass(double cutoff_hz, double sample_hz);

  double process(double x);
  void reset() { x1_ = x2_ = y1_ = y2_ = 0.0; }

 private:
  double b0_ = 1.0, b1_ = 0.0, b2_ = 0.0, a1_ = 0.0, a2_ = 0.0;
  double x1_ = 0.0, x2_ = 0.0, y1_ = 0.0, y2_ = 0.0;
};

/// Physiological tremor: white noise through a fourth-order 8-12 Hz band-pass
/// (2nd-order Butterworth high-pass and low-pass in cascade), scaled so the
/// displacement has the requested RMS per axis.
class TremorGenerator {
 public:
  TremorGenerator(double rms, double low_hz, double high_hz, double dt, std::uint64_t seed);

  // Advance one tick; returns the tremor velocity (mm/s) on three axes.
  Vec3 step();
  [[nodiscard]] const Vec3& displacement() const { return position_; }
  [[nodiscard]] double input_sigma() const { return input_sigma_; }

 private:
  std::array<Biquad, 3> high_{};
  std::array<Biquad, 3> low_{};
  std::mt19937_64 rng_;
  std::normal_distribution<double> white_{0.0, 1.0};
  double input_sigma_ = 0.0;
  double dt_;
  Vec3 position_ = Vec3::Zero();
};

// Piecewise-constant lateral velocity bias in the body x-y plane.
class DriftSchedule {
 public:
  DriftSchedule(const OperatorParams& params, std::uint64_t seed);
  // Bias (mm/s) at time t; t must be non-decreasing between calls.
  Eigen::Vector2d at(double t);

 private:
  void next_segment();

  OperatorParams params_;
  std::mt19937_64 rng_;
  double segment_end_ = 0.0;
  Eigen::Vector2d bias_ = Eigen::Vector2d::Zero();
};

// Desired body twist of a surgeon who servos the tip toward `target` while
// pivoting about the perceived port. Exposed for tests.
struct PivotCommand {
  Vec6 body_velocity = Vec6::Zero();
  double lever = 0.0;  // mm from the port projection to the tip
};
[[nodiscard]] PivotCommand pivot_servo(const OperatorParams& params, const RigidTransform& pose,
                                       const Vec3& tip, const Vec3& port, const Vec3& target);

/// Scripted operator for the offline protocol. Cooperative modes receive a
/// hand wrench (K^{-1} applied to the desired velocity plus tremor), teleop
/// modes a master velocity that undoes the motion scaling, with tremor at the
/// master and clutched re-centring when the master leaves its workspace.
class ScriptedOperator {
 public:
  ScriptedOperator(const SimConfig& cfg, std::uint64_t seed);

  OperatorCommand emit(const Simulation& sim);

  [[nodiscard]] const Vec3& master_position() const { return master_position_; }

 private:
  SimConfig cfg_;
  TremorGenerator tremor_;
  DriftSchedule drift_;
  Vec3 master_position_ = Vec3::Zero();
  int reposition_ticks_left_ = 0;
  Vec3 reposition_velocity_ = Vec3::Zero();
};

}  // namespace sher
