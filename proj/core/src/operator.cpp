#include "sher/operator.hpp"

#include <cmath>
#include <numbers>

#include "sher/rng.hpp"
#include "sher/sim.hpp"

namespace sher {

namespace {

constexpr double kButterworthQ = std::numbers::sqrt2 / 2.0;

}  // namespace

Biquad Biquad::lowpass(double cutoff_hz, double sample_hz) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / sample_hz;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * kButterworthQ);
  const double a0 = 1.0 + alpha;
  Biquad f;
  f.b0_ = (1.0 - c) / 2.0 / a0;
  f.b1_ = (1.0 - c) / a0;
  f.b2_ = f.b0_;
  f.a1_ = -2.0 * c / a0;
  f.a2_ = (1.0 - alpha) / a0;
  return f;
}

Biquad Biquad::highpass(double cutoff_hz, double sample_hz) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / sample_hz;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * kButterworthQ);
  const double a0 = 1.0 + alpha;
  Biquad f;
  f.b0_ = (1.0 + c) / 2.0 / a0;
  f.b1_ = -(1.0 + c) / a0;
  f.b2_ = f.b0_;
  f.a1_ = -2.0 * c / a0;
  f.a2_ = (1.0 - alpha) / a0;
  return f;
}

double Biquad::process(double x) {
  const double y = b0_ * x + b1_ * x1_ + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
  x2_ = x1_;
  x1_ = x;
  y2_ = y1_;
  y1_ = y;
  return y;
}

TremorGenerator::TremorGenerator(double rms, double low_hz, double high_hz, double dt,
                                 std::uint64_t seed)
    : rng_(seed), dt_(dt) {
  const double fs = 1.0 / dt;
  for (std::size_t i = 0; i < 3; ++i) {
    high_[i] = Biquad::highpass(low_hz, fs);
    low_[i] = Biquad::lowpass(high_hz, fs);
  }
  // Output variance for unit white input is the energy of the impulse response.
  Biquad hp = Biquad::highpass(low_hz, fs);
  Biquad lp = Biquad::lowpass(high_hz, fs);
  double energy = 0.0;
  const auto n = static_cast<long>(20.0 * fs);
  for (long k = 0; k < n; ++k) {
    const double h = lp.process(hp.process(k == 0 ? 1.0 : 0.0));
    energy += h * h;
  }
  input_sigma_ = energy > 0.0 ? rms / std::sqrt(energy) : 0.0;
}

Vec3 TremorGenerator::step() {
  Vec3 next;
  for (std::size_t i = 0; i < 3; ++i) {
    const double w = input_sigma_ * white_(rng_);
    next(static_cast<Eigen::Index>(i)) = low_[i].process(high_[i].process(w));
  }
  const Vec3 velocity = (next - position_) / dt_;
  position_ = next;
  return velocity;
}

DriftSchedule::DriftSchedule(const OperatorParams& params, std::uint64_t seed)
    : params_(params), rng_(seed) {
  next_segment();
}

void DriftSchedule::next_segment() {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double length = params_.drift_segment_min +
                        (params_.drift_segment_max - params_.drift_segment_min) * unit(rng_);
  const double magnitude = params_.drift_min + (params_.drift_max - params_.drift_min) * unit(rng_);
  const double heading = 2.0 * std::numbers::pi * unit(rng_);
  segment_end_ += length;
  bias_ = magnitude * Eigen::Vector2d(std::cos(heading), std::sin(heading));
}

Eigen::Vector2d DriftSchedule::at(double t) {
  while (t >= segment_end_) {
    next_segment();
  }
  return bias_;
}

PivotCommand pivot_servo(const OperatorParams& params, const RigidTransform& pose, const Vec3& tip,
                         const Vec3& port, const Vec3& target) {
  const Vec3& handle = pose.p();
  const Vec3 u = (tip - handle).normalized();

  Vec3 v_tip = params.tip_gain * (target - tip);
  const double speed = v_tip.norm();
  if (speed > params.velocity_cap) {
    v_tip *= params.velocity_cap / speed;
  }

  const Vec3 pivot = handle + (port - handle).dot(u) * u;
  PivotCommand out;
  out.lever = (tip - pivot).dot(u);

  Vec3 v_handle;
  Vec3 omega = Vec3::Zero();
  if (out.lever > params.min_lever) {
    const Vec3 v_axial = v_tip.dot(u) * u;
    const Vec3 v_lateral = v_tip - v_axial;
    omega = u.cross(v_lateral) / out.lever;
    v_handle = v_axial + omega.cross(handle - pivot);
    v_handle -= params.rcm_awareness * (pivot - port);
  } else {
    v_handle = v_tip;
  }
  const Mat3 rt = pose.R().transpose();
  out.body_velocity << rt * v_handle, rt * omega;
  return out;
}

ScriptedOperator::ScriptedOperator(const SimConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      tremor_(cfg.operator_model.tremor_rms, cfg.operator_model.tremor_low_hz,
              cfg.operator_model.tremor_high_hz, cfg.trial.dt, stream_seed(seed, RngStream::Tremor)),
      drift_(cfg.operator_model, stream_seed(seed, RngStream::Drift)) {}

OperatorCommand ScriptedOperator::emit(const Simulation& sim) {
  const double dt = cfg_.trial.dt;
  const Vec3 tremor_velocity = tremor_.step();
  const Eigen::Vector2d bias = drift_.at(sim.time());

  Vec6 desired = Vec6::Zero();
  if (const Vec3* waypoint = sim.target()) {
    const Vec3 inward = (sim.phantom().center - *waypoint).normalized();
    const Vec3 target = *waypoint + cfg_.operator_model.hover * inward;
    desired = pivot_servo(cfg_.operator_model, sim.pose(), sim.tip(), sim.phantom().entry_point,
                          target)
                  .body_velocity;
  }
  desired(0) += bias.x();
  desired(1) += bias.y();

  OperatorCommand cmd;
  if (!is_teleop(sim.mode())) {
    Vec6 hand_velocity = desired;
    hand_velocity.head<3>() += tremor_velocity;
    const Vec6& k = cfg_.admittance.diagonal;
    for (Eigen::Index i = 0; i < 6; ++i) {
      cmd.hand_wrench(i) = k(i) > 0.0 ? hand_velocity(i) / k(i) : 0.0;
    }
    return cmd;
  }

  const TeleopMapping& map = cfg_.teleop;
  const Mat3 body_to_master = map.master_to_body.transpose();
  if (reposition_ticks_left_ > 0) {
    --reposition_ticks_left_;
    cmd.clutch = true;
    cmd.master_velocity.head<3>() = reposition_velocity_;
  } else {
    cmd.master_velocity.head<3>() = body_to_master * (desired.head<3>() / map.scale) + tremor_velocity;
    cmd.master_velocity.tail<3>() = body_to_master * desired.tail<3>();
    const Vec3 next = master_position_ + cmd.master_velocity.head<3>() * dt;
    if (next.norm() > cfg_.operator_model.master_workspace) {
      reposition_ticks_left_ =
          std::max(1, static_cast<int>(std::lround(cfg_.operator_model.reposition_time / dt))) - 1;
      reposition_velocity_ = -master_position_ / cfg_.operator_model.reposition_time;
      cmd = OperatorCommand{};
      cmd.clutch = true;
      cmd.master_velocity.head<3>() = reposition_velocity_;
    }
  }
  master_position_ += cmd.master_velocity.head<3>() * dt;
  return cmd;
}

}  // namespace sher
