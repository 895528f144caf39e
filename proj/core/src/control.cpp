#include "sher/control.hpp"

#include <cmath>
#include <string>

#include "sher/errors.hpp"

namespace sher {

std::string_view mode_name(ControlMode m) {
  switch (m) {
    case ControlMode::Coop:
      return "coop";
    case ControlMode::AdaptiveCoop:
      return "adaptive-coop";
    case ControlMode::Teleop:
      return "teleop";
    case ControlMode::AdaptiveTeleop:
      return "adaptive-teleop";
  }
  return "?";
}

ControlMode parse_mode(std::string_view s) {
  std::string norm(s);
  for (char& c : norm) {
    if (c == '_') {
      c = '-';
    }
  }
  for (ControlMode m : kAllModes) {
    if (norm == mode_name(m)) {
      return m;
    }
  }
  throw ConfigError("unknown mode '" + std::string(s) +
                    "' (expected coop, adaptive-coop, teleop or adaptive-teleop)");
}

void AdmittanceGains::validate() const {
  if ((diagonal.array() < 0.0).any() || !diagonal.allFinite()) {
    throw ConfigError("admittance gains must be finite and non-negative");
  }
}

Vec6 cooperative_velocity(const AdmittanceGains& gains, const Vec6& hand_wrench) {
  return gains.diagonal.cwiseProduct(hand_wrench);
}

void TeleopMapping::validate() const {
  if (!(scale > 0.0 && scale <= 1.0)) {
    throw ConfigError("teleop scale must lie in (0, 1]");
  }
  if ((master_to_body.transpose() * master_to_body - Mat3::Identity()).cwiseAbs().maxCoeff() >
          1e-9 ||
      master_to_body.determinant() < 0.0) {
    throw ConfigError("master_to_body must be a rotation");
  }
}

Vec6 teleop_velocity(const TeleopMapping& map, const Vec6& master_velocity) {
  if (map.clutch) {
    return Vec6::Zero();
  }
  Vec6 out;
  out.head<3>() = map.scale * (map.master_to_body * master_velocity.head<3>());
  out.tail<3>() = map.master_to_body * master_velocity.tail<3>();
  return out;
}

std::string_view exponent_name(ExponentForm f) {
  return f == ExponentForm::Decaying ? "decaying" : "printed";
}

ExponentForm parse_exponent(std::string_view s) {
  if (s == "decaying") {
    return ExponentForm::Decaying;
  }
  if (s == "printed") {
    return ExponentForm::Printed;
  }
  throw ConfigError("unknown adaptive exponent '" + std::string(s) +
                    "' (expected decaying or printed)");
}

void AdaptiveParams::validate() const {
  if (!(T_r > 0.0 && T_r < T_a)) {
    throw ConfigError("adaptive thresholds need 0 < T_r < T_a");
  }
  if (!(T_s > 0.0)) {
    throw ConfigError("T_s must be positive");
  }
  for (std::size_t i = 0; i < 2; ++i) {
    if (!(K_f[i] > 0.0) || !(Gamma[i] > 0.0)) {
      throw ConfigError("adaptive gains K_f and Gamma must be positive");
    }
  }
  if (!std::isfinite(alpha0)) {
    throw ConfigError("alpha0 must be finite");
  }
}

AdaptiveState AdaptiveState::initial(const AdaptiveParams& params) {
  AdaptiveState s;
  for (AxisState& a : s.axes) {
    a.alpha = params.alpha0;
  }
  return s;
}

ForceTrajectoryPoint desired_force_trajectory(const AdaptiveParams& params,
                                              const AxisState& axis_state, double t, Axis axis) {
  if (!axis_state.active) {
    throw ContractError(std::string("desired_force_trajectory: axis ") +
                        (axis == Axis::X ? "x" : "y") + " is not active");
  }
  const double elapsed = t - axis_state.t_activation;
  if (elapsed < 0.0) {
    throw ContractError("desired_force_trajectory: t precedes the activation time");
  }
  const double half = 0.5 * params.T_s * axis_state.sign;
  if (params.exponent == ExponentForm::Printed) {
    const double e = std::exp(elapsed);
    return {half * (e + 1.0), half * e};
  }
  const double e = std::exp(-elapsed);
  return {half * (e + 1.0), -half * e};
}

AdaptiveStep adaptive_velocity(const AdaptiveParams& params, const AxisState& axis_state,
                               double sclera_force, Axis axis, double dt) {
  if (!std::isfinite(sclera_force)) {
    throw SensorError("non-finite sclera force reading");
  }
  if (!(dt > 0.0)) {
    throw ContractError("adaptive_velocity: dt must be positive");
  }
  const auto i = static_cast<std::size_t>(axis);
  const double delta_f = sclera_force - axis_state.f_d;
  AdaptiveStep out;
  out.delta_f = delta_f;
  out.velocity = axis_state.alpha * axis_state.f_d_dot - params.K_f[i] * delta_f;
  out.alpha = axis_state.alpha - params.Gamma[i] * axis_state.f_d_dot * delta_f * dt;
  return out;
}

PolicyOutput control_policy(const AdaptiveParams& params, ControlMode mode, double t, double dt,
                            double F_sx, double F_sy, const Vec6& operator_velocity,
                            AdaptiveState& state) {
  PolicyOutput out;
  out.velocity = operator_velocity;
  if (!is_adaptive(mode)) {
    return out;
  }
  const std::array<double, 2> forces = {F_sx, F_sy};
  for (std::size_t i = 0; i < 2; ++i) {
    const double f = forces[i];
    if (!std::isfinite(f)) {
      throw SensorError("non-finite sclera force reading");
    }
    AxisState& ax = state.axes[i];
    if (!ax.active && std::abs(f) >= params.T_a) {
      ax.active = true;
      ax.t_activation = t;
      ax.sign = f >= 0.0 ? 1.0 : -1.0;
      out.activated[i] = true;
    } else if (ax.active && std::abs(f) < params.T_r) {
      ax.active = false;
      out.released[i] = true;
    }
    if (!ax.active) {
      ax.f_d = 0.0;
      ax.f_d_dot = 0.0;
      continue;
    }
    const Axis axis = static_cast<Axis>(i);
    const ForceTrajectoryPoint traj = desired_force_trajectory(params, ax, t, axis);
    ax.f_d = traj.f_d;
    ax.f_d_dot = traj.f_d_dot;
    const AdaptiveStep step = adaptive_velocity(params, ax, f, axis, dt);
    out.velocity(static_cast<Eigen::Index>(i)) = step.velocity;
    ax.alpha = step.alpha;
  }
  return out;
}

}  // namespace sher
