#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "sher/se3.hpp"

namespace sher {

enum class ControlMode : std::uint8_t { Coop, AdaptiveCoop, Teleop, AdaptiveTeleop };

inline constexpr std::array<ControlMode, 4> kAllModes = {
    ControlMode::Coop, ControlMode::AdaptiveCoop, ControlMode::Teleop, ControlMode::AdaptiveTeleop};

// "coop", "adaptive-coop", "teleop", "adaptive-teleop".
[[nodiscard]] std::string_view mode_name(ControlMode m);
// Accepts the names above; '_' is treated as '-'. Throws ConfigError otherwise.
[[nodiscard]] ControlMode parse_mode(std::string_view s);

[[nodiscard]] constexpr bool is_adaptive(ControlMode m) {
  return m == ControlMode::AdaptiveCoop || m == ControlMode::AdaptiveTeleop;
}
[[nodiscard]] constexpr bool is_teleop(ControlMode m) {
  return m == ControlMode::Teleop || m == ControlMode::AdaptiveTeleop;
}

// ---------------------------------------------------------------------------
// Cooperative (admittance) control

/// Diagonal admittance: rows 1-3 in (mm/s)/mN, rows 4-6 in (rad/s)/(mN*mm).
struct AdmittanceGains {
  Vec6 diagonal = (Vec6() << 0.005, 0.005, 0.005, 2e-5, 2e-5, 2e-5).finished();
  void validate() const;
};

// V_d^b = K F_h^b.
[[nodiscard]] Vec6 cooperative_velocity(const AdmittanceGains& gains, const Vec6& hand_wrench);

// ---------------------------------------------------------------------------
// Teleoperation

struct TeleopMapping {
  double scale = 0.5;
  bool clutch = false;
  Mat3 master_to_body = Mat3::Identity();
  void validate() const;
};

// Clutch engaged -> zero. Otherwise linear part scaled and re-registered,
// angular part re-registered only.
[[nodiscard]] Vec6 teleop_velocity(const TeleopMapping& map, const Vec6& master_velocity);

// ---------------------------------------------------------------------------
// Adaptive sclera force control

enum class ExponentForm : std::uint8_t {
  Decaying,  // e^{-(t - t_i)}: |f_d| decays from T_s to T_s / 2
  Printed,   // e^{+(t - t_i)}: kept for comparison only, diverges
};

[[nodiscard]] std::string_view exponent_name(ExponentForm f);
[[nodiscard]] ExponentForm parse_exponent(std::string_view s);

enum class Axis : std::uint8_t { X = 0, Y = 1 };

struct AdaptiveParams {
  double T_s = 120.0;  // mN, trajectory scale / safe threshold
  double T_a = 100.0;  // mN, per-axis activation
  double T_r = 60.0;   // mN, per-axis release
  std::array<double, 2> K_f = {0.05, 0.05};     // (mm/s)/mN
  std::array<double, 2> Gamma = {1e-6, 1e-6};   // adaptation gain
  double alpha0 = 0.005;                        // mm/mN
  ExponentForm exponent = ExponentForm::Decaying;

  void validate() const;
};

struct AxisState {
  bool active = false;
  double t_activation = 0.0;  // s
  double sign = 1.0;          // sign of F_si frozen at activation
  double alpha = 0.005;       // mm/mN
  double f_d = 0.0;           // mN
  double f_d_dot = 0.0;       // mN/s
};

struct AdaptiveState {
  std::array<AxisState, 2> axes{};

  static AdaptiveState initial(const AdaptiveParams& params);

  [[nodiscard]] AxisState& operator[](Axis a) { return axes[static_cast<std::size_t>(a)]; }
  [[nodiscard]] const AxisState& operator[](Axis a) const {
    return axes[static_cast<std::size_t>(a)];
  }
};

struct ForceTrajectoryPoint {
  double f_d = 0.0;
  double f_d_dot = 0.0;
};

// f_d = (T_s sign / 2)(e^{-(t - t_i)} + 1) and its time derivative (decaying
// form). Throws ContractError if the axis is inactive or t < t_i.
[[nodiscard]] ForceTrajectoryPoint desired_force_trajectory(const AdaptiveParams& params,
                                                            const AxisState& axis_state, double t,
                                                            Axis axis);

struct AdaptiveStep {
  double velocity = 0.0;  // mm/s along the body axis
  double alpha = 0.0;     // updated compliance estimate
  double delta_f = 0.0;
};

// Velocity alpha f_d_dot - K_f (F - f_d) using the current alpha, then one
// explicit Euler step of alpha_dot = -Gamma f_d_dot (F - f_d).
// `axis_state.f_d` / `f_d_dot` must already hold the trajectory at this tick.
[[nodiscard]] AdaptiveStep adaptive_velocity(const AdaptiveParams& params,
                                             const AxisState& axis_state, double sclera_force,
                                             Axis axis, double dt);

struct PolicyOutput {
  Vec6 velocity = Vec6::Zero();
  std::array<bool, 2> activated{};  // rising edges on this tick
  std::array<bool, 2> released{};
};

/// One tick of the high-level policy. In non-adaptive modes the operator
/// velocity is returned unchanged and `state` is untouched. In adaptive modes
/// each axis runs an activation/release hysteresis on |F_si| (>= T_a
/// activates, < T_r releases); active axes replace the linear x / y body
/// velocity with the adaptive law and everything else passes through.
[[nodiscard]] PolicyOutput control_policy(const AdaptiveParams& params, ControlMode mode,
                                          double t, double dt, double F_sx, double F_sy,
                                          const Vec6& operator_velocity, AdaptiveState& state);

}  // namespace sher
