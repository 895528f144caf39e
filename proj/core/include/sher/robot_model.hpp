#pragma once

#include <array>
#include <cstddef>

#include "sher/se3.hpp"

namespace sher {

inline constexpr std::size_t kNumJoints = 5;

using JointVector = Eigen::Matrix<double, 5, 1>;
using Jacobian = Eigen::Matrix<double, 6, 5>;
using PseudoInverse = Eigen::Matrix<double, 5, 6>;

struct JointLimit {
  double min = 0.0;
  double max = 0.0;
};

/// Kinematic description of the 5-DoF steady-hand eye robot.
///
/// Joints 1-3 are prismatic, joints 4-5 revolute, with no roll about the tool
/// axis. The tool points along -Z of the body frame {B}; the tip frame {T}
/// has the orientation of {B} and sits `tip_offset` mm along -Z_B.
struct RobotDescription {
  std::array<Twist, kNumJoints> screws{};
  RigidTransform home;
  double tip_offset = 40.0;
  std::array<JointLimit, kNumJoints> joint_limits{};
  std::array<double, kNumJoints> joint_rate_limits{};

  // Stand-in screw assignment: prismatic X, Y, Z; revolute about spatial X
  // then Y, both through (0, 0, 300) mm; home R = I, p = (0, 0, 300).
  static RobotDescription sher_default();

  // Throws ConfigError if the structural invariants do not hold.
  void validate() const;

  [[nodiscard]] bool within_limits(const JointVector& q) const;
};

struct RobotState {
  JointVector q = JointVector::Zero();
  JointVector qdot = JointVector::Zero();
};

// Throws DomainError naming the first joint outside its position limits.
void check_joint_limits(const RobotDescription& desc, const JointVector& q);

// g_SB(q) = exp(xi_1 q_1) ... exp(xi_5 q_5) g_SB(0).
[[nodiscard]] RigidTransform forward_kinematics(const RobotDescription& desc, const JointVector& q);

// g_ST = g_SB * translate(0, 0, -tip_offset).
[[nodiscard]] RigidTransform tip_pose(const RobotDescription& desc, const JointVector& q);

// Body Jacobian: column i is Ad^{-1}(exp(xi_i q_i) ... exp(xi_5 q_5) g_SB(0)) xi_i,
// so that the body velocity of {B} is J * qdot.
[[nodiscard]] Jacobian body_jacobian(const RobotDescription& desc, const JointVector& q);

inline constexpr double kDefaultDamping = 1e-6;

// Damped least-squares inverse (J^T J + lambda^2 I)^{-1} J^T, evaluated through
// the SVD. lambda = 0 gives the Moore-Penrose inverse (zero singular values
// are dropped). The spectral norm never exceeds 1 / (2 lambda).
[[nodiscard]] PseudoInverse pseudo_inverse(const Jacobian& j, double damping = kDefaultDamping);

}  // namespace sher
