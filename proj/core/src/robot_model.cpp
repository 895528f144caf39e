#include "sher/robot_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

#include "sher/errors.hpp"

namespace sher {

RobotDescription RobotDescription::sher_default() {
  const Vec3 pivot(0.0, 0.0, 300.0);
  RobotDescription d;
  d.screws = {Twist::prismatic(Vec3::UnitX()), Twist::prismatic(Vec3::UnitY()),
              Twist::prismatic(Vec3::UnitZ()), Twist::revolute(Vec3::UnitX(), pivot),
              Twist::revolute(Vec3::UnitY(), pivot)};
  d.home = RigidTransform::translation(pivot);
  d.tip_offset = 40.0;
  const double rot = 60.0 * std::numbers::pi / 180.0;
  d.joint_limits = {JointLimit{-100.0, 100.0}, JointLimit{-100.0, 100.0},
                    JointLimit{-100.0, 100.0}, JointLimit{-rot, rot}, JointLimit{-rot, rot}};
  d.joint_rate_limits = {50.0, 50.0, 50.0, 1.0, 1.0};
  return d;
}

void RobotDescription::validate() const {
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const Twist& s = screws[i];
    const bool prismatic = i < 3;
    std::ostringstream who;
    who << "joint " << (i + 1) << ": ";
    if (prismatic) {
      if (!s.w.isZero(0.0) || std::abs(s.v.norm() - 1.0) > 1e-9) {
        throw ConfigError(who.str() + "prismatic screw needs w = 0 and |v| = 1");
      }
    } else {
      if (std::abs(s.w.norm() - 1.0) > 1e-9) {
        throw ConfigError(who.str() + "revolute screw needs |w| = 1");
      }
      // The tool axis at home is -Z of the home orientation.
      const Vec3 tool_axis = home.R().col(2);
      if (std::abs(std::abs(s.w.dot(tool_axis)) - 1.0) < 1e-9) {
        throw ConfigError(who.str() + "revolute screw may not roll about the tool axis");
      }
    }
    if (!(joint_limits[i].min <= joint_limits[i].max)) {
      throw ConfigError(who.str() + "joint limit min exceeds max");
    }
    if (!(joint_rate_limits[i] > 0.0)) {
      throw ConfigError(who.str() + "rate limit must be positive");
    }
  }
  if (home.orthonormality_residual() > 1e-9) {
    throw ConfigError("home rotation is not orthonormal");
  }
  if (!(tip_offset >= 0.0)) {
    throw ConfigError("tip_offset must be non-negative");
  }
}

bool RobotDescription::within_limits(const JointVector& q) const {
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const double v = q(static_cast<Eigen::Index>(i));
    if (!(v >= joint_limits[i].min && v <= joint_limits[i].max)) {
      return false;
    }
  }
  return true;
}

void check_joint_limits(const RobotDescription& desc, const JointVector& q) {
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const double v = q(static_cast<Eigen::Index>(i));
    const JointLimit& lim = desc.joint_limits[i];
    if (!(v >= lim.min && v <= lim.max)) {
      std::ostringstream msg;
      msg << "joint " << (i + 1) << " position " << v << " outside [" << lim.min << ", " << lim.max
          << "]";
      throw DomainError(msg.str());
    }
  }
}

RigidTransform forward_kinematics(const RobotDescription& desc, const JointVector& q) {
  check_joint_limits(desc, q);
  RigidTransform g;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    g = g * exp_twist(desc.screws[i], q(static_cast<Eigen::Index>(i)));
  }
  return g * desc.home;
}

RigidTransform tip_pose(const RobotDescription& desc, const JointVector& q) {
  return forward_kinematics(desc, q) * RigidTransform::translation(Vec3(0.0, 0.0, -desc.tip_offset));
}

Jacobian body_jacobian(const RobotDescription& desc, const JointVector& q) {
  check_joint_limits(desc, q);
  Jacobian j;
  // Accumulate the tail products exp(xi_i q_i) ... exp(xi_5 q_5) g_SB(0) from the end.
  RigidTransform tail = desc.home;
  for (std::size_t k = kNumJoints; k-- > 0;) {
    const auto idx = static_cast<Eigen::Index>(k);
    tail = exp_twist(desc.screws[k], q(idx)) * tail;
    j.col(idx) = adjoint_inverse(tail) * desc.screws[k].coordinates();
  }
  return j;
}

PseudoInverse pseudo_inverse(const Jacobian& j, double damping) {
  Eigen::JacobiSVD<Jacobian> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double lambda2 = damping * damping;
  const double cutoff = s.size() > 0 ? s(0) * 1e-14 : 0.0;
  Eigen::Matrix<double, 5, 1> inv_s;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (lambda2 > 0.0) {
      inv_s(i) = s(i) / (s(i) * s(i) + lambda2);
    } else {
      inv_s(i) = s(i) > cutoff ? 1.0 / s(i) : 0.0;
    }
  }
  // V diag(inv_s) U_thin^T
  return svd.matrixV() * inv_s.asDiagonal() * svd.matrixU().leftCols<5>().transpose();
}

}  // namespace sher
