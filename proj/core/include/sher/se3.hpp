#pragma once

// SE(3) numerics: twists, the exponential map, adjoints and wrench transforms.
//
// Conventions used throughout the library:
//   * twists and velocities are ordered (v, w): linear part first;
//   * wrenches are ordered (f, tau): force first;
//   * units are mm, rad, s, mN and mN*mm.

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sher {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat4 = Eigen::Matrix4d;

struct Twist {
  Vec3 v = Vec3::Zero();
  Vec3 w = Vec3::Zero();

  static Twist prismatic(const Vec3& direction);
  // Revolute screw about unit axis `axis` through the point `point`.
  static Twist revolute(const Vec3& axis, const Vec3& point);
  static Twist from_coordinates(const Vec6& xi);

  [[nodiscard]] Vec6 coordinates() const;
  [[nodiscard]] bool is_prismatic() const { return w.isZero(0.0); }
};

class RigidTransform {
 public:
  RigidTransform() = default;
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform translation(const Vec3& p) { return {Mat3::Identity(), p}; }
  static RigidTransform rotation(const Mat3& r) { return {r, Vec3::Zero()}; }
  static RigidTransform from_matrix(const Mat4& m);

  [[nodiscard]] const Mat3& R() const { return rotation_; }
  [[nodiscard]] const Vec3& p() const { return translation_; }

  [[nodiscard]] RigidTransform inverse() const;
  [[nodiscard]] Vec3 apply(const Vec3& point) const { return rotation_ * point + translation_; }
  [[nodiscard]] Mat4 matrix() const;

  // max |R^T R - I|, used to decide when to re-project the rotation.
  [[nodiscard]] double orthonormality_residual() const;

  // Re-project R onto SO(3) when the residual exceeds `tolerance`.
  [[nodiscard]] RigidTransform orthonormalized(double tolerance = 1e-8) const;

  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

 private:
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

// Skew-symmetric matrix with hat(x) * y == x.cross(y).
[[nodiscard]] Mat3 hat(const Vec3& x);

// Inverse of hat. Throws ContractError unless `m` is skew-symmetric within 1e-9.
[[nodiscard]] Vec3 vee(const Mat3& m);

// 4x4 twist matrix [hat(w) v; 0 0].
[[nodiscard]] Mat4 hat(const Twist& xi);

[[nodiscard]] Mat3 exp_so3(const Vec3& w, double theta);

// exp(hat(xi) * theta). Total for any twist; the rotation angle |w| theta
// below 1e-7 uses the second-order Taylor expansion.
[[nodiscard]] RigidTransform exp_twist(const Twist& xi, double theta);

// Ad_g = [R, hat(p) R; 0, R].
[[nodiscard]] Mat6 adjoint(const RigidTransform& g);

// Ad_g^{-1} computed in closed form (equals adjoint(g.inverse())).
[[nodiscard]] Mat6 adjoint_inverse(const RigidTransform& g);

// Re-express wrench `w` (f, tau), given in a source frame, in a destination
// frame. `g` is the pose of the source frame in the destination frame, i.e.
// it maps source coordinates to destination coordinates.
[[nodiscard]] Vec6 transform_wrench(const RigidTransform& g, const Vec6& w);

// Polar projection of an arbitrary 3x3 matrix onto SO(3).
[[nodiscard]] Mat3 project_to_so3(const Mat3& m);

}  // namespace sher
