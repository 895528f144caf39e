#include "sher/se3.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "sher/errors.hpp"

namespace sher {

namespace {

constexpr double kSmallAngle = 1e-7;
constexpr double kSkewTolerance = 1e-9;
constexpr double kOrthoTolerance = 1e-8;

}  // namespace

Twist Twist::prismatic(const Vec3& direction) {
  return Twist{direction.normalized(), Vec3::Zero()};
}

Twist Twist::revolute(const Vec3& axis, const Vec3& point) {
  const Vec3 w = axis.normalized();
  return Twist{-w.cross(point), w};
}

Twist Twist::from_coordinates(const Vec6& xi) {
  return Twist{xi.head<3>(), xi.tail<3>()};
}

Vec6 Twist::coordinates() const {
  Vec6 xi;
  xi << v, w;
  return xi;
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {}

RigidTransform RigidTransform::from_matrix(const Mat4& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

RigidTransform RigidTransform::inverse() const {
  const Mat3 rt = rotation_.transpose();
  return {rt, -rt * translation_};
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double RigidTransform::orthonormality_residual() const {
  return (rotation_.transpose() * rotation_ - Mat3::Identity()).cwiseAbs().maxCoeff();
}

RigidTransform RigidTransform::orthonormalized(double tolerance) const {
  if (orthonormality_residual() <= tolerance) {
    return *this;
  }
  return {project_to_so3(rotation_), translation_};
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out(a.rotation_ * b.rotation_, a.rotation_ * b.translation_ + a.translation_);
  return out.orthonormalized(kOrthoTolerance);
}

Mat3 hat(const Vec3& x) {
  Mat3 m;
  // clang-format off
  m <<  0.0,  -x.z(),  x.y(),
        x.z(),  0.0,  -x.x(),
       -x.y(),  x.x(),  0.0;
  // clang-format on
  return m;
}

Vec3 vee(const Mat3& m) {
  const double asym = (m + m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSkewTolerance) {
    throw ContractError("vee: matrix is not skew-symmetric (|M + M^T| = " + std::to_string(asym) +
                        ")");
  }
  return {m(2, 1), m(0, 2), m(1, 0)};
}

Mat4 hat(const Twist& xi) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = hat(xi.w);
  m.topRightCorner<3, 1>() = xi.v;
  return m;
}

Mat3 exp_so3(const Vec3& w, double theta) {
  const Vec3 phi_vec = w * theta;
  const double phi = phi_vec.norm();
  const Mat3 k = hat(phi_vec);
  double a = 0.0;
  double b = 0.0;
  if (phi < kSmallAngle) {
    const double phi2 = phi * phi;
    a = 1.0 - phi2 / 6.0;
    b = 0.5 - phi2 / 24.0;
  } else {
    a = std::sin(phi) / phi;
    b = (1.0 - std::cos(phi)) / (phi * phi);
  }
  return Mat3::Identity() + a * k + b * k * k;
}

RigidTransform exp_twist(const Twist& xi, double theta) {
  if (xi.w.isZero(0.0)) {
    return RigidTransform::translation(xi.v * theta);
  }
  const Vec3 phi_vec = xi.w * theta;
  const double phi = phi_vec.norm();
  const Mat3 k = hat(phi_vec);
  const Mat3 k2 = k * k;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  if (phi < kSmallAngle) {
    const double phi2 = phi * phi;
    a = 1.0 - phi2 / 6.0;
    b = 0.5 - phi2 / 24.0;
    c = 1.0 / 6.0 - phi2 / 120.0;
  } else {
    const double s = std::sin(phi);
    const double co = std::cos(phi);
    a = s / phi;
    b = (1.0 - co) / (phi * phi);
    c = (phi - s) / (phi * phi * phi);
  }
  const Mat3 r = Mat3::Identity() + a * k + b * k2;
  const Mat3 v = Mat3::Identity() + b * k + c * k2;
  return {r, v * (xi.v * theta)};
}

Mat6 adjoint(const RigidTransform& g) {
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = g.R();
  ad.topRightCorner<3, 3>() = hat(g.p()) * g.R();
  ad.bottomRightCorner<3, 3>() = g.R();
  return ad;
}

Mat6 adjoint_inverse(const RigidTransform& g) {
  const Mat3 rt = g.R().transpose();
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = rt;
  ad.topRightCorner<3, 3>() = -rt * hat(g.p());
  ad.bottomRightCorner<3, 3>() = rt;
  return ad;
}

Vec6 transform_wrench(const RigidTransform& g, const Vec6& w) {
  // Dual of the twist map: w_dst = Ad_{g^{-1}}^T w_src.
  const Vec3 f = g.R() * w.head<3>();
  const Vec3 tau = g.R() * w.tail<3>() + g.p().cross(f);
  Vec6 out;
  out << f, tau;
  return out;
}

Mat3 project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  return svd.matrixU() * d * svd.matrixV().transpose();
}

}  // namespace sher
