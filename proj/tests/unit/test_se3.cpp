#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "sher/errors.hpp"
#include "sher/se3.hpp"

using namespace sher;

namespace {

Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

RigidTransform random_pose(std::mt19937_64& rng) {
  const Vec3 axis = random_vec(rng).normalized();
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  return {Eigen::AngleAxisd(angle(rng), axis).toRotationMatrix(), random_vec(rng, 50.0)};
}

}  // namespace

TEST(Se3, ExpOfZeroAngleIsIdentity) {
  const Twist xi = Twist::revolute(Vec3(0.3, -0.4, 0.866).normalized(), Vec3(1, 2, 3));
  const RigidTransform g = exp_twist(xi, 0.0);
  EXPECT_TRUE(g.R().isApprox(Mat3::Identity(), 0.0));
  EXPECT_EQ(g.p(), Vec3::Zero());
}

TEST(Se3, ExpOfPrismaticTwistIsTranslation) {
  const RigidTransform g = exp_twist(Twist::prismatic(Vec3(0, 0, 1)), 5.0);
  EXPECT_TRUE(g.R().isIdentity(0.0));
  EXPECT_EQ(g.p(), Vec3(0, 0, 5));
}

TEST(Se3, QuarterTurnAboutZ) {
  const RigidTransform g = exp_twist(Twist::revolute(Vec3(0, 0, 1), Vec3::Zero()), std::numbers::pi / 2);
  EXPECT_NEAR((g.R() * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(g.p().norm(), 0.0, 1e-15);
}

TEST(Se3, RevoluteAboutOffsetAxisKeepsAxisPointsFixed) {
  const Vec3 point(0, 0, 300);
  const Twist xi = Twist::revolute(Vec3(1, 0, 0), point);
  const RigidTransform g = exp_twist(xi, 0.7);
  EXPECT_NEAR((g.apply(point) - point).norm(), 0.0, 1e-12);
  EXPECT_NEAR((g.apply(point + Vec3(5, 0, 0)) - (point + Vec3(5, 0, 0))).norm(), 0.0, 1e-12);
}

TEST(Se3, ExpMatchesMatrixExponential) {
  // Truncated power series of the 4x4 twist matrix as an independent reference.
  std::mt19937_64 rng(11);
  for (int k = 0; k < 50; ++k) {
    Twist xi;
    xi.v = random_vec(rng, 3.0);
    xi.w = random_vec(rng, 1.0);
    const double theta = 0.9;
    const Mat4 a = hat(xi) * theta;
    Mat4 term = Mat4::Identity();
    Mat4 sum = Mat4::Identity();
    for (int n = 1; n < 40; ++n) {
      term = term * a / n;
      sum += term;
    }
    EXPECT_LT((exp_twist(xi, theta).matrix() - sum).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Se3, SmallAngleBranchIsContinuous) {
  const Twist xi = Twist::from_coordinates((Vec6() << 1, 2, 3, 0.3, -0.2, 0.9).finished());
  // Either side of the small-angle switch agrees with the series.
  for (double scale : {0.99e-7, 1.01e-7}) {
    const double theta = scale / xi.w.norm();
    const Mat4 a = hat(xi) * theta;
    const Mat4 series = Mat4::Identity() + a + a * a / 2.0 + a * a * a / 6.0;
    EXPECT_LT((exp_twist(xi, theta).matrix() - series).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Se3, InverseComposesToIdentity) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const RigidTransform g = random_pose(rng);
    const Mat4 m = (g.inverse() * g).matrix();
    EXPECT_LT((m - Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Se3, CompositionIsAssociative) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    const RigidTransform a = random_pose(rng);
    const RigidTransform b = random_pose(rng);
    const RigidTransform c = random_pose(rng);
    EXPECT_LT((((a * b) * c).matrix() - (a * (b * c)).matrix()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Se3, AdjointOfIdentityIsIdentity) {
  EXPECT_TRUE(adjoint(RigidTransform::identity()).isIdentity(0.0));
}

TEST(Se3, AdjointOfTranslationOnPureRotation) {
  const Vec6 xi = (Vec6() << 0, 0, 0, 0, 0, 1).finished();
  const Vec6 out = adjoint(RigidTransform::translation(Vec3(1, 0, 0))) * xi;
  // p x w = (1,0,0) x (0,0,1)
  const Vec3 pxw = Vec3(1, 0, 0).cross(Vec3(0, 0, 1));
  EXPECT_EQ(out.head<3>(), pxw);
  EXPECT_EQ(out.head<3>(), Vec3(0, -1, 0));
  EXPECT_EQ(out.tail<3>(), Vec3(0, 0, 1));
}

TEST(Se3, AdjointIsAHomomorphism) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const RigidTransform a = random_pose(rng);
    const RigidTransform b = random_pose(rng);
    EXPECT_LT((adjoint(a * b) - adjoint(a) * adjoint(b)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((adjoint_inverse(a) - adjoint(a.inverse())).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((adjoint(a) * adjoint_inverse(a) - Mat6::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Se3, AdjointMapsTwistMatricesByConjugation) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 20; ++k) {
    const RigidTransform g = random_pose(rng);
    Twist xi;
    xi.v = random_vec(rng);
    xi.w = random_vec(rng);
    const Mat4 lhs = hat(Twist::from_coordinates(adjoint(g) * xi.coordinates()));
    const Mat4 rhs = g.matrix() * hat(xi) * g.inverse().matrix();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Se3, WrenchIdentityIsUnchanged) {
  const Vec6 w = (Vec6() << 1, 2, 3, 4, 5, 6).finished();
  EXPECT_EQ(transform_wrench(RigidTransform::identity(), w), w);
}

TEST(Se3, WrenchRotationPreservesForceMagnitude) {
  std::mt19937_64 rng(8);
  const RigidTransform g = RigidTransform::rotation(random_pose(rng).R());
  const Vec6 w = (Vec6() << 3, -4, 12, 0, 0, 0).finished();
  const Vec6 out = transform_wrench(g, w);
  EXPECT_NEAR(out.head<3>().norm(), 13.0, 1e-12);
  EXPECT_NEAR((out.head<3>() - g.R() * w.head<3>()).norm(), 0.0, 1e-12);
}

TEST(Se3, WrenchTranslationAddsMomentArm) {
  const Vec3 p(0, 0, 10);
  const Vec3 f(1, 0, 0);
  const Vec6 out = transform_wrench(RigidTransform::translation(p), (Vec6() << f, Vec3::Zero()).finished());
  EXPECT_EQ(out.head<3>(), f);
  EXPECT_EQ(out.tail<3>(), p.cross(f));
  EXPECT_EQ(out.tail<3>(), Vec3(0, 10, 0));
}

TEST(Se3, WrenchPowerIsInvariant) {
  // The pairing of a wrench with a twist is frame independent.
  std::mt19937_64 rng(9);
  for (int k = 0; k < 50; ++k) {
    const RigidTransform g = random_pose(rng);
    const Vec6 twist = (Vec6() << random_vec(rng), random_vec(rng)).finished();
    const Vec6 wrench = (Vec6() << random_vec(rng), random_vec(rng)).finished();
    const double p_src = wrench.dot(twist);
    const double p_dst = transform_wrench(g, wrench).dot(adjoint(g) * twist);
    EXPECT_NEAR(p_src, p_dst, 1e-9 * (1.0 + std::abs(p_src)));
  }
}

TEST(Se3, HatVee) {
  EXPECT_TRUE(hat(Vec3::Zero()).isZero(0.0));
  EXPECT_EQ(hat(Vec3(1, 2, 3)) * Vec3(1, 2, 3), Vec3::Zero());
  std::mt19937_64 rng(10);
  for (int k = 0; k < 100; ++k) {
    const Vec3 x = random_vec(rng, 10.0);
    const Vec3 y = random_vec(rng, 10.0);
    EXPECT_EQ(vee(hat(x)), x);
    EXPECT_LT((hat(x) * y - x.cross(y)).norm(), 1e-12);
  }
}

TEST(Se3, VeeRejectsNonSkew) {
  Mat3 m = hat(Vec3(1, 2, 3));
  m(0, 0) = 1e-3;
  EXPECT_THROW((void)vee(m), ContractError);
}

TEST(Se3, ProjectionRestoresOrthonormality) {
  Mat3 r = Eigen::AngleAxisd(0.4, Vec3(1, 1, 0).normalized()).toRotationMatrix();
  r(0, 1) += 1e-6;
  const RigidTransform g(r, Vec3(1, 2, 3));
  EXPECT_GT(g.orthonormality_residual(), 1e-8);
  const RigidTransform h = g.orthonormalized();
  EXPECT_LT(h.orthonormality_residual(), 1e-12);
  EXPECT_NEAR(h.R().determinant(), 1.0, 1e-12);
  EXPECT_EQ(h.p(), g.p());
}

TEST(Se3, LongCompositionChainsStayOrthonormal) {
  const RigidTransform step = exp_twist(Twist::revolute(Vec3(0.6, 0.0, 0.8), Vec3(1, 2, 3)), 0.01);
  RigidTransform g;
  for (int k = 0; k < 100000; ++k) {
    g = g * step;
  }
  EXPECT_LT(g.orthonormality_residual(), 1e-9);
}
