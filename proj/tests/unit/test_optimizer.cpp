#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sher/errors.hpp"
#include "sher/optimizer.hpp"

using namespace sher;

namespace {

Vec6 random_twist(std::mt19937_64& rng, double lin, double ang) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec6 v;
  for (Eigen::Index i = 0; i < 3; ++i) {
    v(i) = lin * n(rng);
    v(i + 3) = ang * n(rng);
  }
  return v;
}

bool inside(const JointVector& x, const RateBounds& b) {
  return ((x - b.lower).array() >= 0.0).all() && ((b.upper - x).array() >= 0.0).all();
}

}  // namespace

TEST(Optimizer, IntegrateIsExplicitEuler) {
  const JointVector q = (JointVector() << 1, 2, 3, 0.1, 0.2).finished();
  const JointVector qd = (JointVector() << 10, -10, 0, 1, -1).finished();
  EXPECT_EQ(integrate_joints(q, qd, 1e-3), q + qd * 1e-3);
}

TEST(Optimizer, RateBoundsAtHome) {
  const RobotDescription d = RobotDescription::sher_default();
  const RateBounds b = rate_bounds(d, JointVector::Zero(), 1e-3);
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_EQ(b.upper(i), d.joint_rate_limits[static_cast<std::size_t>(i)]);
    EXPECT_EQ(b.lower(i), -d.joint_rate_limits[static_cast<std::size_t>(i)]);
  }
}

TEST(Optimizer, RateBoundsNearLimitUseLookahead) {
  const RobotDescription d = RobotDescription::sher_default();
  JointVector q = JointVector::Zero();
  q(0) = d.joint_limits[0].max - 0.01;
  q(3) = d.joint_limits[3].min;
  const RateBounds b = rate_bounds(d, q, 1e-3);
  EXPECT_NEAR(b.upper(0), 10.0, 1e-6);
  EXPECT_LE(q(0) + b.upper(0) * 1e-3, d.joint_limits[0].max);
  EXPECT_EQ(b.lower(3), 0.0);
  EXPECT_EQ(b.upper(3), d.joint_rate_limits[3]);
}

TEST(Optimizer, LookaheadNeverLeavesLimitsInFloatingPoint) {
  const RobotDescription d = RobotDescription::sher_default();
  std::mt19937_64 rng(3);
  for (int k = 0; k < 2000; ++k) {
    JointVector q = oracle::random_q(d, rng);
    // Push some joints to within a rounding distance of a limit.
    const auto i = static_cast<Eigen::Index>(k % 5);
    q(i) = (k % 2 ? d.joint_limits[static_cast<std::size_t>(i)].max
                  : d.joint_limits[static_cast<std::size_t>(i)].min) -
           (k % 2 ? 1 : -1) * 1e-9 * (k % 7);
    const RateBounds b = rate_bounds(d, q, 1e-3);
    EXPECT_TRUE(d.within_limits(integrate_joints(q, b.upper, 1e-3)));
    EXPECT_TRUE(d.within_limits(integrate_joints(q, b.lower, 1e-3)));
    EXPECT_TRUE((b.lower.array() <= 0.0).all());
    EXPECT_TRUE((b.upper.array() >= 0.0).all());
  }
}

TEST(Optimizer, UnconstrainedMatchesPseudoInverse) {
  const RobotDescription d = RobotDescription::sher_default();
  std::mt19937_64 rng(11);
  for (int k = 0; k < 100; ++k) {
    const JointVector q = oracle::random_q(d, rng, 0.1);
    const Jacobian j = body_jacobian(d, q);
    const Vec6 v = random_twist(rng, 0.5, 0.005);
    const RateSolution s = solve_rates(d, q, v, 1e-3);
    if (!s.clamped_set.empty()) {
      continue;
    }
    EXPECT_LT((s.qdot - pseudo_inverse(j) * v).norm(), 1e-9);
    EXPECT_EQ(s.iterations, 1);
  }
}

TEST(Optimizer, ReachableTwistIsTrackedExactly) {
  const RobotDescription d = RobotDescription::sher_default();
  std::mt19937_64 rng(12);
  for (int k = 0; k < 100; ++k) {
    const JointVector q = oracle::random_q(d, rng, 0.1);
    const Jacobian j = body_jacobian(d, q);
    JointVector qd;
    for (Eigen::Index i = 0; i < 5; ++i) {
      qd(i) = 0.5 * d.joint_rate_limits[static_cast<std::size_t>(i)] *
              std::uniform_real_distribution<double>(-1, 1)(rng);
    }
    const RateSolution s = solve_rates(d, q, j * qd, 1e-3);
    EXPECT_LT((s.qdot - qd).norm(), 1e-6);
    EXPECT_LT(s.residual, 1e-6);
  }
}

TEST(Optimizer, MatchesGridOracleOnSaturatedInstances) {
  const RobotDescription d = RobotDescription::sher_default();
  std::mt19937_64 rng(21);
  for (int k = 0; k < 20; ++k) {
    const JointVector q = oracle::random_q(d, rng, 0.05);
    const Jacobian j = body_jacobian(d, q);
    const Vec6 v = random_twist(rng, 80.0, 1.5);
    const RateBounds b = rate_bounds(d, q, 1e-3);
    const RateSolution s = solve_box_least_squares(j, v, b);
    ASSERT_TRUE(inside(s.qdot, b));
    const JointVector ref = oracle::box_ls_grid(j, v, b.lower, b.upper, Vec6::Ones(), 9);
    const oracle::BoxObjective f(j, v, Vec6::Ones());
    EXPECT_LE(f(s.qdot), f(ref) + 1e-6 * (1.0 + f(ref))) << "instance " << k;
  }
}

TEST(Optimizer, WeightedObjective) {
  const RobotDescription d = RobotDescription::sher_default();
  std::mt19937_64 rng(22);
  OptimizerOptions opt;
  opt.weights = (Vec6() << 1, 1, 1, 1e4, 1e4, 1e4).finished();
  for (int k = 0; k < 10; ++k) {
    const JointVector q = oracle::random_q(d, rng, 0.05);
    const Jacobian j = body_jacobian(d, q);
    const Vec6 v = random_twist(rng, 80.0, 1.5);
    const RateBounds b = rate_bounds(d, q, 1e-3);
    const RateSolution s = solve_box_least_squares(j, v, b, opt);
    const JointVector ref = oracle::box_ls_grid(j, v, b.lower, b.upper, opt.weights, 9);
    const oracle::BoxObjective f(j, v, opt.weights);
    EXPECT_LE(f(s.qdot), f(ref) + 1e-6 * (1.0 + f(ref)));
  }
}

TEST(Optimizer, ClampedSetReportsPinnedJoints) {
  const RobotDescription d = RobotDescription::sher_default();
  Vec6 v = Vec6::Zero();
  v(0) = 500.0;  // ten times the prismatic rate limit
  const RateSolution s = solve_rates(d, JointVector::Zero(), v, 1e-3);
  EXPECT_NEAR(s.qdot(0), 50.0, 1e-12);
  ASSERT_FALSE(s.clamped_set.empty());
  EXPECT_EQ(s.clamped_set.front(), 0);
}

TEST(Optimizer, ZeroWidthBoxPinsJoint) {
  const Jacobian j = body_jacobian(RobotDescription::sher_default(), JointVector::Zero());
  RateBounds b;
  b.lower = JointVector::Constant(-1.0);
  b.upper = JointVector::Constant(1.0);
  b.lower(2) = b.upper(2) = 0.0;
  Vec6 v = Vec6::Zero();
  v(2) = 0.5;
  const RateSolution s = solve_box_least_squares(j, v, b);
  EXPECT_EQ(s.qdot(2), 0.0);
}

TEST(Optimizer, Contracts) {
  const RobotDescription d = RobotDescription::sher_default();
  EXPECT_THROW((void)solve_rates(d, JointVector::Zero(), Vec6::Zero(), 0.0), ContractError);
  JointVector q = JointVector::Zero();
  q(1) = 1e3;
  EXPECT_THROW((void)solve_rates(d, q, Vec6::Zero(), 1e-3), DomainError);
}
