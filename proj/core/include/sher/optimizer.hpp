#pragma once

#include <vector>

#include "sher/robot_model.hpp"

namespace sher {

struct OptimizerOptions {
  // Diagonal weights on the (v, w) velocity error; unit by default.
  Vec6 weights = Vec6::Ones();
  double damping = kDefaultDamping;
  int max_iterations = 50;
};

struct RateSolution {
  JointVector qdot = JointVector::Zero();
  double residual = 0.0;         // |J qdot - V_des|_2, unweighted
  std::vector<int> clamped_set;  // 0-based joint indices held at a bound
  int iterations = 0;
};

struct RateBounds {
  JointVector lower;
  JointVector upper;
};

// Per-joint admissible rates for one step of length dt: the rate limit
// intersected with the one-step position lookahead. For q inside its limits
// the bounds satisfy lower <= 0 <= upper, and integrate_joints(q, b, dt) stays
// within the position limits in floating point for any b in [lower, upper].
[[nodiscard]] RateBounds rate_bounds(const RobotDescription& desc, const JointVector& q, double dt);

// q + qdot * dt, the ideal low-level joint controller.
[[nodiscard]] JointVector integrate_joints(const JointVector& q, const JointVector& qdot, double dt);

/// Joint rates minimising |W^{1/2}(J(q) qdot - V_des)|^2 inside the rate box.
///
/// The unconstrained core is the damped least-squares inverse. Constraints are
/// handled with a bounded-variable active set: violated joints are pinned to
/// their bounds and the free subproblem is re-solved; pinned joints whose
/// multiplier has the wrong sign are released again. Converges in a handful of
/// iterations for five joints. Throws DomainError if q is out of limits and
/// ContractError if dt <= 0.
[[nodiscard]] RateSolution solve_rates(const RobotDescription& desc, const JointVector& q,
                                       const Vec6& desired_velocity, double dt,
                                       const OptimizerOptions& options = {});

// Lower-level entry point over an explicit Jacobian and box; used by tests.
[[nodiscard]] RateSolution solve_box_least_squares(const Jacobian& j, const Vec6& desired_velocity,
                                                   const RateBounds& bounds,
                                                   const OptimizerOptions& options = {});

}  // namespace sher
