#include "sher/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "sher/errors.hpp"

namespace sher {

namespace {

enum class Pin : unsigned char { Free, Lower, Upper };

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 5, 5>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 5, 1>;

}  // namespace

JointVector integrate_joints(const JointVector& q, const JointVector& qdot, double dt) {
  return q + qdot * dt;
}

RateBounds rate_bounds(const RobotDescription& desc, const JointVector& q, double dt) {
  RateBounds b;
  for (Eigen::Index i = 0; i < 5; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const JointLimit& lim = desc.joint_limits[k];
    const double rate = desc.joint_rate_limits[k];
    double hi = std::min(rate, (lim.max - q(i)) / dt);
    double lo = std::max(-rate, (lim.min - q(i)) / dt);
    // Shrink by ulps until the lookahead lands inside the limit in floating point.
    while (q(i) + hi * dt > lim.max) {
      hi = std::nextafter(hi, -std::numeric_limits<double>::infinity());
    }
    while (q(i) + lo * dt < lim.min) {
      lo = std::nextafter(lo, std::numeric_limits<double>::infinity());
    }
    b.upper(i) = std::max(hi, 0.0);
    b.lower(i) = std::min(lo, 0.0);
  }
  return b;
}

RateSolution solve_box_least_squares(const Jacobian& j, const Vec6& desired_velocity,
                                     const RateBounds& bounds, const OptimizerOptions& options) {
  const Vec6 sqrt_w = options.weights.cwiseSqrt();
  const Jacobian a = sqrt_w.asDiagonal() * j;
  const Vec6 b = sqrt_w.cwiseProduct(desired_velocity);
  Eigen::Matrix<double, 5, 5> h = a.transpose() * a;
  h.diagonal().array() += options.damping * options.damping;
  const JointVector g = a.transpose() * b;

  const JointVector& lo = bounds.lower;
  const JointVector& hi = bounds.upper;

  JointVector x = h.ldlt().solve(g);
  std::array<Pin, 5> pin{};
  for (Eigen::Index i = 0; i < 5; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (lo(i) == hi(i) || x(i) <= lo(i)) {
      x(i) = lo(i);
      pin[k] = Pin::Lower;
    } else if (x(i) >= hi(i)) {
      x(i) = hi(i);
      pin[k] = Pin::Upper;
    } else {
      pin[k] = Pin::Free;
    }
  }

  const double grad_tol = 1e-11 * (1.0 + g.cwiseAbs().maxCoeff() + h.cwiseAbs().maxCoeff());

  RateSolution sol;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    sol.iterations = iter + 1;
    std::array<Eigen::Index, 5> free_idx{};
    Eigen::Index nf = 0;
    for (Eigen::Index i = 0; i < 5; ++i) {
      if (pin[static_cast<std::size_t>(i)] == Pin::Free) {
        free_idx[static_cast<std::size_t>(nf++)] = i;
      }
    }

    JointVector z = x;
    if (nf > 0) {
      SmallMat hff(nf, nf);
      SmallVec rhs(nf);
      for (Eigen::Index r = 0; r < nf; ++r) {
        const Eigen::Index ir = free_idx[static_cast<std::size_t>(r)];
        double acc = g(ir);
        for (Eigen::Index c = 0; c < 5; ++c) {
          if (pin[static_cast<std::size_t>(c)] != Pin::Free) {
            acc -= h(ir, c) * x(c);
          }
        }
        rhs(r) = acc;
        for (Eigen::Index c = 0; c < nf; ++c) {
          hff(r, c) = h(ir, free_idx[static_cast<std::size_t>(c)]);
        }
      }
      const SmallVec zf = hff.ldlt().solve(rhs);
      for (Eigen::Index r = 0; r < nf; ++r) {
        z(free_idx[static_cast<std::size_t>(r)]) = zf(r);
      }
    }

    // Largest step from the feasible x toward z that keeps the free joints in the box.
    double step = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index r = 0; r < nf; ++r) {
      const Eigen::Index i = free_idx[static_cast<std::size_t>(r)];
      double t = 1.0;
      if (z(i) < lo(i)) {
        t = (lo(i) - x(i)) / (z(i) - x(i));
      } else if (z(i) > hi(i)) {
        t = (hi(i) - x(i)) / (z(i) - x(i));
      } else {
        continue;
      }
      t = std::clamp(t, 0.0, 1.0);
      if (t < step || blocking < 0) {
        step = t;
        blocking = i;
      }
    }

    if (blocking >= 0) {
      for (Eigen::Index r = 0; r < nf; ++r) {
        const Eigen::Index i = free_idx[static_cast<std::size_t>(r)];
        x(i) = std::clamp(x(i) + step * (z(i) - x(i)), lo(i), hi(i));
      }
      const auto k = static_cast<std::size_t>(blocking);
      if (z(blocking) < lo(blocking)) {
        x(blocking) = lo(blocking);
        pin[k] = Pin::Lower;
      } else {
        x(blocking) = hi(blocking);
        pin[k] = Pin::Upper;
      }
      continue;
    }

    x = z;
    // KKT check on pinned joints: release the one whose multiplier has the wrong sign.
    const JointVector grad = h * x - g;
    Eigen::Index release = -1;
    double worst = grad_tol;
    for (Eigen::Index i = 0; i < 5; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (lo(i) == hi(i)) {
        continue;
      }
      double violation = 0.0;
      if (pin[k] == Pin::Lower) {
        violation = -grad(i);
      } else if (pin[k] == Pin::Upper) {
        violation = grad(i);
      }
      if (violation > worst) {
        worst = violation;
        release = i;
      }
    }
    if (release < 0) {
      break;
    }
    pin[static_cast<std::size_t>(release)] = Pin::Free;
  }

  for (Eigen::Index i = 0; i < 5; ++i) {
    x(i) = std::clamp(x(i), lo(i), hi(i));
    const auto k = static_cast<std::size_t>(i);
    if (pin[k] != Pin::Free) {
      sol.clamped_set.push_back(static_cast<int>(i));
    }
  }
  sol.qdot = x;
  sol.residual = (j * x - desired_velocity).norm();
  return sol;
}

RateSolution solve_rates(const RobotDescription& desc, const JointVector& q,
                         const Vec6& desired_velocity, double dt, const OptimizerOptions& options) {
  if (!(dt > 0.0)) {
    throw ContractError("solve_rates: dt must be positive");
  }
  const Jacobian j = body_jacobian(desc, q);  // validates q
  return solve_box_least_squares(j, desired_velocity, rate_bounds(desc, q, dt), options);
}

}  // namespace sher
