#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "smoothqp/gradients.hpp"

namespace smoothqp {

/// Planar block resting on the ground, pushed by an applied force.
struct BlockParams {
  double mass = 1.0;      ///< kg
  double gravity = 9.81;  ///< m/s²
  double friction = 0.5;  ///< Coulomb coefficient, ≥ 0
  double timestep = 0.1;  ///< s
  double fx = 0.0;        ///< applied horizontal force, N
  double fy = 0.0;        ///< applied vertical force, N
};

/// Velocity the block would reach in one step with no contact impulse.
inline Eigen::Vector2d block_free_velocity(const BlockParams& bp) {
  const double scale = bp.timestep / bp.mass;
  return {scale * bp.fx, scale * (bp.fy - bp.mass * bp.gravity)};
}

/// One-step contact dynamics as a QP over the ground impulse λ = (λ_t, λ_n):
///
///   minimize   ½ λᵀ(I/m)λ + v_freeᵀ λ
///   subject to −λ_n ≤ 0,   ±λ_t − μ λ_n ≤ 0,
///
/// i.e. the post-step kinetic energy ½m‖v_free + λ/m‖² minimized over the
/// linearized friction cone. The next velocity is v_free + λ*/m. Below the
/// friction/gravity thresholds the cone admits λ = −m·v_free and the block
/// stays at rest; above them the optimum sits on the cone boundary and the
/// velocity grows affinely with the applied force.
inline QpProblem build_block_contact_qp(const BlockParams& bp) {
  QpProblem prob;
  prob.Q = Mat::Identity(2, 2) / bp.mass;
  prob.q = block_free_velocity(bp);
  prob.A = Mat(0, 2);
  prob.b = Vec(0);
  prob.G = Mat(3, 2);
  prob.G << 0.0, -1.0,                  // λ_n ≥ 0
      1.0, -bp.friction,                // λ_t ≤ μ λ_n
      -1.0, -bp.friction;               // −λ_t ≤ μ λ_n
  prob.h = Vec::Zero(3);
  return prob;
}

/// Next velocity of the block (solves the contact QP).
inline Eigen::Vector2d block_next_velocity(const BlockParams& bp,
                                           const SolverSettings& settings = {}) {
  const QpProblem prob = build_block_contact_qp(bp);
  const SolveResult res = solve_qp(prob, settings);
  if (res.status != Status::Converged) {
    throw SolveFailure(res.status, "block_next_velocity: contact QP did not converge");
  }
  return block_free_velocity(bp) + Eigen::Vector2d(res.iterate.x) / bp.mass;
}

/// d(velocity)/d(force) along one axis (0 = x, 1 = y), differentiated through
/// the contact QP at barrier level κ. The force enters the QP through
/// q = v_free, so the chain rule combines the direct v_free feedthrough with
/// the impulse sensitivity ∇_q from the relaxed QP.
inline double block_velocity_gradient(const BlockParams& bp, int axis, double kappa,
                                      const SolverSettings& settings = {}) {
  const QpProblem prob = build_block_contact_qp(bp);
  SolverSettings tight = settings;
  tight.tol = std::min(settings.tol, 1e-10);
  const SolveResult res = solve_qp(prob, tight);
  if (res.status != Status::Converged) {
    throw SolveFailure(res.status, "block_velocity_gradient: contact QP did not converge");
  }
  const PrimalDualIterate relaxed = relax_qp(prob, res.iterate, kappa, tight);
  Vec seed = Vec::Zero(2);
  seed[axis] = 1.0;  // ℓ(λ) = λ_axis
  const QpGradients g = compute_qp_grads(prob, relaxed, seed);
  const double dq_df = bp.timestep / bp.mass;       // ∂v_free,axis/∂f_axis
  const double dlambda_df = g.grad_q[axis] * dq_df;
  return dq_df + dlambda_df / bp.mass;
}

struct ContactSweepRow {
  int axis = 0;  // 0 = horizontal force sweep, 1 = vertical
  double force = 0.0;
  double velocity = 0.0;
  double dvel_dforce = 0.0;
  double kappa = 0.0;
};

/// Sweeps the applied force along one axis from 0 to force_max, recording the
/// resulting velocity component and its smoothed derivative.
inline std::vector<ContactSweepRow> contact_force_sweep(const BlockParams& base, int axis,
                                                        double kappa, int steps,
                                                        double force_max,
                                                        const SolverSettings& settings = {}) {
  std::vector<ContactSweepRow> rows;
  rows.reserve(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    BlockParams bp = base;
    const double f = force_max * static_cast<double>(i) / static_cast<double>(steps);
    (axis == 0 ? bp.fx : bp.fy) = f;
    ContactSweepRow row;
    row.axis = axis;
    row.force = f;
    row.velocity = block_next_velocity(bp, settings)[axis];
    row.dvel_dforce = block_velocity_gradient(bp, axis, kappa, settings);
    row.kappa = kappa;
    rows.push_back(row);
  }
  return rows;
}

/// Convex polytope {p : A p ≤ b} in local frame, placed in the world by a
/// translation. World-frame constraint: A p ≤ b + A·pose.
struct Polytope {
  Mat A;
  Vec b;
  Vec pose;

  Eigen::Index dim() const { return A.cols(); }
  Eigen::Index faces() const { return b.size(); }
  Vec world_offsets() const { return b + A * pose; }
};

/// Axis-aligned box helper.
inline Polytope make_box(const Vec& center, const Vec& half_extents) {
  const Eigen::Index d = center.size();
  Polytope poly;
  poly.A = Mat(2 * d, d);
  poly.A << Mat::Identity(d, d), -Mat::Identity(d, d);
  poly.b = Vec(2 * d);
  poly.b << half_extents, half_extents;
  poly.pose = center;
  return poly;
}

/// Checks that the polytope is nonempty and bounded by solving small elastic
/// QPs: nonemptiness from the violation slack of an interior least-norm
/// problem, boundedness from least-norm probes of the recession cone
/// {d : A d ≤ 0} along each ± axis (bounded iff the cone is {0}).
inline std::vector<std::string> validate_polytope(const Polytope& poly,
                                                  const SolverSettings& settings = {}) {
  std::vector<std::string> issues;
  const Eigen::Index d = poly.dim();
  if (poly.b.size() != poly.A.rows()) {
    issues.push_back("polytope: A has " + std::to_string(poly.A.rows()) + " rows but b has " +
                     std::to_string(poly.b.size()));
  }
  if (poly.pose.size() != d) {
    issues.push_back("polytope: pose length " + std::to_string(poly.pose.size()) +
                     " does not match dimension " + std::to_string(d));
  }
  if (!issues.empty()) return issues;

  ElasticProblem interior;
  interior.Q = Mat::Identity(d, d);
  interior.q = Vec::Zero(d);
  interior.G = poly.A;
  interior.h = poly.world_offsets();
  interior.rho = Vec::Constant(poly.faces(), 1e3);
  const ElasticSolveResult inres = solve_qp_elastic(interior, settings);
  if (inres.status != Status::Converged) {
    issues.push_back("polytope: interior probe did not converge");
  } else if (detail::inf_norm(inres.iterate.t) > 1e-6) {
    issues.push_back("polytope: feasible set is empty");
  }

  for (Eigen::Index axis = 0; axis < d && issues.empty(); ++axis) {
    for (double sign : {1.0, -1.0}) {
      ElasticProblem cone;
      cone.Q = Mat::Identity(d, d);
      cone.q = Vec::Zero(d);
      cone.q[axis] = -sign;
      cone.G = poly.A;
      cone.h = Vec::Zero(poly.faces());
      cone.rho = Vec::Constant(poly.faces(), 1e3);
      const ElasticSolveResult cres = solve_qp_elastic(cone, settings);
      if (cres.status != Status::Converged) {
        issues.push_back("polytope: recession probe did not converge");
        break;
      }
      if (detail::inf_norm(cres.iterate.x) > 1e-6) {
        issues.push_back("polytope: unbounded along axis " + std::to_string(axis));
        break;
      }
    }
  }
  return issues;
}

/// Closest-point QP between two polytopes over the stacked variable
/// (p₁, p₂) ∈ R^{2d}:
///
///   minimize   ½‖p₁ − p₂‖²
///   subject to A₁ p₁ ≤ b₁ + A₁c₁,  A₂ p₂ ≤ b₂ + A₂c₂.
///
/// The squared norm keeps the problem quadratic; its minimizer coincides
/// with the true closest-point pair for non-touching sets.
inline QpProblem build_closest_point_qp(const Polytope& p1, const Polytope& p2) {
  const Eigen::Index d = p1.dim();
  if (p2.dim() != d) throw DimensionMismatch("build_closest_point_qp: dimension mismatch");
  QpProblem prob;
  prob.Q = Mat::Zero(2 * d, 2 * d);
  prob.Q.topLeftCorner(d, d) = Mat::Identity(d, d);
  prob.Q.bottomRightCorner(d, d) = Mat::Identity(d, d);
  prob.Q.topRightCorner(d, d) = -Mat::Identity(d, d);
  prob.Q.bottomLeftCorner(d, d) = -Mat::Identity(d, d);
  prob.q = Vec::Zero(2 * d);
  prob.A = Mat(0, 2 * d);
  prob.b = Vec(0);
  const Eigen::Index k1 = p1.faces(), k2 = p2.faces();
  prob.G = Mat::Zero(k1 + k2, 2 * d);
  prob.G.topLeftCorner(k1, d) = p1.A;
  prob.G.bottomRightCorner(k2, d) = p2.A;
  prob.h = Vec(k1 + k2);
  prob.h << p1.world_offsets(), p2.world_offsets();
  return prob;
}

struct ClosestPointResult {
  Vec point1;
  Vec point2;
  double distance = 0.0;
  SolveResult solve;
};

inline ClosestPointResult closest_points(const Polytope& p1, const Polytope& p2,
                                         const SolverSettings& settings = {}) {
  const QpProblem prob = build_closest_point_qp(p1, p2);
  ClosestPointResult out;
  out.solve = solve_qp(prob, settings);
  if (out.solve.status != Status::Converged) {
    throw SolveFailure(out.solve.status, "closest_points: QP did not converge");
  }
  const Eigen::Index d = p1.dim();
  out.point1 = out.solve.iterate.x.head(d);
  out.point2 = out.solve.iterate.x.tail(d);
  out.distance = (out.point1 - out.point2).norm();
  return out;
}

/// Contact normal: the normalized gradient of the (relaxed) closest distance
/// with respect to the second polytope's translation. The translation enters
/// the QP only through the offsets h = b + A·pose, so the chain rule reduces
/// to A₂ᵀ applied to the h-gradient block of the second polytope.
inline Vec contact_normal(const Polytope& p1, const Polytope& p2, double kappa,
                          const SolverSettings& settings = {}) {
  const QpProblem prob = build_closest_point_qp(p1, p2);
  SolverSettings tight = settings;
  tight.tol = std::min(settings.tol, 1e-10);
  const SolveResult res = solve_qp(prob, tight);
  if (res.status != Status::Converged) {
    throw SolveFailure(res.status, "contact_normal: QP did not converge");
  }
  const PrimalDualIterate relaxed = relax_qp(prob, res.iterate, kappa, tight);

  const Eigen::Index d = p1.dim();
  const Vec diff = relaxed.x.head(d) - relaxed.x.tail(d);
  const double dist = diff.norm();
  if (dist <= 1e-12) {
    throw std::invalid_argument("contact_normal: polytopes are touching or overlapping");
  }
  Vec seed(2 * d);
  seed << diff / dist, -diff / dist;  // ∇ₓ‖p₁ − p₂‖ at the relaxed point

  const QpGradients g = compute_qp_grads(prob, relaxed, seed);
  const Vec grad_pose2 = p2.A.transpose() * g.grad_h.tail(p2.faces());
  const double norm = grad_pose2.norm();
  if (norm <= 1e-14) {
    throw std::invalid_argument("contact_normal: distance gradient vanished");
  }
  return grad_pose2 / norm;
}

struct CollisionSweepRow {
  double offset = 0.0;      // sweep coordinate of the moving square's center
  double distance = 0.0;
  double normal_x = 0.0;
  double normal_y = 0.0;
  double angle_deg = 0.0;   // atan2(normal_y, normal_x) in degrees
  double kappa = 0.0;
};

/// Sweeps a unit square diagonally past the corner of another: the moving
/// square's center follows the line x + y = 4 + clearance, so the closest
/// feature pair flips from the top face to the right face of the fixed
/// square within a window of width `clearance`. With a small clearance the
/// κ→0 normal snaps 90° in one step while a relaxed κ turns it smoothly.
inline std::vector<CollisionSweepRow> collision_corner_sweep(
    double kappa, int steps = 100, double clearance = 0.002,
    const SolverSettings& settings = {}) {
  Vec half = Vec::Constant(2, 1.0);
  const Polytope fixed = make_box(Vec::Zero(2), half);
  const double lo = 1.01, hi = 3.01;
  std::vector<CollisionSweepRow> rows;
  rows.reserve(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    const double a = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps);
    Vec center(2);
    center << a, 4.0 + clearance - a;
    const Polytope moving = make_box(center, half);
    CollisionSweepRow row;
    row.offset = a;
    row.distance = closest_points(fixed, moving, settings).distance;
    const Vec n = contact_normal(fixed, moving, kappa, settings);
    row.normal_x = n[0];
    row.normal_y = n[1];
    row.angle_deg = std::atan2(n[1], n[0]) * 180.0 / M_PI;
    row.kappa = kappa;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace smoothqp
