#pragma once

#include <algorithm>

#include "smoothqp/relax.hpp"

namespace smoothqp {

/// Backward-pass seed: the gradient of a scalar loss with respect to the
/// optimal primal variable.
using LossGradient = Vec;

/// Gradients of ℓ(x*) with respect to every problem matrix, by the implicit
/// function theorem at a primal-dual iterate satisfying the (relaxed) KKT
/// conditions. One extra KKT solve with the cached block elimination gives
/// the differentials; the gradients are outer products of those with the
/// iterate (see docs/derivations.md for the adjoint derivation and its
/// finite-difference verification).
///
/// Evaluate at an iterate relaxed to κ ≥ 1e-8 for smooth gradients. Iterates
/// converged at κ = 0 are accepted but yield subgradients: near an active
/// constraint the result is one-sided and may change discontinuously.
inline QpGradients compute_qp_grads(const QpProblem& prob, const PrimalDualIterate& it,
                                    const LossGradient& loss_grad_x) {
  if (loss_grad_x.size() != prob.n()) {
    throw DimensionMismatch("compute_qp_grads: loss gradient must have length n");
  }
  const StandardKktWorkspace ws = build_standard_workspace(prob, it.s, it.z);
  const StepDeltas d =
      solve_kkt(ws, -loss_grad_x, Vec::Zero(prob.p()), Vec::Zero(prob.p()), Vec::Zero(prob.m()));
  // d.dz is the raw Δz of the 4-block system; the z-rescaled differential is
  // d.dz ⊘ z, and the two appear below only in the combinations z ⊙ (d.dz ⊘ z)
  // = d.dz, so the quotient never has to be formed.
  QpGradients g;
  g.grad_Q = 0.5 * (d.dx * it.x.transpose() + it.x * d.dx.transpose());
  g.grad_q = d.dx;
  g.grad_A = d.dy * it.x.transpose() + it.y * d.dx.transpose();
  g.grad_b = -d.dy;
  g.grad_G = d.dz * it.x.transpose() + it.z * d.dx.transpose();
  g.grad_h = -d.dz;
  return g;
}

/// Elastic counterpart. Only the second dual block z₂ multiplies G and h in
/// the elastic KKT conditions, so the gradients take the standard form with
/// (z, Δz) replaced by (z₂, Δz₂). The A and b blocks are empty.
inline QpGradients compute_elastic_qp_grads(const ElasticProblem& prob,
                                            const ElasticIterate& it,
                                            const LossGradient& loss_grad_x) {
  if (loss_grad_x.size() != prob.n()) {
    throw DimensionMismatch("compute_elastic_qp_grads: loss gradient must have length n");
  }
  const Eigen::Index p = prob.p();
  const ElasticKktWorkspace ws = build_elastic_workspace(prob, it.s1, it.s2, it.z1, it.z2);
  const ElasticStepDeltas d = elastic_kkt(ws, -loss_grad_x, Vec::Zero(p), Vec::Zero(p),
                                          Vec::Zero(p), Vec::Zero(p), Vec::Zero(p));
  QpGradients g;
  g.grad_Q = 0.5 * (d.dx * it.x.transpose() + it.x * d.dx.transpose());
  g.grad_q = d.dx;
  g.grad_A = Mat(0, prob.n());
  g.grad_b = Vec(0);
  g.grad_G = d.dz2 * it.x.transpose() + it.z2 * d.dx.transpose();
  g.grad_h = -d.dz2;
  return g;
}

namespace detail {

// Inner solve-then-relax pipeline for the fd oracle. The perturbed solutions
// are converged well below the oracle's resolution so that central
// differences at step ε are not polluted by solver tolerance.
inline SolverSettings fd_inner_settings(const SolverSettings& settings, double kappa) {
  SolverSettings inner = settings;
  inner.tol = std::min({settings.tol, 1e-10, 0.01 * kappa});
  inner.max_iters = std::max(settings.max_iters, 50);
  return inner;
}

inline Vec relaxed_qp_solution(const QpProblem& prob, double kappa,
                               const SolverSettings& inner) {
  const SolveResult res = solve_qp(prob, inner);
  if (res.status != Status::Converged) {
    throw SolveFailure(res.status, "fd oracle: perturbed solve did not converge");
  }
  SolverSettings relax_settings = inner;
  relax_settings.tol = 1e-12;
  relax_settings.relax_max_iters = 30;
  return relax_qp(prob, res.iterate, kappa, relax_settings).x;
}

inline Vec relaxed_elastic_solution(const ElasticProblem& prob, double kappa,
                                    const SolverSettings& inner) {
  const ElasticSolveResult res = solve_qp_elastic(prob, inner);
  if (res.status != Status::Converged) {
    throw SolveFailure(res.status, "fd oracle: perturbed solve did not converge");
  }
  SolverSettings relax_settings = inner;
  relax_settings.tol = 1e-12;
  relax_settings.relax_max_iters = 30;
  return relax_qp_elastic(prob, res.iterate, kappa, relax_settings).x;
}

// Central difference of ℓ(x*(problem)) under a caller-supplied mutation.
template <class Problem, class Mutate, class Solution>
double central_difference(const Problem& prob, const Mutate& mutate, const Solution& solution,
                          const Vec& seed, double eps) {
  Problem plus = prob;
  mutate(plus, eps);
  Problem minus = prob;
  mutate(minus, -eps);
  const double f_plus = seed.dot(solution(plus));
  const double f_minus = seed.dot(solution(minus));
  return (f_plus - f_minus) / (2.0 * eps);
}

template <class Problem, class Solution>
QpGradients fd_gradients_impl(const Problem& prob, const Vec& seed, double kappa,
                              const SolverSettings& settings, const Solution& solution,
                              bool has_equalities) {
  const Eigen::Index n = prob.n();
  const Eigen::Index p = prob.p();
  const double eps = settings.fd_epsilon;

  QpGradients g;
  g.grad_Q = Mat::Zero(n, n);
  g.grad_q = Vec::Zero(n);
  g.grad_G = Mat::Zero(p, n);
  g.grad_h = Vec::Zero(p);

  // Q entries are perturbed symmetrically: (i,j) and (j,i) move together and
  // the off-diagonal difference is halved, matching the symmetric-gradient
  // convention of compute_qp_grads.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double der = central_difference(
          prob,
          [&](Problem& pb, double e) {
            pb.Q(i, j) += e;
            if (i != j) pb.Q(j, i) += e;
          },
          solution, seed, eps);
      if (i == j) {
        g.grad_Q(i, i) = der;
      } else {
        g.grad_Q(i, j) = 0.5 * der;
        g.grad_Q(j, i) = 0.5 * der;
      }
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    g.grad_q[i] = central_difference(
        prob, [&](Problem& pb, double e) { pb.q[i] += e; }, solution, seed, eps);
  }

  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      g.grad_G(i, j) = central_difference(
          prob, [&](Problem& pb, double e) { pb.G(i, j) += e; }, solution, seed, eps);
    }
    g.grad_h[i] = central_difference(
        prob, [&](Problem& pb, double e) { pb.h[i] += e; }, solution, seed, eps);
  }

  if constexpr (std::is_same_v<Problem, QpProblem>) {
    const Eigen::Index m = prob.m();
    g.grad_A = Mat::Zero(m, n);
    g.grad_b = Vec::Zero(m);
    if (has_equalities) {
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          g.grad_A(i, j) = central_difference(
              prob, [&](Problem& pb, double e) { pb.A(i, j) += e; }, solution, seed, eps);
        }
        g.grad_b[i] = central_difference(
            prob, [&](Problem& pb, double e) { pb.b[i] += e; }, solution, seed, eps);
      }
    }
  } else {
    g.grad_A = Mat(0, n);
    g.grad_b = Vec(0);
  }
  return g;
}

}  // namespace detail

/// Finite-difference oracle for the gradients of the linear loss
/// ℓ(x) = loss_grad_xᵀ x through the solve → relax(κ) pipeline. Every matrix
/// entry is perturbed by ±fd_epsilon and the perturbed problem is re-solved,
/// so this is slow and exists to validate compute_qp_grads, not to replace
/// it. Requires κ > 0 so the perturbed solution map is smooth.
inline QpGradients fd_gradients(const QpProblem& prob, const Vec& loss_grad_x, double kappa,
                                const SolverSettings& settings = {}) {
  if (!(kappa > 0.0)) throw std::invalid_argument("fd_gradients: kappa must be positive");
  const SolverSettings inner = detail::fd_inner_settings(settings, kappa);
  const auto solution = [&](const QpProblem& pb) {
    return detail::relaxed_qp_solution(pb, kappa, inner);
  };
  return detail::fd_gradients_impl(prob, loss_grad_x, kappa, settings, solution,
                                   prob.m() > 0);
}

inline QpGradients fd_gradients(const ElasticProblem& prob, const Vec& loss_grad_x,
                                double kappa, const SolverSettings& settings = {}) {
  if (!(kappa > 0.0)) throw std::invalid_argument("fd_gradients: kappa must be positive");
  const SolverSettings inner = detail::fd_inner_settings(settings, kappa);
  const auto solution = [&](const ElasticProblem& pb) {
    return detail::relaxed_elastic_solution(pb, kappa, inner);
  };
  return detail::fd_gradients_impl(prob, loss_grad_x, kappa, settings, solution, false);
}

}  // namespace smoothqp
