#pragma once

#include <stdexcept>

#include "smoothqp/solver.hpp"

namespace smoothqp {

/// Thrown when relaxation is requested at a κ below the iterate's current
/// duality measure. Relaxing raises the barrier level; driving it down is the
/// solver's job, not the relaxation's.
struct KappaBelowCurrent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void check_relax_entry(const Vec& s, const Vec& z, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("relax: kappa must be positive");
  if (!strictly_positive(s) || !strictly_positive(z)) {
    throw std::invalid_argument("relax: iterate slacks and duals must be strictly positive");
  }
  const double mu = duality_measure(s, z);
  if (kappa < mu) {
    throw KappaBelowCurrent("relax: kappa " + std::to_string(kappa) +
                            " is below the current duality measure " + std::to_string(mu));
  }
}

// Pre-balances a complementarity pair toward its κ-target before the Newton
// loop. A converged iterate has collapsed entries (sᵢzᵢ ≈ 0 with one or both
// near zero); linearizing sᵢzᵢ = κ there overshoots by orders of magnitude
// and the fraction-to-boundary damping then needs many steps to recover.
// Both s and z enter every other KKT row linearly, so Newton absorbs the
// shift in a single step.
inline void balance_pair(Vec& s, Vec& z, double kappa) {
  const double root = std::sqrt(kappa);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double s_floor = std::min(root, kappa / z[i]);
    const double z_floor = std::min(root, kappa / s[i]);
    s[i] = std::max(s[i], s_floor);
    z[i] = std::max(z[i], z_floor);
  }
}

}  // namespace detail

/// Moves a converged iterate onto the barrier central path at level κ by
/// Newton iterations on the relaxed KKT conditions (complementarity
/// s ⊙ z = κ𝟏 instead of 0). Steps are full Newton directions scaled by
/// step_scale times the s/z linesearches. Converges in a handful of steps;
/// throws SolveFailure(MaxIters) past relax_max_iters.
inline PrimalDualIterate relax_qp(const QpProblem& prob, const PrimalDualIterate& start,
                                  double kappa, const SolverSettings& settings = {}) {
  detail::check_relax_entry(start.s, start.z, kappa);
  PrimalDualIterate it = start;
  if (prob.p() > 0) detail::balance_pair(it.s, it.z, kappa);
  for (int iter = 0; iter <= settings.relax_max_iters; ++iter) {
    detail::QpResiduals r = detail::qp_residuals(prob, it);
    if (prob.p() > 0) {
      r.r_comp.array() -= kappa;
      r.norm = std::max({detail::inf_norm(r.r_stat), detail::inf_norm(r.r_comp),
                         detail::inf_norm(r.r_pfeas1), detail::inf_norm(r.r_pfeas2)});
    }
    if (r.norm < settings.tol) return it;
    if (iter == settings.relax_max_iters) break;

    const StandardKktWorkspace ws = build_standard_workspace(prob, it.s, it.z);
    const StepDeltas d = solve_kkt(ws, -r.r_stat, -r.r_comp, -r.r_pfeas1, -r.r_pfeas2);
    const double alpha =
        prob.p() > 0
            ? settings.step_scale * std::min(linesearch(it.s, d.ds), linesearch(it.z, d.dz))
            : 1.0;
    it.x += alpha * d.dx;
    it.s += alpha * d.ds;
    it.z += alpha * d.dz;
    it.y += alpha * d.dy;

    if (!detail::within_cap(it.x) || !detail::strictly_positive(it.s) ||
        !detail::strictly_positive(it.z)) {
      throw SolveFailure(Status::NumericalFailure, "relax_qp: iterate left the interior");
    }
  }
  throw SolveFailure(Status::MaxIters, "relax_qp: no convergence within relax_max_iters");
}

/// Elastic counterpart: Newton iterations on the elastic KKT conditions with
/// both complementarity blocks relaxed to κ.
inline ElasticIterate relax_qp_elastic(const ElasticProblem& prob, const ElasticIterate& start,
                                       double kappa, const SolverSettings& settings = {}) {
  const Eigen::Index p = prob.p();
  Vec s_stacked(2 * p), z_stacked(2 * p);
  s_stacked << start.s1, start.s2;
  z_stacked << start.z1, start.z2;
  detail::check_relax_entry(s_stacked, z_stacked, kappa);

  ElasticIterate it = start;
  if (p > 0) {
    detail::balance_pair(it.s1, it.z1, kappa);
    detail::balance_pair(it.s2, it.z2, kappa);
  }
  for (int iter = 0; iter <= settings.relax_max_iters; ++iter) {
    detail::ElasticResiduals r = detail::elastic_residuals(prob, it);
    if (p > 0) {
      r.r3.array() -= kappa;
      r.r4.array() -= kappa;
      r.norm = std::max({detail::inf_norm(r.r1), detail::inf_norm(r.r2),
                         detail::inf_norm(r.r3), detail::inf_norm(r.r4),
                         detail::inf_norm(r.r5), detail::inf_norm(r.r6)});
    }
    if (r.norm < settings.tol) return it;
    if (iter == settings.relax_max_iters) break;

    const ElasticKktWorkspace ws = build_elastic_workspace(prob, it.s1, it.s2, it.z1, it.z2);
    const ElasticStepDeltas d = elastic_kkt(ws, -r.r1, -r.r2, -r.r3, -r.r4, -r.r5, -r.r6);

    double alpha = 1.0;
    if (p > 0) {
      Vec ds(2 * p), dz(2 * p);
      ds << d.ds1, d.ds2;
      dz << d.dz1, d.dz2;
      Vec s_cur(2 * p), z_cur(2 * p);
      s_cur << it.s1, it.s2;
      z_cur << it.z1, it.z2;
      alpha = settings.step_scale * std::min(linesearch(s_cur, ds), linesearch(z_cur, dz));
    }
    it.x += alpha * d.dx;
    it.t += alpha * d.dt;
    it.s1 += alpha * d.ds1;
    it.s2 += alpha * d.ds2;
    it.z1 += alpha * d.dz1;
    it.z2 += alpha * d.dz2;

    if (!detail::within_cap(it.x) || !detail::strictly_positive(it.s1) ||
        !detail::strictly_positive(it.s2) || !detail::strictly_positive(it.z1) ||
        !detail::strictly_positive(it.z2)) {
      throw SolveFailure(Status::NumericalFailure, "relax_qp_elastic: iterate left the interior");
    }
  }
  throw SolveFailure(Status::MaxIters, "relax_qp_elastic: no convergence within relax_max_iters");
}

}  // namespace smoothqp
