#pragma once

#include <algorithm>
#include <cmath>

#include "smoothqp/kkt.hpp"

namespace smoothqp {

/// Largest α ∈ (0, 1] keeping v + αΔv ≥ 0 for strictly positive v, in closed
/// form: min(1, min over {i : Δvᵢ < 0} of −vᵢ/Δvᵢ). Ratios are taken only
/// over strictly negative direction entries; an empty set yields α = 1.
inline double linesearch(const Vec& v, const Vec& dv) {
  detail::require_same_length(v, dv, "linesearch");
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

namespace detail {

inline constexpr double kDivergenceCap = 1e12;

// Slack/dual shift rules. The raw z from the analytic initialization may have
// entries of either sign; s starts at −z and both are shifted so every entry
// is at least 1 unless already strictly positive.
inline Vec shift_slack_from_dual(const Vec& z) {
  if (z.size() == 0) return z;
  Vec s = -z;
  const double alpha_p = z.maxCoeff();
  if (alpha_p >= 0.0) s.array() += 1.0 + alpha_p;
  return s;
}

inline Vec shift_dual(const Vec& z) {
  if (z.size() == 0) return z;
  Vec out = z;
  const double alpha_d = -z.minCoeff();
  if (alpha_d >= 0.0) out.array() += 1.0 + alpha_d;
  return out;
}

inline bool within_cap(const Vec& v) {
  return v.allFinite() && (v.size() == 0 || v.cwiseAbs().maxCoeff() <= kDivergenceCap);
}

inline bool strictly_positive(const Vec& v) {
  return v.size() == 0 || v.minCoeff() > 0.0;
}

inline double inf_norm(const Vec& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

struct QpResiduals {
  Vec r_stat;   // Qx + q + Gᵀz + Aᵀy
  Vec r_comp;   // s ⊙ z
  Vec r_pfeas1; // Gx + s − h
  Vec r_pfeas2; // Ax − b
  double norm = 0.0;
};

inline QpResiduals qp_residuals(const QpProblem& prob, const PrimalDualIterate& it) {
  QpResiduals r;
  r.r_stat = prob.Q * it.x + prob.q;
  if (prob.p() > 0) r.r_stat += prob.G.transpose() * it.z;
  if (prob.m() > 0) r.r_stat += prob.A.transpose() * it.y;
  r.r_comp = prob.p() > 0 ? mul(it.s, it.z) : Vec(0);
  r.r_pfeas1 = prob.p() > 0 ? Vec(prob.G * it.x + it.s - prob.h) : Vec(0);
  r.r_pfeas2 = prob.m() > 0 ? Vec(prob.A * it.x - prob.b) : Vec(0);
  r.norm = std::max({inf_norm(r.r_stat), inf_norm(r.r_comp), inf_norm(r.r_pfeas1),
                     inf_norm(r.r_pfeas2)});
  return r;
}

struct ElasticResiduals {
  Vec r1;  // Qx + q + Gᵀz₂
  Vec r2;  // −z₁ − z₂ + ρ
  Vec r3;  // s₁ ⊙ z₁
  Vec r4;  // s₂ ⊙ z₂
  Vec r5;  // −t + s₁
  Vec r6;  // Gx − t + s₂ − h
  double norm = 0.0;
};

inline ElasticResiduals elastic_residuals(const ElasticProblem& prob,
                                          const ElasticIterate& it) {
  ElasticResiduals r;
  r.r1 = prob.Q * it.x + prob.q;
  if (prob.p() > 0) r.r1 += prob.G.transpose() * it.z2;
  r.r2 = -it.z1 - it.z2 + prob.rho;
  r.r3 = prob.p() > 0 ? mul(it.s1, it.z1) : Vec(0);
  r.r4 = prob.p() > 0 ? mul(it.s2, it.z2) : Vec(0);
  r.r5 = -it.t + it.s1;
  r.r6 = prob.p() > 0 ? Vec(prob.G * it.x - it.t + it.s2 - prob.h) : Vec(0);
  r.norm = std::max({inf_norm(r.r1), inf_norm(r.r2), inf_norm(r.r3), inf_norm(r.r4),
                     inf_norm(r.r5), inf_norm(r.r6)});
  return r;
}

inline double duality_measure(const Vec& s, const Vec& z) {
  return s.size() == 0 ? 0.0 : s.dot(z) / static_cast<double>(s.size());
}

}  // namespace detail

/// Analytic starting point for the standard solver: with unit slack scaling
/// the 4-block system collapses to
///
///   [ Q  Aᵀ  Gᵀ ] [x]   [−q]
///   [ A  0   0  ] [y] = [ b]
///   [ G  0  −I  ] [z]   [ h]
///
/// after which s = −z and the shift rules make s, z strictly positive.
inline PrimalDualIterate initialize_qp(const QpProblem& prob) {
  const Vec ones = Vec::Ones(prob.p());
  const StandardKktWorkspace ws = build_standard_workspace(prob, ones, ones);
  const StepDeltas d = solve_kkt(ws, -prob.q, Vec::Zero(prob.p()), prob.h, prob.b);
  PrimalDualIterate it;
  it.x = d.dx;
  it.y = d.dy;
  it.s = detail::shift_slack_from_dual(d.dz);
  it.z = detail::shift_dual(d.dz);
  return it;
}

/// Standard-QP solver: Mehrotra predictor-corrector on the KKT conditions,
/// with an affine predictor solve, centering parameter σ equal to the cubed
/// duality-gap ratio, and a corrector solve sharing the predictor's cached
/// factorizations. Steps are scaled by step_scale times the smaller of the s
/// and z linesearches so the iterate stays strictly interior.
inline SolveResult solve_qp(const QpProblem& prob, const SolverSettings& settings = {}) {
  validate_or_throw(prob);
  SolveResult res;
  PrimalDualIterate it;
  int steps = 0;
  try {
    it = initialize_qp(prob);
    while (true) {
      const detail::QpResiduals r = detail::qp_residuals(prob, it);
      res.residual_norm = r.norm;
      res.mu = detail::duality_measure(it.s, it.z);
      if (r.norm < settings.tol) {
        res.status = Status::Converged;
        break;
      }
      if (steps >= settings.max_iters) {
        res.status = Status::MaxIters;
        break;
      }

      const StandardKktWorkspace ws = build_standard_workspace(prob, it.s, it.z);
      const StepDeltas affine = solve_kkt(ws, -r.r_stat, -r.r_comp, -r.r_pfeas1, -r.r_pfeas2);

      StepDeltas step;
      double alpha;
      if (prob.p() > 0) {
        const double alpha_aff =
            std::min(linesearch(it.s, affine.ds), linesearch(it.z, affine.dz));
        const double stz = it.s.dot(it.z);
        const double mu = stz / static_cast<double>(it.s.size());
        const double gap_ratio =
            (it.s + alpha_aff * affine.ds).dot(it.z + alpha_aff * affine.dz) / stz;
        const double sigma = gap_ratio * gap_ratio * gap_ratio;
        const Vec r_comp_corr =
            r.r_comp - Vec::Constant(prob.p(), sigma * mu) + mul(affine.ds, affine.dz);
        step = solve_kkt(ws, -r.r_stat, -r_comp_corr, -r.r_pfeas1, -r.r_pfeas2);
        alpha = settings.step_scale *
                std::min(linesearch(it.s, step.ds), linesearch(it.z, step.dz));
      } else {
        // No inequality block: the KKT conditions are linear, so the affine
        // direction is the exact Newton step.
        step = affine;
        alpha = 1.0;
      }

      it.x += alpha * step.dx;
      it.s += alpha * step.ds;
      it.z += alpha * step.dz;
      it.y += alpha * step.dy;
      ++steps;

      if (!detail::within_cap(it.x) || !detail::within_cap(it.s) ||
          !detail::within_cap(it.z) || !detail::within_cap(it.y) ||
          !detail::strictly_positive(it.s) || !detail::strictly_positive(it.z)) {
        res.status = Status::NumericalFailure;
        break;
      }
    }
  } catch (const NotPositiveDefinite&) {
    res.status = Status::NumericalFailure;
  } catch (const DivisionNearZero&) {
    res.status = Status::NumericalFailure;
  }
  res.iterate = std::move(it);
  res.iterations = steps;
  return res;
}

/// Analytic starting point for the elastic solver, from the closed-form
/// solution of the equality-relaxed problem:
///
///   x  = (Q + ½GᵀG)⁻¹(−q − ½Gᵀ(ρ − h))
///   z₂ = ½(Gx + ρ − h),  z₁ = ρ − z₂,  t = −z₁,
///
/// followed by the same shift rules as the standard initialization applied to
/// the stacked z = (z₁, z₂). x and t keep their closed-form values.
inline ElasticIterate initialize_elastic(const ElasticProblem& prob) {
  const Eigen::Index p = prob.p();
  Mat K = prob.Q;
  Vec rhs = -prob.q;
  if (p > 0) {
    K += 0.5 * prob.G.transpose() * prob.G;
    rhs -= 0.5 * prob.G.transpose() * (prob.rho - prob.h);
  }
  const PdFactorization kf = factor_pd(K);

  ElasticIterate it;
  it.x = kf.solve(rhs);
  Vec z2 = p > 0 ? Vec(0.5 * (prob.G * it.x + prob.rho - prob.h)) : Vec(0);
  Vec z1 = prob.rho - z2;
  it.t = -z1;

  Vec z_stacked(2 * p);
  z_stacked << z1, z2;
  const Vec s_stacked = detail::shift_slack_from_dual(z_stacked);
  const Vec z_shifted = detail::shift_dual(z_stacked);
  it.s1 = s_stacked.head(p);
  it.s2 = s_stacked.tail(p);
  it.z1 = z_shifted.head(p);
  it.z2 = z_shifted.tail(p);
  return it;
}

/// Elastic-QP solver: the same predictor-corrector scheme run on the 6-block
/// KKT system. Every iteration performs exactly one n×n positive-definite
/// factorization (the cached elastic workspace), so the per-iteration cost
/// stays close to the standard solver's. The problem is feasible by
/// construction, so there is no infeasibility outcome.
inline ElasticSolveResult solve_qp_elastic(const ElasticProblem& prob,
                                           const SolverSettings& settings = {}) {
  validate_or_throw(prob);
  ElasticSolveResult res;
  ElasticIterate it;
  const Eigen::Index p = prob.p();
  int steps = 0;
  try {
    it = initialize_elastic(prob);
    while (true) {
      const detail::ElasticResiduals r = detail::elastic_residuals(prob, it);
      res.residual_norm = r.norm;
      Vec s_stacked(2 * p), z_stacked(2 * p);
      s_stacked << it.s1, it.s2;
      z_stacked << it.z1, it.z2;
      res.mu = detail::duality_measure(s_stacked, z_stacked);
      if (r.norm < settings.tol) {
        res.status = Status::Converged;
        break;
      }
      if (steps >= settings.max_iters) {
        res.status = Status::MaxIters;
        break;
      }

      const ElasticKktWorkspace ws = build_elastic_workspace(prob, it.s1, it.s2, it.z1, it.z2);
      const ElasticStepDeltas affine =
          elastic_kkt(ws, -r.r1, -r.r2, -r.r3, -r.r4, -r.r5, -r.r6);

      ElasticStepDeltas step;
      double alpha;
      if (p > 0) {
        Vec ds_aff(2 * p), dz_aff(2 * p);
        ds_aff << affine.ds1, affine.ds2;
        dz_aff << affine.dz1, affine.dz2;
        const double alpha_aff =
            std::min(linesearch(s_stacked, ds_aff), linesearch(z_stacked, dz_aff));
        const double stz = s_stacked.dot(z_stacked);
        const double mu = stz / static_cast<double>(2 * p);
        const double gap_ratio =
            (s_stacked + alpha_aff * ds_aff).dot(z_stacked + alpha_aff * dz_aff) / stz;
        const double sigma = gap_ratio * gap_ratio * gap_ratio;
        const Vec centering = Vec::Constant(p, sigma * mu);
        const Vec r3_corr = r.r3 - centering + mul(affine.ds1, affine.dz1);
        const Vec r4_corr = r.r4 - centering + mul(affine.ds2, affine.dz2);
        step = elastic_kkt(ws, -r.r1, -r.r2, -r3_corr, -r4_corr, -r.r5, -r.r6);
        Vec ds(2 * p), dz(2 * p);
        ds << step.ds1, step.ds2;
        dz << step.dz1, step.dz2;
        alpha = settings.step_scale *
                std::min(linesearch(s_stacked, ds), linesearch(z_stacked, dz));
      } else {
        step = affine;
        alpha = 1.0;
      }

      it.x += alpha * step.dx;
      it.t += alpha * step.dt;
      it.s1 += alpha * step.ds1;
      it.s2 += alpha * step.ds2;
      it.z1 += alpha * step.dz1;
      it.z2 += alpha * step.dz2;
      ++steps;

      const bool healthy = detail::within_cap(it.x) && detail::within_cap(it.t) &&
                           detail::within_cap(it.s1) && detail::within_cap(it.s2) &&
                           detail::within_cap(it.z1) && detail::within_cap(it.z2) &&
                           detail::strictly_positive(it.s1) &&
                           detail::strictly_positive(it.s2) &&
                           detail::strictly_positive(it.z1) &&
                           detail::strictly_positive(it.z2);
      if (!healthy) {
        res.status = Status::NumericalFailure;
        break;
      }
    }
  } catch (const NotPositiveDefinite&) {
    res.status = Status::NumericalFailure;
  } catch (const DivisionNearZero&) {
    res.status = Status::NumericalFailure;
  }
  res.iterate = std::move(it);
  res.iterations = steps;
  return res;
}

}  // namespace smoothqp
