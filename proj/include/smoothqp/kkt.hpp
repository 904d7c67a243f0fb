#pragma once

#include <optional>
#include <utility>

#include "smoothqp/dense.hpp"
#include "smoothqp/problem.hpp"

namespace smoothqp {

/// Newton step for the standard QP, in the same variable order as the
/// 4-block KKT system rows (x, s, z, y).
struct StepDeltas {
  Vec dx;
  Vec ds;
  Vec dz;
  Vec dy;
};

/// Newton step for the elastic QP (x, t, s₁, s₂, z₁, z₂).
struct ElasticStepDeltas {
  Vec dx;
  Vec dt;
  Vec ds1;
  Vec ds2;
  Vec dz1;
  Vec dz2;
};

namespace detail {
inline Mat solve_matrix(const PdFactorization& f, const Mat& rhs) {
  Mat x = f.lower().triangularView<Eigen::Lower>().solve(rhs);
  f.lower().triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}
}  // namespace detail

/// Factorizations for the 4-block KKT matrix
///
///   [ Q    0     Gᵀ   Aᵀ ] [Δx]   [u₁]
///   [ 0    D(z)  D(s) 0  ] [Δs] = [u₂]
///   [ G    I     0    0  ] [Δz]   [u₃]
///   [ A    0     0    0  ] [Δy]   [u₄]
///
/// reduced by block elimination to H = Q + GᵀP⁻¹G with P = D(s ⊘ z), and
/// F = A H⁻¹ Aᵀ when equality constraints are present. Both factorizations
/// are cached so that several right-hand sides (predictor and corrector)
/// reuse them within one interior-point iteration. A workspace is only valid
/// for the (s, z) it was built from.
class StandardKktWorkspace {
 public:
  StandardKktWorkspace(const QpProblem& prob, Vec s, Vec z, Vec p_inv,
                       PdFactorization h_factor, std::optional<PdFactorization> f_factor)
      : prob_(&prob),
        s_(std::move(s)),
        z_(std::move(z)),
        p_inv_(std::move(p_inv)),
        h_factor_(std::move(h_factor)),
        f_factor_(std::move(f_factor)) {}

  const QpProblem& problem() const { return *prob_; }
  const Vec& s() const { return s_; }
  const Vec& z() const { return z_; }
  const Vec& p_inv() const { return p_inv_; }
  const PdFactorization& h_factor() const { return h_factor_; }
  const std::optional<PdFactorization>& f_factor() const { return f_factor_; }

 private:
  const QpProblem* prob_;
  Vec s_;
  Vec z_;
  Vec p_inv_;  // diagonal of P⁻¹ = z ⊘ s
  PdFactorization h_factor_;
  std::optional<PdFactorization> f_factor_;
};

/// Builds the workspace for the current strictly positive (s, z). Throws
/// NotPositiveDefinite if H or F is degenerate (rank-deficient A, or Q not
/// positive definite on the relevant subspace).
inline StandardKktWorkspace build_standard_workspace(const QpProblem& prob, const Vec& s,
                                                     const Vec& z) {
  if (s.size() != prob.p() || z.size() != prob.p()) {
    throw DimensionMismatch("build_standard_workspace: s/z must have length p");
  }
  Vec p_inv = prob.p() > 0 ? div(z, s) : Vec(0);
  Mat H = prob.Q;
  if (prob.p() > 0) H += prob.G.transpose() * p_inv.asDiagonal() * prob.G;
  PdFactorization h_factor = factor_pd(H);
  std::optional<PdFactorization> f_factor;
  if (prob.m() > 0) {
    const Mat hinv_at = detail::solve_matrix(h_factor, prob.A.transpose());
    f_factor = factor_pd(prob.A * hinv_at);
  }
  return StandardKktWorkspace(prob, s, z, std::move(p_inv), std::move(h_factor),
                              std::move(f_factor));
}

/// Solves the 4-block system for one right-hand side (u₁, u₂, u₃, u₄).
inline StepDeltas solve_kkt(const StandardKktWorkspace& ws, const Vec& u1, const Vec& u2,
                            const Vec& u3, const Vec& u4) {
  const QpProblem& prob = ws.problem();
  if (u1.size() != prob.n() || u2.size() != prob.p() || u3.size() != prob.p() ||
      u4.size() != prob.m()) {
    throw DimensionMismatch("solve_kkt: right-hand-side block lengths do not match problem");
  }

  StepDeltas d;
  Vec p1 = u1;
  Vec r2;
  if (prob.p() > 0) {
    r2 = u3 - div(u2, ws.z());
    p1 += prob.G.transpose() * mul(ws.p_inv(), r2);
  }

  if (prob.m() > 0) {
    const Vec hp1 = ws.h_factor().solve(p1);
    d.dy = ws.f_factor()->solve(prob.A * hp1 - u4);
    d.dx = ws.h_factor().solve(p1 - prob.A.transpose() * d.dy);
  } else {
    d.dy = Vec(0);
    d.dx = ws.h_factor().solve(p1);
  }

  if (prob.p() > 0) {
    d.ds = u3 - prob.G * d.dx;
    d.dz = div(u2 - mul(ws.z(), d.ds), ws.s());
  } else {
    d.ds = Vec(0);
    d.dz = Vec(0);
  }
  return d;
}

/// Factorization for the 6-block elastic KKT matrix
///
///   [ Q   0   0    0    0    Gᵀ ] [Δx ]   [r₁]
///   [ 0   0   0    0   −I   −I  ] [Δt ]   [r₂]
///   [ 0   0   Z₁   0    S₁   0  ] [Δs₁] = [r₃]
///   [ 0   0   0    Z₂   0    S₂ ] [Δs₂]   [r₄]
///   [ 0  −I   I    0    0    0  ] [Δz₁]   [r₅]
///   [ G  −I   0    I    0    0  ] [Δz₂]   [r₆]
///
/// reduced to a single n×n positive-definite factorization of
/// Q + GᵀA₃⁻¹G with A₃ = D(a₁ + a₂), a₁ = s₁ ⊘ z₁, a₂ = s₂ ⊘ z₂
/// (see docs/derivations.md for the elimination).
class ElasticKktWorkspace {
 public:
  ElasticKktWorkspace(const ElasticProblem& prob, Vec s1, Vec s2, Vec z1, Vec z2,
                      Vec a3_inv, PdFactorization k_factor)
      : prob_(&prob),
        s1_(std::move(s1)),
        s2_(std::move(s2)),
        z1_(std::move(z1)),
        z2_(std::move(z2)),
        a3_inv_(std::move(a3_inv)),
        k_factor_(std::move(k_factor)) {}

  const ElasticProblem& problem() const { return *prob_; }
  const Vec& s1() const { return s1_; }
  const Vec& s2() const { return s2_; }
  const Vec& z1() const { return z1_; }
  const Vec& z2() const { return z2_; }
  const Vec& a3_inv() const { return a3_inv_; }
  const PdFactorization& k_factor() const { return k_factor_; }

 private:
  const ElasticProblem* prob_;
  Vec s1_, s2_, z1_, z2_;
  Vec a3_inv_;  // diagonal of A₃⁻¹
  PdFactorization k_factor_;
};

inline ElasticKktWorkspace build_elastic_workspace(const ElasticProblem& prob, const Vec& s1,
                                                   const Vec& s2, const Vec& z1,
                                                   const Vec& z2) {
  const Eigen::Index p = prob.p();
  if (s1.size() != p || s2.size() != p || z1.size() != p || z2.size() != p) {
    throw DimensionMismatch("build_elastic_workspace: slack/dual vectors must have length p");
  }
  Vec a3_inv(p);
  if (p > 0) {
    const Vec a3 = div(s1, z1) + div(s2, z2);
    a3_inv = div(Vec::Ones(p), a3);
  }
  Mat K = prob.Q;
  if (p > 0) K += prob.G.transpose() * a3_inv.asDiagonal() * prob.G;
  PdFactorization k_factor = factor_pd(K);
  return ElasticKktWorkspace(prob, s1, s2, z1, z2, std::move(a3_inv), std::move(k_factor));
}

/// Solves the 6-block system for one right-hand side (r₁, …, r₆). The only
/// factorized matrix is the cached n×n one; everything else is diagonal.
inline ElasticStepDeltas elastic_kkt(const ElasticKktWorkspace& ws, const Vec& r1,
                                     const Vec& r2, const Vec& r3, const Vec& r4,
                                     const Vec& r5, const Vec& r6) {
  const ElasticProblem& prob = ws.problem();
  const Eigen::Index p = prob.p();
  if (r1.size() != prob.n() || r2.size() != p || r3.size() != p || r4.size() != p ||
      r5.size() != p || r6.size() != p) {
    throw DimensionMismatch("elastic_kkt: right-hand-side block lengths do not match problem");
  }

  ElasticStepDeltas d;
  if (p == 0) {
    d.dx = ws.k_factor().solve(r1);
    d.dt = d.ds1 = d.ds2 = d.dz1 = d.dz2 = Vec(0);
    return d;
  }

  const Vec w1 = div(r3, ws.z1());
  const Vec w2 = div(r4, ws.z2());
  const Vec p1 = r5 - r6 + w2 - w1 - div(mul(ws.s1(), r2), ws.z1());

  d.dx = ws.k_factor().solve(r1 - prob.G.transpose() * mul(ws.a3_inv(), p1));
  d.dz2 = mul(ws.a3_inv(), p1 + prob.G * d.dx);
  d.dz1 = -r2 - d.dz2;
  d.ds1 = div(r3 - mul(ws.s1(), d.dz1), ws.z1());
  d.ds2 = div(r4 - mul(ws.s2(), d.dz2), ws.z2());
  d.dt = d.ds1 - r5;
  return d;
}

}  // namespace smoothqp
