#pragma once

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "smoothqp/dense.hpp"

namespace smoothqp {

/// Standard-form quadratic program
///
///   minimize   ½ xᵀQx + qᵀx
///   subject to A x = b,  G x ≤ h.
///
/// Empty A/b (m = 0) or G/h (p = 0) blocks are legal.
struct QpProblem {
  Mat Q;
  Vec q;
  Mat A;
  Vec b;
  Mat G;
  Vec h;

  Eigen::Index n() const { return q.size(); }
  Eigen::Index m() const { return b.size(); }
  Eigen::Index p() const { return h.size(); }

  double objective(const Vec& x) const { return 0.5 * x.dot(Q * x) + q.dot(x); }
};

/// Inequality-only QP with an ℓ1 penalty on constraint violation:
///
///   minimize   ½ xᵀQx + qᵀx + ρᵀ t
///   subject to G x − h ≤ t,  t ≥ 0,
///
/// which is always feasible. ρ must be strictly positive.
struct ElasticProblem {
  Mat Q;
  Vec q;
  Mat G;
  Vec h;
  Vec rho;

  Eigen::Index n() const { return q.size(); }
  Eigen::Index p() const { return h.size(); }

  double objective(const Vec& x, const Vec& t) const {
    return 0.5 * x.dot(Q * x) + q.dot(x) + rho.dot(t);
  }
};

/// Interior-point state for the standard QP. s and z stay strictly positive
/// while the solver iterates.
struct PrimalDualIterate {
  Vec x;
  Vec s;
  Vec z;
  Vec y;
};

/// Interior-point state for the elastic QP; all four slack/dual vectors stay
/// strictly positive while the solver iterates.
struct ElasticIterate {
  Vec x;
  Vec t;
  Vec s1;
  Vec s2;
  Vec z1;
  Vec z2;
};

struct SolverSettings {
  double tol = 1e-8;            ///< ∞-norm residual threshold
  int max_iters = 30;           ///< interior-point iteration cap
  double step_scale = 0.98;     ///< fraction-to-boundary factor
  double kappa_target = 1e-2;   ///< default relaxation level
  int relax_max_iters = 10;     ///< Newton cap for relaxation
  double fd_epsilon = 1e-5;     ///< finite-difference oracle step
};

enum class Status { Converged, MaxIters, NumericalFailure };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "Converged";
    case Status::MaxIters: return "MaxIters";
    case Status::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

struct SolveResult {
  PrimalDualIterate iterate;
  Status status = Status::NumericalFailure;
  int iterations = 0;
  double residual_norm = 0.0;
  double mu = 0.0;  ///< duality measure sᵀz / len(s)
};

struct ElasticSolveResult {
  ElasticIterate iterate;
  Status status = Status::NumericalFailure;
  int iterations = 0;
  double residual_norm = 0.0;
  double mu = 0.0;  ///< duality measure over the stacked (s₁,s₂), (z₁,z₂)
};

/// Gradients of a scalar loss with respect to every problem matrix. For
/// elastic problems the A and b blocks are empty.
struct QpGradients {
  Mat grad_Q;
  Vec grad_q;
  Mat grad_A;
  Vec grad_b;
  Mat grad_G;
  Vec grad_h;
};

/// Thrown when a result-returning routine (relaxation, the fd oracle's inner
/// solves) fails; carries the status that a SolveResult would have reported.
struct SolveFailure : std::runtime_error {
  SolveFailure(Status st, const std::string& what) : std::runtime_error(what), status(st) {}
  Status status;
};

struct ValidationFailed : std::runtime_error {
  explicit ValidationFailed(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), issues(std::move(problems)) {}

  std::vector<std::string> issues;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "validation failed:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
};

namespace detail {

inline bool all_finite(const Mat& M) { return M.allFinite(); }

inline void check_finite(std::vector<std::string>& issues, const Mat& M, const char* name) {
  if (!M.allFinite()) issues.push_back(std::string(name) + " contains NaN or Inf entries");
}

inline void check_finite(std::vector<std::string>& issues, const Vec& v, const char* name) {
  if (!v.allFinite()) issues.push_back(std::string(name) + " contains NaN or Inf entries");
}

inline void check_cost(std::vector<std::string>& issues, const Mat& Q, const Vec& q) {
  const Eigen::Index n = q.size();
  if (Q.rows() != Q.cols()) {
    issues.push_back("Q must be square, got " + std::to_string(Q.rows()) + "x" +
                     std::to_string(Q.cols()));
    return;
  }
  if (Q.rows() != n) {
    issues.push_back("Q is " + std::to_string(Q.rows()) + "x" + std::to_string(Q.cols()) +
                     " but q has length " + std::to_string(n));
    return;
  }
  if (!Q.allFinite()) return;  // reported separately
  const double scale = 1.0 + Q.cwiseAbs().maxCoeff();
  const double asym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * scale) {
    issues.push_back("Q is not symmetric: max |Q - Qᵀ| = " + std::to_string(asym));
    return;
  }
  // PSD probe: a tiny diagonal shift turns semidefinite into definite without
  // masking a genuinely indefinite matrix at this scale.
  try {
    Mat shifted = 0.5 * (Q + Q.transpose());
    shifted.diagonal().array() += 1e-10;
    factor_pd(shifted);
  } catch (const NotPositiveDefinite&) {
    issues.push_back("Q is not positive semidefinite");
  }
}

inline void check_block(std::vector<std::string>& issues, const Mat& M, const Vec& v,
                        Eigen::Index n, const char* mat_name, const char* vec_name) {
  if (M.rows() != v.size()) {
    issues.push_back(std::string(mat_name) + " has " + std::to_string(M.rows()) +
                     " rows but " + vec_name + " has length " + std::to_string(v.size()));
  }
  if (M.rows() > 0 && M.cols() != n) {
    issues.push_back(std::string(mat_name) + " has " + std::to_string(M.cols()) +
                     " columns, expected " + std::to_string(n));
  }
}

}  // namespace detail

/// Returns every dimension/symmetry/positivity violation found, not just the
/// first. An empty list means the problem is well formed. Pure function.
inline std::vector<std::string> validate(const QpProblem& prob) {
  std::vector<std::string> issues;
  detail::check_finite(issues, prob.Q, "Q");
  detail::check_finite(issues, prob.q, "q");
  detail::check_finite(issues, prob.A, "A");
  detail::check_finite(issues, prob.b, "b");
  detail::check_finite(issues, prob.G, "G");
  detail::check_finite(issues, prob.h, "h");
  detail::check_cost(issues, prob.Q, prob.q);
  detail::check_block(issues, prob.A, prob.b, prob.n(), "A", "b");
  detail::check_block(issues, prob.G, prob.h, prob.n(), "G", "h");
  return issues;
}

inline std::vector<std::string> validate(const ElasticProblem& prob) {
  std::vector<std::string> issues;
  detail::check_finite(issues, prob.Q, "Q");
  detail::check_finite(issues, prob.q, "q");
  detail::check_finite(issues, prob.G, "G");
  detail::check_finite(issues, prob.h, "h");
  detail::check_finite(issues, prob.rho, "rho");
  detail::check_cost(issues, prob.Q, prob.q);
  detail::check_block(issues, prob.G, prob.h, prob.n(), "G", "h");
  if (prob.rho.size() != prob.p()) {
    issues.push_back("rho has length " + std::to_string(prob.rho.size()) + ", expected " +
                     std::to_string(prob.p()));
  } else if (prob.rho.size() > 0 && !(prob.rho.minCoeff() > 0.0)) {
    issues.push_back("rho must be strictly positive");
  }
  return issues;
}

template <class Problem>
inline void validate_or_throw(const Problem& prob) {
  auto issues = validate(prob);
  if (!issues.empty()) throw ValidationFailed(std::move(issues));
}

}  // namespace smoothqp
