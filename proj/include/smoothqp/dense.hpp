#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace smoothqp {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Pivot floor for the positive-definite factorization. A pivot at or below
/// this value aborts the factorization: the matrix is treated as degenerate.
inline constexpr double kPivotFloor = 1e-13;

/// Denominator floor for elementwise division. An entry below this magnitude
/// signals that a slack or dual has collapsed to zero.
inline constexpr double kDivisionFloor = 1e-14;

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivisionNearZero : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline long& pd_factorization_counter() {
  thread_local long count = 0;
  return count;
}
}  // namespace detail

/// Number of positive-definite factorizations performed on this thread since
/// the last reset. Used by instrumentation tests that count factorizations
/// per solver iteration.
inline long pd_factorization_count() { return detail::pd_factorization_counter(); }

inline void reset_pd_factorization_count() { detail::pd_factorization_counter() = 0; }

/// Cached Cholesky factorization M = L Lᵀ of a symmetric positive-definite
/// matrix. Immutable once built; solves may be issued from any thread.
class PdFactorization {
 public:
  PdFactorization() = default;

  Eigen::Index dim() const { return lower_.rows(); }

  const Mat& lower() const { return lower_; }

  /// Solves M x = r by forward/back substitution.
  Vec solve(const Vec& r) const {
    if (r.size() != lower_.rows()) {
      throw DimensionMismatch("solve_pd: rhs length " + std::to_string(r.size()) +
                              " does not match factor dimension " +
                              std::to_string(lower_.rows()));
    }
    Vec x = lower_.triangularView<Eigen::Lower>().solve(r);
    lower_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
    return x;
  }

  friend PdFactorization factor_pd(const Mat& M, double pivot_floor);

 private:
  explicit PdFactorization(Mat lower) : lower_(std::move(lower)) {}

  Mat lower_;
};

/// Factors a symmetric positive-definite matrix. Only the lower triangle of M
/// is referenced. Throws NotPositiveDefinite when a pivot falls at or below
/// pivot_floor, which in the solvers signals a degenerate KKT system.
inline PdFactorization factor_pd(const Mat& M, double pivot_floor = kPivotFloor) {
  if (M.rows() != M.cols()) {
    throw DimensionMismatch("factor_pd: matrix is " + std::to_string(M.rows()) + "x" +
                            std::to_string(M.cols()));
  }
  const Eigen::Index n = M.rows();
  Mat L = Mat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = M(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > pivot_floor)) {
      throw NotPositiveDefinite("factor_pd: pivot " + std::to_string(d) + " at index " +
                                std::to_string(j) + " is at or below the floor");
    }
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = M(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= L(i, k) * L(j, k);
      L(i, j) = v / ljj;
    }
  }
  ++detail::pd_factorization_counter();
  return PdFactorization(std::move(L));
}

inline Vec solve_pd(const PdFactorization& f, const Vec& r) { return f.solve(r); }

namespace detail {
inline void require_same_length(const Vec& v, const Vec& w, const char* op) {
  if (v.size() != w.size()) {
    throw DimensionMismatch(std::string(op) + ": lengths " + std::to_string(v.size()) +
                            " and " + std::to_string(w.size()) + " differ");
  }
}
}  // namespace detail

/// Elementwise product v ⊙ w.
inline Vec mul(const Vec& v, const Vec& w) {
  detail::require_same_length(v, w, "mul");
  return v.cwiseProduct(w);
}

/// Elementwise quotient v ⊘ w. Throws DivisionNearZero when a denominator
/// entry falls below the floor, which signals loss of strict interiority.
inline Vec div(const Vec& v, const Vec& w, double floor = kDivisionFloor) {
  detail::require_same_length(v, w, "div");
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (std::abs(w[i]) < floor) {
      throw DivisionNearZero("div: denominator entry " + std::to_string(i) +
                             " has magnitude below the floor");
    }
  }
  return v.cwiseQuotient(w);
}

/// a·x + y.
inline Vec axpy(double a, const Vec& x, const Vec& y) {
  detail::require_same_length(x, y, "axpy");
  return a * x + y;
}

}  // namespace smoothqp
