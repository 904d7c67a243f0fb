#include <catch2/catch_amalgamated.hpp>

#include "smoothqp/relax.hpp"
#include "support/test_support.hpp"

using namespace smoothqp;
using testsupport::Rng;

namespace {

QpProblem one_dim_problem() {
  QpProblem prob;
  prob.Q = Mat::Identity(1, 1);
  prob.q = Vec::Zero(1);
  prob.A = Mat(0, 1);
  prob.b = Vec(0);
  prob.G = Mat::Constant(1, 1, -1.0);
  prob.h = Vec::Constant(1, -1.0);
  return prob;
}

ElasticProblem infeasible_pair() {
  ElasticProblem prob;
  prob.Q = Mat::Identity(1, 1);
  prob.q = Vec::Zero(1);
  prob.G = Mat(2, 1);
  prob.G << 1.0, -1.0;
  prob.h = Vec::Constant(2, -1.0);
  prob.rho = Vec::Constant(2, 10.0);
  return prob;
}

// On the 1-D problem the relaxed conditions reduce to x(x − 1) = κ, so the
// relaxed primal is the positive quadratic root.
double relaxed_root(double kappa) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * kappa)); }

}  // namespace

TEST_CASE("relaxed 1-D solution follows the quadratic root", "[relax]") {
  const QpProblem prob = one_dim_problem();
  SolverSettings settings;
  settings.tol = 1e-10;
  const SolveResult solved = solve_qp(prob, settings);
  REQUIRE(solved.status == Status::Converged);

  for (double kappa : {1e-4, 1e-3, 1e-2, 1e-1}) {
    const PrimalDualIterate relaxed = relax_qp(prob, solved.iterate, kappa, settings);
    REQUIRE(relaxed.x[0] == Catch::Approx(relaxed_root(kappa)).margin(1e-8));
    REQUIRE(relaxed.s[0] * relaxed.z[0] == Catch::Approx(kappa).margin(1e-9));
  }
}

TEST_CASE("relaxing to the current duality measure is a near fixed point", "[relax]") {
  const QpProblem prob = one_dim_problem();
  const SolveResult solved = solve_qp(prob);
  REQUIRE(solved.status == Status::Converged);
  REQUIRE(solved.mu > 0.0);

  SolverSettings tight_cap;
  tight_cap.relax_max_iters = 3;
  REQUIRE_NOTHROW(relax_qp(prob, solved.iterate, solved.mu, tight_cap));
}

TEST_CASE("relaxation is continuous at kappa near zero", "[relax]") {
  const QpProblem prob = one_dim_problem();
  SolverSettings settings;
  settings.tol = 1e-12;
  const SolveResult solved = solve_qp(prob, settings);
  REQUIRE(solved.status == Status::Converged);
  REQUIRE(solved.mu <= 1e-10);

  settings.tol = 1e-10;
  const PrimalDualIterate relaxed = relax_qp(prob, solved.iterate, 1e-10, settings);
  REQUIRE(std::abs(relaxed.x[0] - 1.0) <= 1e-6);
}

TEST_CASE("relaxing below the current duality measure is rejected", "[relax]") {
  const QpProblem prob = one_dim_problem();
  const SolveResult solved = solve_qp(prob);
  REQUIRE(solved.status == Status::Converged);
  REQUIRE_THROWS_AS(relax_qp(prob, solved.iterate, 0.5 * solved.mu, SolverSettings{}),
                    KappaBelowCurrent);
  REQUIRE_THROWS_AS(relax_qp(prob, solved.iterate, 0.0, SolverSettings{}),
                    std::invalid_argument);
}

TEST_CASE("relaxation does not mutate its input iterate", "[relax]") {
  const QpProblem prob = one_dim_problem();
  const SolveResult solved = solve_qp(prob);
  const PrimalDualIterate before = solved.iterate;
  (void)relax_qp(prob, solved.iterate, 1e-2, SolverSettings{});
  REQUIRE(solved.iterate.x == before.x);
  REQUIRE(solved.iterate.s == before.s);
  REQUIRE(solved.iterate.z == before.z);
}

TEST_CASE("relaxed primal is monotone in kappa", "[relax][property]") {
  const QpProblem prob = one_dim_problem();
  SolverSettings settings;
  settings.tol = 1e-10;
  const SolveResult solved = solve_qp(prob, settings);

  double previous = solved.iterate.x[0];
  for (double kappa : {1e-4, 1e-3, 1e-2, 1e-1}) {
    const PrimalDualIterate relaxed = relax_qp(prob, solved.iterate, kappa, settings);
    REQUIRE(relaxed.x[0] > previous);
    previous = relaxed.x[0];
  }
}

TEST_CASE("central-path membership and feasibility after relaxation",
          "[relax][property]") {
  Rng rng(101);
  const SolverSettings settings;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 6);
    const Eigen::Index m = static_cast<Eigen::Index>(rng() % 3);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng() % 6);
    const QpProblem prob = testsupport::random_feasible_qp(rng, n, m, p);
    const SolveResult solved = solve_qp(prob, settings);
    REQUIRE(solved.status == Status::Converged);

    const double kappa = 1e-2;
    const PrimalDualIterate relaxed = relax_qp(prob, solved.iterate, kappa, settings);
    const Vec products = relaxed.s.cwiseProduct(relaxed.z);
    REQUIRE((products.array() - kappa).abs().maxCoeff() < settings.tol);
    REQUIRE((prob.G * relaxed.x + relaxed.s - prob.h).cwiseAbs().maxCoeff() < settings.tol);
    if (m > 0) {
      REQUIRE((prob.A * relaxed.x - prob.b).cwiseAbs().maxCoeff() < settings.tol);
    }
  }
}

TEST_CASE("elastic relaxation reaches both product blocks", "[relax][elastic]") {
  const ElasticProblem prob = infeasible_pair();
  const ElasticSolveResult solved = solve_qp_elastic(prob);
  REQUIRE(solved.status == Status::Converged);

  const double kappa = 1e-2;
  const SolverSettings settings;
  const ElasticIterate relaxed = relax_qp_elastic(prob, solved.iterate, kappa, settings);
  REQUIRE((relaxed.s1.cwiseProduct(relaxed.z1).array() - kappa).abs().maxCoeff() <
          settings.tol);
  REQUIRE((relaxed.s2.cwiseProduct(relaxed.z2).array() - kappa).abs().maxCoeff() <
          settings.tol);
}

TEST_CASE("elastic relaxation near fixed point and continuity", "[relax][elastic]") {
  const ElasticProblem prob = infeasible_pair();
  SolverSettings settings;
  settings.tol = 1e-12;
  const ElasticSolveResult solved = solve_qp_elastic(prob, settings);
  REQUIRE(solved.status == Status::Converged);
  REQUIRE(solved.mu > 0.0);

  SolverSettings tight_cap;
  tight_cap.relax_max_iters = 3;
  REQUIRE_NOTHROW(relax_qp_elastic(prob, solved.iterate, std::max(solved.mu, 1e-12),
                                   tight_cap));

  settings.tol = 1e-10;
  const ElasticIterate near_zero =
      relax_qp_elastic(prob, solved.iterate, 1e-10, settings);
  REQUIRE(std::abs(near_zero.x[0] - solved.iterate.x[0]) <= 1e-5);
}
