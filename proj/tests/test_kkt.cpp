#include <catch2/catch_amalgamated.hpp>

#include "smoothqp/kkt.hpp"
#include "support/test_support.hpp"

using namespace smoothqp;
using testsupport::Rng;

namespace {

Vec stack_standard(const StepDeltas& d) {
  Vec out(d.dx.size() + d.ds.size() + d.dz.size() + d.dy.size());
  out << d.dx, d.ds, d.dz, d.dy;
  return out;
}

Vec stack_elastic(const ElasticStepDeltas& d) {
  Vec out(d.dx.size() + d.dt.size() + d.ds1.size() + d.ds2.size() + d.dz1.size() +
          d.dz2.size());
  out << d.dx, d.dt, d.ds1, d.ds2, d.dz1, d.dz2;
  return out;
}

}  // namespace

TEST_CASE("1-variable workspace matches hand arithmetic", "[kkt]") {
  QpProblem prob;
  prob.Q = Mat::Constant(1, 1, 2.0);
  prob.q = Vec::Zero(1);
  prob.A = Mat(0, 1);
  prob.b = Vec(0);
  prob.G = Mat::Constant(1, 1, 1.0);
  prob.h = Vec::Zero(1);

  const Vec ones = Vec::Ones(1);
  const StandardKktWorkspace ws = build_standard_workspace(prob, ones, ones);
  // P = s/z = 1, H = Q + Gᵀ P⁻¹ G = 3, no F block
  REQUIRE(ws.p_inv()[0] == Catch::Approx(1.0));
  REQUIRE(ws.h_factor().lower()(0, 0) == Catch::Approx(std::sqrt(3.0)));
  REQUIRE_FALSE(ws.f_factor().has_value());

  // u = (3, 0, 0): hand solve of the 3x3 system gives (Δx, Δs, Δz) = (1, −1, 1)
  const StepDeltas d = solve_kkt(ws, Vec::Constant(1, 3.0), Vec::Zero(1), Vec::Zero(1), Vec(0));
  REQUIRE(d.dx[0] == Catch::Approx(1.0));
  REQUIRE(d.ds[0] == Catch::Approx(-1.0));
  REQUIRE(d.dz[0] == Catch::Approx(1.0));
}

TEST_CASE("without inequalities the reduced matrix is Q itself", "[kkt]") {
  QpProblem prob;
  prob.Q = Mat::Identity(2, 2) * 4.0;
  prob.q = Vec::Zero(2);
  prob.A = Mat(0, 2);
  prob.b = Vec(0);
  prob.G = Mat(0, 2);
  prob.h = Vec(0);
  const StandardKktWorkspace ws = build_standard_workspace(prob, Vec(0), Vec(0));
  REQUIRE(ws.h_factor().lower()(0, 0) == Catch::Approx(2.0));
  const StepDeltas d = solve_kkt(ws, Vec::Constant(2, 4.0), Vec(0), Vec(0), Vec(0));
  REQUIRE(d.dx[0] == Catch::Approx(1.0));
  REQUIRE(d.dx[1] == Catch::Approx(1.0));
}

TEST_CASE("zero right-hand side gives zero deltas", "[kkt]") {
  Rng rng(11);
  const QpProblem prob = testsupport::random_feasible_qp(rng, 4, 2, 3);
  const Vec s = testsupport::random_vector(rng, 3, 0.1, 10.0);
  const Vec z = testsupport::random_vector(rng, 3, 0.1, 10.0);
  const StandardKktWorkspace ws = build_standard_workspace(prob, s, z);
  const StepDeltas d = solve_kkt(ws, Vec::Zero(4), Vec::Zero(3), Vec::Zero(3), Vec::Zero(2));
  REQUIRE(stack_standard(d).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("block elimination matches the dense LU oracle", "[kkt][oracle]") {
  Rng rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 5);
    const Eigen::Index m = static_cast<Eigen::Index>(rng() % std::min<Eigen::Index>(3, n));
    const Eigen::Index p = static_cast<Eigen::Index>(rng() % 5);
    const QpProblem prob = testsupport::random_feasible_qp(rng, n, m, p);
    const Vec s = testsupport::random_vector(rng, p, 0.1, 10.0);
    const Vec z = testsupport::random_vector(rng, p, 0.1, 10.0);

    const Vec u = testsupport::random_vector(rng, n + 2 * p + m, -2.0, 2.0);
    const StandardKktWorkspace ws = build_standard_workspace(prob, s, z);
    const StepDeltas d =
        solve_kkt(ws, u.head(n), u.segment(n, p), u.segment(n + p, p), u.tail(m));

    const Mat K = testsupport::assemble_standard_kkt(prob, s, z);
    const Vec oracle = K.fullPivLu().solve(u);
    REQUIRE((stack_standard(d) - oracle).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("solve_kkt satisfies the 4-block equations", "[kkt]") {
  Rng rng(99);
  const QpProblem prob = testsupport::random_feasible_qp(rng, 5, 2, 4);
  const Vec s = testsupport::random_vector(rng, 4, 0.1, 10.0);
  const Vec z = testsupport::random_vector(rng, 4, 0.1, 10.0);
  const Vec u = testsupport::random_vector(rng, 5 + 8 + 2, -1.0, 1.0);
  const StandardKktWorkspace ws = build_standard_workspace(prob, s, z);
  const StepDeltas d = solve_kkt(ws, u.head(5), u.segment(5, 4), u.segment(9, 4), u.tail(2));
  const Mat K = testsupport::assemble_standard_kkt(prob, s, z);
  const double resid = (K * stack_standard(d) - u).cwiseAbs().maxCoeff();
  REQUIRE(resid <= 1e-8 * (1.0 + u.cwiseAbs().maxCoeff()));
}

TEST_CASE("solve_kkt is linear in the right-hand side", "[kkt][property]") {
  Rng rng(5);
  const QpProblem prob = testsupport::random_feasible_qp(rng, 4, 1, 3);
  const Vec s = testsupport::random_vector(rng, 3, 0.1, 10.0);
  const Vec z = testsupport::random_vector(rng, 3, 0.1, 10.0);
  const StandardKktWorkspace ws = build_standard_workspace(prob, s, z);

  const Eigen::Index dim = 4 + 6 + 1;
  const Vec u = testsupport::random_vector(rng, dim);
  const Vec v = testsupport::random_vector(rng, dim);
  const double a = 0.7, b = -1.3;

  auto solve_vec = [&](const Vec& rhs) {
    return stack_standard(
        solve_kkt(ws, rhs.head(4), rhs.segment(4, 3), rhs.segment(7, 3), rhs.tail(1)));
  };
  const Vec combined = solve_vec(a * u + b * v);
  const Vec separate = a * solve_vec(u) + b * solve_vec(v);
  REQUIRE((combined - separate).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("workspace reuse equals rebuilding", "[kkt][property]") {
  Rng rng(8);
  const QpProblem prob = testsupport::random_feasible_qp(rng, 5, 2, 4);
  const Vec s = testsupport::random_vector(rng, 4, 0.1, 10.0);
  const Vec z = testsupport::random_vector(rng, 4, 0.1, 10.0);
  const Vec u = testsupport::random_vector(rng, 15);
  const Vec v = testsupport::random_vector(rng, 15);

  const StandardKktWorkspace shared = build_standard_workspace(prob, s, z);
  auto solve_with = [&](const StandardKktWorkspace& ws, const Vec& rhs) {
    return stack_standard(
        solve_kkt(ws, rhs.head(5), rhs.segment(5, 4), rhs.segment(9, 4), rhs.tail(2)));
  };
  const Vec first = solve_with(shared, u);
  const Vec second = solve_with(shared, v);

  const Vec fresh_first = solve_with(build_standard_workspace(prob, s, z), u);
  const Vec fresh_second = solve_with(build_standard_workspace(prob, s, z), v);
  REQUIRE((first - fresh_first).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((second - fresh_second).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("elastic workspace matches hand arithmetic", "[kkt][elastic]") {
  ElasticProblem prob;
  prob.Q = Mat::Identity(1, 1);
  prob.q = Vec::Zero(1);
  prob.G = Mat::Identity(1, 1);
  prob.h = Vec::Zero(1);
  prob.rho = Vec::Ones(1);
  const Vec one = Vec::Ones(1);

  // a₁ = a₂ = 1 so A₃ = 2 and the reduced matrix is Q + Gᵀ A₃⁻¹ G = 1.5
  const ElasticKktWorkspace ws = build_elastic_workspace(prob, one, one, one, one);
  REQUIRE(ws.a3_inv()[0] == Catch::Approx(0.5));
  REQUIRE(ws.k_factor().lower()(0, 0) == Catch::Approx(std::sqrt(1.5)));

  const ElasticStepDeltas d = elastic_kkt(ws, Vec::Constant(1, 1.0), Vec::Zero(1),
                                          Vec::Zero(1), Vec::Zero(1), Vec::Zero(1),
                                          Vec::Zero(1));
  REQUIRE(d.dx[0] == Catch::Approx(2.0 / 3.0));
  REQUIRE(d.dz2[0] == Catch::Approx(1.0 / 3.0));
  REQUIRE(d.dz1[0] == Catch::Approx(-1.0 / 3.0));
  REQUIRE(d.ds1[0] == Catch::Approx(1.0 / 3.0));
  REQUIRE(d.ds2[0] == Catch::Approx(-1.0 / 3.0));
  REQUIRE(d.dt[0] == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("zero G reduces the elastic matrix to Q", "[kkt][elastic]") {
  ElasticProblem prob;
  prob.Q = Mat::Identity(2, 2) * 9.0;
  prob.q = Vec::Zero(2);
  prob.G = Mat::Zero(1, 2);
  prob.h = Vec::Zero(1);
  prob.rho = Vec::Ones(1);
  const Vec one = Vec::Ones(1);
  const ElasticKktWorkspace ws = build_elastic_workspace(prob, one, one, one, one);
  REQUIRE(ws.k_factor().lower()(0, 0) == Catch::Approx(3.0));
}

TEST_CASE("elastic zero right-hand side gives zero deltas", "[kkt][elastic]") {
  Rng rng(21);
  const ElasticProblem prob = testsupport::random_elastic_qp(rng, 3, 4);
  const Vec s1 = testsupport::random_vector(rng, 4, 0.1, 10.0);
  const Vec s2 = testsupport::random_vector(rng, 4, 0.1, 10.0);
  const Vec z1 = testsupport::random_vector(rng, 4, 0.1, 10.0);
  const Vec z2 = testsupport::random_vector(rng, 4, 0.1, 10.0);
  const ElasticKktWorkspace ws = build_elastic_workspace(prob, s1, s2, z1, z2);
  const ElasticStepDeltas d = elastic_kkt(ws, Vec::Zero(3), Vec::Zero(4), Vec::Zero(4),
                                          Vec::Zero(4), Vec::Zero(4), Vec::Zero(4));
  REQUIRE(stack_elastic(d).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("elastic elimination matches the dense LU oracle", "[kkt][elastic][oracle]") {
  Rng rng(4321);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 4);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng() % 4);
    const ElasticProblem prob = testsupport::random_elastic_qp(rng, n, p);
    const Vec s1 = testsupport::random_vector(rng, p, 0.1, 10.0);
    const Vec s2 = testsupport::random_vector(rng, p, 0.1, 10.0);
    const Vec z1 = testsupport::random_vector(rng, p, 0.1, 10.0);
    const Vec z2 = testsupport::random_vector(rng, p, 0.1, 10.0);

    const Vec r = testsupport::random_vector(rng, n + 5 * p, -2.0, 2.0);
    const ElasticKktWorkspace ws = build_elastic_workspace(prob, s1, s2, z1, z2);
    const ElasticStepDeltas d =
        elastic_kkt(ws, r.head(n), r.segment(n, p), r.segment(n + p, p),
                    r.segment(n + 2 * p, p), r.segment(n + 3 * p, p), r.tail(p));

    const Mat K = testsupport::assemble_elastic_kkt(prob, s1, s2, z1, z2);
    const Vec oracle = K.fullPivLu().solve(r);
    REQUIRE((stack_elastic(d) - oracle).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("degenerate scaling raises NotPositiveDefinite", "[kkt]") {
  // Two identical equality rows make F = A H⁻¹ Aᵀ singular.
  QpProblem prob;
  prob.Q = Mat::Identity(2, 2);
  prob.q = Vec::Zero(2);
  prob.A = Mat(2, 2);
  prob.A << 1, 1, 1, 1;
  prob.b = Vec::Zero(2);
  prob.G = Mat(0, 2);
  prob.h = Vec(0);
  REQUIRE_THROWS_AS(build_standard_workspace(prob, Vec(0), Vec(0)), NotPositiveDefinite);
}
