#include <catch2/catch_amalgamated.hpp>

#include "smoothqp/io.hpp"
#include "smoothqp/solver.hpp"
#include "support/test_support.hpp"

using namespace smoothqp;

namespace {

const char* kOneDim = R"({
  "Q": [[1.0]],
  "q": [0.0],
  "G": [[-1.0]],
  "h": [-1.0]
})";

const char* kElasticPair = R"({
  "Q": [[1.0]],
  "q": [0.0],
  "G": [[1.0], [-1.0]],
  "h": [-1.0, -1.0],
  "rho": [10.0, 10.0],
  "settings": {"tol": 1e-9, "max_iters": 40, "kappa": 0.05}
})";

}  // namespace

TEST_CASE("parse a standard problem", "[io]") {
  const ProblemFile pf = parse_problem_text(kOneDim);
  REQUIRE_FALSE(pf.elastic);
  REQUIRE(pf.qp.n() == 1);
  REQUIRE(pf.qp.m() == 0);
  REQUIRE(pf.qp.p() == 1);
  REQUIRE(pf.qp.G(0, 0) == -1.0);
  REQUIRE(pf.settings.tol == SolverSettings{}.tol);
}

TEST_CASE("rho selects elastic mode and settings are honored", "[io]") {
  const ProblemFile pf = parse_problem_text(kElasticPair);
  REQUIRE(pf.elastic);
  REQUIRE(pf.eqp.p() == 2);
  REQUIRE(pf.eqp.rho[0] == 10.0);
  REQUIRE(pf.settings.tol == 1e-9);
  REQUIRE(pf.settings.max_iters == 40);
  REQUIRE(pf.settings.kappa_target == 0.05);
}

TEST_CASE("parse errors carry diagnostics", "[io]") {
  REQUIRE_THROWS_AS(parse_problem_text("{"), ParseError);
  REQUIRE_THROWS_AS(parse_problem_text(R"({"q": [0.0]})"), ParseError);         // no Q
  REQUIRE_THROWS_AS(parse_problem_text(R"({"Q": [[1]], "q": [0], "G": [[1]]})"),
                    ParseError);                                                // G without h
  REQUIRE_THROWS_AS(parse_problem_text(R"({"Q": [[1],[2,3]], "q": [0]})"),
                    ParseError);                                                // ragged rows
  REQUIRE_THROWS_AS(
      parse_problem_text(
          R"({"Q": [[1]], "q": [0], "A": [[1]], "b": [0], "rho": [1]})"),
      ParseError);  // elastic with equalities
}

TEST_CASE("write/parse round trip preserves all values", "[io][property]") {
  testsupport::Rng rng(303);
  for (int trial = 0; trial < 10; ++trial) {
    ProblemFile pf;
    pf.qp = testsupport::random_feasible_qp(rng, 4, 2, 3);
    pf.settings.tol = 1e-9;

    const Json written = write_problem(pf);
    const ProblemFile reparsed = parse_problem(written);
    REQUIRE_FALSE(reparsed.elastic);
    REQUIRE(reparsed.qp.Q == pf.qp.Q);
    REQUIRE(reparsed.qp.q == pf.qp.q);
    REQUIRE(reparsed.qp.A == pf.qp.A);
    REQUIRE(reparsed.qp.b == pf.qp.b);
    REQUIRE(reparsed.qp.G == pf.qp.G);
    REQUIRE(reparsed.qp.h == pf.qp.h);
    REQUIRE(reparsed.settings.tol == pf.settings.tol);

    // serialization is deterministic
    REQUIRE(write_problem(reparsed).dump() == written.dump());
  }
}

TEST_CASE("elastic round trip", "[io]") {
  const ProblemFile pf = parse_problem_text(kElasticPair);
  const ProblemFile reparsed = parse_problem(write_problem(pf));
  REQUIRE(reparsed.elastic);
  REQUIRE(reparsed.eqp.rho == pf.eqp.rho);
  REQUIRE(reparsed.eqp.G == pf.eqp.G);
  REQUIRE(reparsed.settings.kappa_target == 0.05);
}

TEST_CASE("solution documents expose the solver outcome", "[io]") {
  const ProblemFile pf = parse_problem_text(kOneDim);
  const SolveResult res = solve_qp(pf.qp, pf.settings);
  const Json doc = solution_to_json(pf.qp, res);
  REQUIRE(doc["status"] == "Converged");
  REQUIRE(doc["x"].size() == 1);
  REQUIRE(std::abs(doc["x"][0].get<double>() - 1.0) <= 1e-6);
  REQUIRE(doc["objective"].get<double>() == Catch::Approx(0.5).margin(1e-6));
  REQUIRE(doc.contains("iterations"));
  REQUIRE(doc.contains("residual"));
  REQUIRE(doc.contains("s"));
  REQUIRE(doc.contains("z"));
  REQUIRE(doc.contains("y"));
}

TEST_CASE("relaxed documents expose complementarity products", "[io]") {
  const ProblemFile pf = parse_problem_text(kOneDim);
  const SolveResult res = solve_qp(pf.qp, pf.settings);
  PrimalDualIterate it = res.iterate;
  const Json doc = relaxed_to_json(it, 1e-2);
  REQUIRE(doc["kappa"] == 1e-2);
  REQUIRE(doc["sz_products"].size() == 1);
  REQUIRE(doc["sz_products"][0].get<double>() ==
          Catch::Approx(it.s[0] * it.z[0]).margin(1e-15));
}

TEST_CASE("gradient documents carry all six blocks", "[io]") {
  QpGradients g;
  g.grad_Q = Mat::Identity(2, 2);
  g.grad_q = Vec::Ones(2);
  g.grad_A = Mat::Zero(1, 2);
  g.grad_b = Vec::Zero(1);
  g.grad_G = Mat::Zero(3, 2);
  g.grad_h = Vec::Zero(3);
  const Json doc = gradients_to_json(g);
  for (const char* key : {"grad_Q", "grad_q", "grad_A", "grad_b", "grad_G", "grad_h"}) {
    REQUIRE(doc.contains(key));
  }
  REQUIRE(doc["grad_Q"].size() == 2);
  REQUIRE(doc["grad_G"].size() == 3);
}
