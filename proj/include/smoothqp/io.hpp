#pragma once

#include <json.hpp>

#include <stdexcept>
#include <string>

#include "smoothqp/gradients.hpp"

namespace smoothqp {

using Json = nlohmann::ordered_json;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A problem document: either a standard QP or (when "rho" is present) an
/// elastic QP, plus any solver settings carried by the file.
struct ProblemFile {
  bool elastic = false;
  QpProblem qp;
  ElasticProblem eqp;
  SolverSettings settings;

  Eigen::Index n() const { return elastic ? eqp.n() : qp.n(); }
};

namespace io_detail {

inline Vec parse_vector(const Json& j, const std::string& name) {
  if (!j.is_array()) throw ParseError("field '" + name + "' must be an array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError("field '" + name + "' must contain only numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline Mat parse_matrix(const Json& j, const std::string& name) {
  if (!j.is_array()) throw ParseError("field '" + name + "' must be an array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array()) throw ParseError("field '" + name + "' must be an array of rows");
    if (i == 0) cols = j[i].size();
    if (j[i].size() != cols) {
      throw ParseError("field '" + name + "': row " + std::to_string(i) + " has " +
                       std::to_string(j[i].size()) + " entries, expected " +
                       std::to_string(cols));
    }
  }
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) {
        throw ParseError("field '" + name + "' must contain only numbers");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

inline Json vector_to_json(const Vec& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

inline Json matrix_to_json(const Mat& m) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(row);
  }
  return j;
}

}  // namespace io_detail

/// Parses a problem document. "Q" and "q" are required; "A"/"b" and "G"/"h"
/// are optional paired blocks (absence means zero rows); "rho" selects
/// elastic mode; "settings" may carry tol, max_iters and kappa.
inline ProblemFile parse_problem(const Json& doc) {
  if (!doc.is_object()) throw ParseError("problem document must be a JSON object");
  for (const char* required : {"Q", "q"}) {
    if (!doc.contains(required)) {
      throw ParseError(std::string("missing required field '") + required + "'");
    }
  }
  for (const char* pair : {"A", "G"}) {
    const std::string mat(pair);
    const std::string vec = (mat == "A") ? "b" : "h";
    if (doc.contains(mat) != doc.contains(vec)) {
      throw ParseError("fields '" + mat + "' and '" + vec + "' must appear together");
    }
  }

  ProblemFile pf;
  const Mat Q = io_detail::parse_matrix(doc["Q"], "Q");
  const Vec q = io_detail::parse_vector(doc["q"], "q");
  const Eigen::Index n = q.size();

  Mat A(0, n), G(0, n);
  Vec b(0), h(0);
  if (doc.contains("A")) {
    A = io_detail::parse_matrix(doc["A"], "A");
    b = io_detail::parse_vector(doc["b"], "b");
  }
  if (doc.contains("G")) {
    G = io_detail::parse_matrix(doc["G"], "G");
    h = io_detail::parse_vector(doc["h"], "h");
  }

  pf.elastic = doc.contains("rho");
  if (pf.elastic) {
    if (A.rows() > 0) {
      throw ParseError("elastic problems (field 'rho' present) cannot have equality "
                       "constraints 'A'/'b'");
    }
    pf.eqp = ElasticProblem{Q, q, G, h, io_detail::parse_vector(doc["rho"], "rho")};
  } else {
    pf.qp = QpProblem{Q, q, A, b, G, h};
  }

  if (doc.contains("settings")) {
    const Json& s = doc["settings"];
    if (!s.is_object()) throw ParseError("field 'settings' must be an object");
    auto number = [&](const char* key) {
      if (!s[key].is_number()) {
        throw ParseError(std::string("settings field '") + key + "' must be a number");
      }
      return s[key].get<double>();
    };
    if (s.contains("tol")) pf.settings.tol = number("tol");
    if (s.contains("max_iters")) pf.settings.max_iters = static_cast<int>(number("max_iters"));
    if (s.contains("kappa")) pf.settings.kappa_target = number("kappa");
  }
  return pf;
}

inline ProblemFile parse_problem_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return parse_problem(doc);
}

/// Inverse of parse_problem, up to float formatting.
inline Json write_problem(const ProblemFile& pf) {
  Json doc = Json::object();
  const Mat& Q = pf.elastic ? pf.eqp.Q : pf.qp.Q;
  const Vec& q = pf.elastic ? pf.eqp.q : pf.qp.q;
  doc["Q"] = io_detail::matrix_to_json(Q);
  doc["q"] = io_detail::vector_to_json(q);
  if (!pf.elastic && pf.qp.m() > 0) {
    doc["A"] = io_detail::matrix_to_json(pf.qp.A);
    doc["b"] = io_detail::vector_to_json(pf.qp.b);
  }
  const Mat& G = pf.elastic ? pf.eqp.G : pf.qp.G;
  const Vec& h = pf.elastic ? pf.eqp.h : pf.qp.h;
  if (G.rows() > 0) {
    doc["G"] = io_detail::matrix_to_json(G);
    doc["h"] = io_detail::vector_to_json(h);
  }
  if (pf.elastic) doc["rho"] = io_detail::vector_to_json(pf.eqp.rho);
  doc["settings"] = Json{{"tol", pf.settings.tol},
                         {"max_iters", pf.settings.max_iters},
                         {"kappa", pf.settings.kappa_target}};
  return doc;
}

inline Json solution_to_json(const QpProblem& prob, const SolveResult& res) {
  Json doc = Json::object();
  doc["status"] = to_string(res.status);
  doc["iterations"] = res.iterations;
  doc["residual"] = res.residual_norm;
  doc["mu"] = res.mu;
  doc["objective"] = prob.objective(res.iterate.x);
  doc["x"] = io_detail::vector_to_json(res.iterate.x);
  doc["s"] = io_detail::vector_to_json(res.iterate.s);
  doc["z"] = io_detail::vector_to_json(res.iterate.z);
  doc["y"] = io_detail::vector_to_json(res.iterate.y);
  return doc;
}

inline Json solution_to_json(const ElasticProblem& prob, const ElasticSolveResult& res) {
  Json doc = Json::object();
  doc["status"] = to_string(res.status);
  doc["iterations"] = res.iterations;
  doc["residual"] = res.residual_norm;
  doc["mu"] = res.mu;
  doc["objective"] = prob.objective(res.iterate.x, res.iterate.t);
  doc["x"] = io_detail::vector_to_json(res.iterate.x);
  doc["t"] = io_detail::vector_to_json(res.iterate.t);
  doc["s1"] = io_detail::vector_to_json(res.iterate.s1);
  doc["s2"] = io_detail::vector_to_json(res.iterate.s2);
  doc["z1"] = io_detail::vector_to_json(res.iterate.z1);
  doc["z2"] = io_detail::vector_to_json(res.iterate.z2);
  return doc;
}

/// Relaxed-solution documents carry the complementarity products so that
/// central-path membership (s ⊙ z ≈ κ) is externally checkable.
inline Json relaxed_to_json(const PrimalDualIterate& it, double kappa) {
  Json doc = Json::object();
  doc["kappa"] = kappa;
  doc["x"] = io_detail::vector_to_json(it.x);
  doc["s"] = io_detail::vector_to_json(it.s);
  doc["z"] = io_detail::vector_to_json(it.z);
  doc["y"] = io_detail::vector_to_json(it.y);
  doc["sz_products"] = io_detail::vector_to_json(it.s.cwiseProduct(it.z));
  return doc;
}

inline Json relaxed_to_json(const ElasticIterate& it, double kappa) {
  Json doc = Json::object();
  doc["kappa"] = kappa;
  doc["x"] = io_detail::vector_to_json(it.x);
  doc["t"] = io_detail::vector_to_json(it.t);
  doc["s1"] = io_detail::vector_to_json(it.s1);
  doc["s2"] = io_detail::vector_to_json(it.s2);
  doc["z1"] = io_detail::vector_to_json(it.z1);
  doc["z2"] = io_detail::vector_to_json(it.z2);
  doc["s1z1_products"] = io_detail::vector_to_json(it.s1.cwiseProduct(it.z1));
  doc["s2z2_products"] = io_detail::vector_to_json(it.s2.cwiseProduct(it.z2));
  return doc;
}

inline Json gradients_to_json(const QpGradients& g) {
  Json doc = Json::object();
  doc["grad_Q"] = io_detail::matrix_to_json(g.grad_Q);
  doc["grad_q"] = io_detail::vector_to_json(g.grad_q);
  doc["grad_A"] = io_detail::matrix_to_json(g.grad_A);
  doc["grad_b"] = io_detail::vector_to_json(g.grad_b);
  doc["grad_G"] = io_detail::matrix_to_json(g.grad_G);
  doc["grad_h"] = io_detail::vector_to_json(g.grad_h);
  return doc;
}

}  // namespace smoothqp
