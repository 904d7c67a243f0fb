// Command-line front end: solve / relax / grad / demo / gen subcommands over
// JSON problem documents. Exit codes: 0 converged, 1 input error,
// 2 iteration cap hit, 3 numerical failure.

#include <CLI11.hpp>

#include <atomic>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "smoothqp/io.hpp"
#include "smoothqp/smoothqp.hpp"

namespace {

using namespace smoothqp;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitMaxIters = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(Status status) {
  switch (status) {
    case Status::Converged: return kExitOk;
    case Status::MaxIters: return kExitMaxIters;
    case Status::NumericalFailure: return kExitNumerical;
  }
  return kExitNumerical;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CommonFlags {
  bool elastic = false;
  std::optional<double> tol;
  std::optional<int> max_iters;
  std::optional<double> kappa;
};

ProblemFile load_problem(const std::string& path, const CommonFlags& flags) {
  ProblemFile pf = parse_problem_text(read_file(path));
  if (flags.elastic && !pf.elastic) {
    if (pf.qp.m() > 0) {
      throw ParseError("--elastic requires a problem without equality constraints");
    }
    // No penalty weights in the file: fall back to a uniform heavy penalty.
    pf.eqp = ElasticProblem{pf.qp.Q, pf.qp.q, pf.qp.G, pf.qp.h,
                            Vec::Constant(pf.qp.p(), 1e2)};
    pf.elastic = true;
  }
  if (flags.tol) pf.settings.tol = *flags.tol;
  if (flags.max_iters) pf.settings.max_iters = *flags.max_iters;
  if (flags.kappa) pf.settings.kappa_target = *flags.kappa;
  if (pf.elastic) {
    validate_or_throw(pf.eqp);
  } else {
    validate_or_throw(pf.qp);
  }
  return pf;
}

struct JobOutput {
  int code = kExitOk;
  std::string doc;    // stdout payload (one JSON document)
  std::string error;  // stderr diagnostics
};

JobOutput solve_one(const std::string& path, const CommonFlags& flags) {
  JobOutput out;
  try {
    const ProblemFile pf = load_problem(path, flags);
    if (pf.elastic) {
      const ElasticSolveResult res = solve_qp_elastic(pf.eqp, pf.settings);
      out.doc = solution_to_json(pf.eqp, res).dump();
      out.code = exit_code_for(res.status);
    } else {
      const SolveResult res = solve_qp(pf.qp, pf.settings);
      out.doc = solution_to_json(pf.qp, res).dump();
      out.code = exit_code_for(res.status);
    }
  } catch (const std::exception& e) {
    out.code = kExitInput;
    out.error = std::string(path) + ": " + e.what();
  }
  return out;
}

int run_solve(const std::vector<std::string>& paths, const CommonFlags& flags, int jobs) {
  std::vector<JobOutput> outputs(paths.size());
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(paths.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < paths.size(); ++i) outputs[i] = solve_one(paths[i], flags);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= paths.size()) break;
          outputs[i] = solve_one(paths[i], flags);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  int code = kExitOk;
  for (const JobOutput& out : outputs) {
    if (!out.doc.empty()) std::cout << out.doc << "\n";
    if (!out.error.empty()) std::cerr << out.error << "\n";
    code = std::max(code, out.code);
  }
  return code;
}

int run_relax(const std::string& path, const CommonFlags& flags) {
  try {
    const ProblemFile pf = load_problem(path, flags);
    const double kappa = pf.settings.kappa_target;
    if (pf.elastic) {
      const ElasticSolveResult res = solve_qp_elastic(pf.eqp, pf.settings);
      if (res.status != Status::Converged) {
        std::cerr << path << ": solve did not converge (" << to_string(res.status) << ")\n";
        return exit_code_for(res.status);
      }
      const ElasticIterate relaxed = relax_qp_elastic(pf.eqp, res.iterate, kappa, pf.settings);
      std::cout << relaxed_to_json(relaxed, kappa).dump() << "\n";
    } else {
      const SolveResult res = solve_qp(pf.qp, pf.settings);
      if (res.status != Status::Converged) {
        std::cerr << path << ": solve did not converge (" << to_string(res.status) << ")\n";
        return exit_code_for(res.status);
      }
      const PrimalDualIterate relaxed = relax_qp(pf.qp, res.iterate, kappa, pf.settings);
      std::cout << relaxed_to_json(relaxed, kappa).dump() << "\n";
    }
    return kExitOk;
  } catch (const KappaBelowCurrent& e) {
    std::cerr << path << ": KappaBelowCurrent: " << e.what() << "\n";
    return kExitInput;
  } catch (const SolveFailure& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return exit_code_for(e.status);
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kExitInput;
  }
}

Vec parse_seed(const std::string& spec, Eigen::Index n) {
  std::string text = spec;
  if (!spec.empty() && spec[0] == '@') text = read_file(spec.substr(1));
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("--loss-grad: invalid JSON: ") + e.what());
  }
  const Vec seed = io_detail::parse_vector(doc, "loss-grad");
  if (seed.size() != n) {
    throw ParseError("--loss-grad has length " + std::to_string(seed.size()) +
                     ", expected " + std::to_string(n));
  }
  return seed;
}

double gradient_deviation(const QpGradients& a, const QpGradients& b) {
  double dev = 0.0;
  auto scan_mat = [&](const Mat& x, const Mat& y) {
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        dev = std::max(dev, std::abs(x(i, j) - y(i, j)) / std::max(std::abs(y(i, j)), 1e-2));
  };
  auto scan_vec = [&](const Vec& x, const Vec& y) {
    for (Eigen::Index i = 0; i < x.size(); ++i)
      dev = std::max(dev, std::abs(x[i] - y[i]) / std::max(std::abs(y[i]), 1e-2));
  };
  scan_mat(a.grad_Q, b.grad_Q);
  scan_vec(a.grad_q, b.grad_q);
  scan_mat(a.grad_A, b.grad_A);
  scan_vec(a.grad_b, b.grad_b);
  scan_mat(a.grad_G, b.grad_G);
  scan_vec(a.grad_h, b.grad_h);
  return dev;
}

int run_grad(const std::string& path, const CommonFlags& flags, const std::string& seed_spec,
             bool check) {
  try {
    const ProblemFile pf = load_problem(path, flags);
    const double kappa = pf.settings.kappa_target;
    const Vec seed = parse_seed(seed_spec, pf.n());

    SolverSettings tight = pf.settings;
    tight.tol = std::min(pf.settings.tol, 1e-10);

    QpGradients grads;
    if (pf.elastic) {
      const ElasticSolveResult res = solve_qp_elastic(pf.eqp, tight);
      if (res.status != Status::Converged) {
        std::cerr << path << ": solve did not converge (" << to_string(res.status) << ")\n";
        return exit_code_for(res.status);
      }
      const ElasticIterate relaxed = relax_qp_elastic(pf.eqp, res.iterate, kappa, tight);
      grads = compute_elastic_qp_grads(pf.eqp, relaxed, seed);
    } else {
      const SolveResult res = solve_qp(pf.qp, tight);
      if (res.status != Status::Converged) {
        std::cerr << path << ": solve did not converge (" << to_string(res.status) << ")\n";
        return exit_code_for(res.status);
      }
      const PrimalDualIterate relaxed = relax_qp(pf.qp, res.iterate, kappa, tight);
      grads = compute_qp_grads(pf.qp, relaxed, seed);
    }

    Json doc = gradients_to_json(grads);
    doc["kappa"] = kappa;
    if (check) {
      const QpGradients fd = pf.elastic ? fd_gradients(pf.eqp, seed, kappa, pf.settings)
                                        : fd_gradients(pf.qp, seed, kappa, pf.settings);
      doc["fd_max_deviation"] = gradient_deviation(grads, fd);
    }
    std::cout << doc.dump() << "\n";
    return kExitOk;
  } catch (const SolveFailure& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return exit_code_for(e.status);
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kExitInput;
  }
}

int run_demo(const std::string& name, double kappa, int steps) {
  try {
    if (name == "contact") {
      const BlockParams base;
      const double threshold_x = base.friction * base.mass * base.gravity;
      const double threshold_y = base.mass * base.gravity;
      std::cout << "axis,force,velocity,dvel_dforce,kappa\n";
      for (int axis : {0, 1}) {
        const double fmax = 2.0 * (axis == 0 ? threshold_x : threshold_y);
        for (const ContactSweepRow& row : contact_force_sweep(base, axis, kappa, steps, fmax)) {
          std::cout << (row.axis == 0 ? "x" : "y") << "," << row.force << "," << row.velocity
                    << "," << row.dvel_dforce << "," << row.kappa << "\n";
        }
      }
      return kExitOk;
    }
    if (name == "collision") {
      std::cout << "offset,distance,normal_x,normal_y,angle_deg,kappa\n";
      for (const CollisionSweepRow& row : collision_corner_sweep(kappa, steps)) {
        std::cout << row.offset << "," << row.distance << "," << row.normal_x << ","
                  << row.normal_y << "," << row.angle_deg << "," << row.kappa << "\n";
      }
      return kExitOk;
    }
    std::cerr << "unknown demo '" << name << "' (expected: contact, collision)\n";
    return kExitInput;
  } catch (const SolveFailure& e) {
    std::cerr << "demo failed: " << e.what() << "\n";
    return exit_code_for(e.status);
  } catch (const std::exception& e) {
    std::cerr << "demo failed: " << e.what() << "\n";
    return kExitInput;
  }
}

// Small deterministic generator for test fixtures and batch experiments.
int run_gen(unsigned seed, int n, int m, int p, bool elastic, const std::string& out_path) {
  std::mt19937 rng(seed);
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto rand_mat = [&](Eigen::Index rows, Eigen::Index cols) {
    Mat mtx(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) mtx(i, j) = uni(-1.0, 1.0);
    return mtx;
  };
  auto rand_vec = [&](Eigen::Index len, double lo, double hi) {
    Vec v(len);
    for (Eigen::Index i = 0; i < len; ++i) v[i] = uni(lo, hi);
    return v;
  };

  ProblemFile pf;
  const Mat b_factor = rand_mat(n, n);
  const Mat Q = b_factor.transpose() * b_factor + Mat::Identity(n, n);
  const Vec q = rand_vec(n, -1.0, 1.0);
  const Vec x0 = rand_vec(n, -1.0, 1.0);
  const Mat G = rand_mat(p, n);
  const Vec h = G * x0 + rand_vec(p, 0.0, 0.5);
  if (elastic) {
    pf.elastic = true;
    pf.eqp = ElasticProblem{Q, q, G, h, rand_vec(p, 1.0, 20.0)};
  } else {
    const Mat A = rand_mat(m, n);
    pf.qp = QpProblem{Q, q, A, A * x0, G, h};
  }

  const std::string text = write_problem(pf).dump(2) + "\n";
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot write '" << out_path << "'\n";
      return kExitInput;
    }
    out << text;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smoothqp: dense differentiable QP solver with barrier-relaxed gradients"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::vector<std::string> paths;
  int jobs = 1;

  CLI::App* solve = app.add_subcommand("solve", "Solve one or more problem files");
  solve->add_option("files", paths, "problem JSON files")->required()->expected(-1);
  solve->add_flag("--elastic", flags.elastic, "solve in elastic (l1-penalty) mode");
  solve->add_option("--tol", flags.tol, "residual tolerance override");
  solve->add_option("--max-iters", flags.max_iters, "iteration cap override");
  solve->add_option("--jobs", jobs, "number of parallel workers for multiple files");

  std::string relax_path;
  CLI::App* relax = app.add_subcommand("relax", "Solve, then relax onto the central path");
  relax->add_option("file", relax_path, "problem JSON file")->required();
  relax->add_flag("--elastic", flags.elastic, "elastic mode");
  relax->add_option("--tol", flags.tol, "residual tolerance override");
  relax->add_option("--max-iters", flags.max_iters, "iteration cap override");
  relax->add_option("--kappa", flags.kappa, "target central-path parameter");

  std::string grad_path;
  std::string seed_spec;
  bool check = false;
  CLI::App* grad = app.add_subcommand("grad", "Solve, relax, and differentiate a loss");
  grad->add_option("file", grad_path, "problem JSON file")->required();
  grad->add_option("--loss-grad", seed_spec,
                   "loss gradient w.r.t. x: JSON array or @file")->required();
  grad->add_option("--kappa", flags.kappa, "relaxation level for the gradients");
  grad->add_flag("--elastic", flags.elastic, "elastic mode");
  grad->add_option("--tol", flags.tol, "residual tolerance override");
  grad->add_option("--max-iters", flags.max_iters, "iteration cap override");
  grad->add_flag("--check", check, "also run the finite-difference oracle and report deviation");

  std::string demo_name;
  double demo_kappa = 1e-2;
  int demo_steps = 50;
  CLI::App* demo = app.add_subcommand("demo", "Emit CSV sweeps for the contact/collision demos");
  demo->add_option("name", demo_name, "demo name: contact | collision")->required();
  demo->add_option("--kappa", demo_kappa, "relaxation level for demo gradients");
  demo->add_option("--sweep", demo_steps, "number of sweep steps");

  unsigned gen_seed = 0;
  int gen_n = 5, gen_m = 2, gen_p = 4;
  bool gen_elastic = false;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen", "Generate a random feasible problem file");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--n", gen_n, "number of variables");
  gen->add_option("--m", gen_m, "number of equality constraints");
  gen->add_option("--p", gen_p, "number of inequality constraints");
  gen->add_flag("--elastic", gen_elastic, "generate an elastic problem (adds rho)");
  gen->add_option("--out", gen_out, "output path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  if (solve->parsed()) return run_solve(paths, flags, jobs);
  if (relax->parsed()) return run_relax(relax_path, flags);
  if (grad->parsed()) return run_grad(grad_path, flags, seed_spec, check);
  if (demo->parsed()) return run_demo(demo_name, demo_kappa, demo_steps);
  if (gen->parsed()) return run_gen(gen_seed, gen_n, gen_m, gen_p, gen_elastic, gen_out);
  return kExitInput;
}
