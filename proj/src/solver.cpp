#include "ckg/solver.hpp"

#include <Eigen/UmfPackSupport>

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>

namespace ckg {

void SolverOptions::validate() const {
  if (!(newton_tol > 0.0) || max_newton_iters <= 0 || !(initial_tau_step > 0.0) || !(min_tau_step > 0.0) ||
      !(damping > 0.0 && damping < 1.0) || max_halvings <= 0 || !(clamp_margin > 0.0)) {
    throw ParameterError("solver options must be positive (damping in (0, 1))");
  }
  if (!(min_tau_step <= initial_tau_step && initial_tau_step <= 1.0)) {
    throw ParameterError("solver options need min_tau_step <= initial_tau_step <= 1");
  }
}

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Column of the smallest pivot of a (numerically) singular factorization.
int weakest_column(const Eigen::UmfPackLU<Eigen::SparseMatrix<double>>& lu) {
  const auto& U = lu.matrixU();
  const auto& Q = lu.permutationQ();
  int best = -1;
  double best_val = kInf;
  for (int k = 0; k < std::min<int>(U.rows(), U.cols()); ++k) {
    const double d = std::abs(U.coeff(k, k));
    if (d < best_val) {
      best_val = d;
      best = Q(k);
    }
  }
  return best;
}

}  // namespace

std::vector<double> linear_solve(const Eigen::SparseMatrix<double>& A_in, const std::vector<double>& rhs,
                                 const std::vector<int>& vertices) {
  if (A_in.rows() != A_in.cols() || A_in.rows() != static_cast<Eigen::Index>(rhs.size())) {
    throw ParameterError("linear_solve needs a square system matching the right-hand side");
  }
  const int n = static_cast<int>(rhs.size());
  if (n == 0) return {};
  auto singular = [&](const std::string& what, int col) {
    const int v = col >= 0 && col < static_cast<int>(vertices.size()) ? vertices[col] : col;
    return SingularSystemError(what + (v >= 0 ? " at vertex " + std::to_string(v) : std::string()), v);
  };

  Eigen::SparseMatrix<double> A = A_in;
  A.makeCompressed();
  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  if (lu.info() != Eigen::Success) throw singular("structurally singular linear system", -1);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw singular("singular linear system", weakest_column(lu));

  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
  Eigen::VectorXd x = lu.solve(b);
  const double bnorm = b.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < 3 && x.allFinite(); ++it) {
    const Eigen::VectorXd r = b - A * x;
    if (r.lpNorm<Eigen::Infinity>() <= 1e-14 * bnorm) break;
    x += lu.solve(r);
  }
  if (!x.allFinite()) throw singular("singular linear system", weakest_column(lu));
  const double res = (b - A * x).lpNorm<Eigen::Infinity>();
  if (res > 1e-6 * std::max(bnorm, 1e-300)) {
    throw singular("numerically singular linear system (residual " + std::to_string(res) + ")", weakest_column(lu));
  }
  return {x.data(), x.data() + n};
}

std::vector<double> linear_solve(const SparseSystem& system, const std::vector<double>& rhs) {
  return linear_solve(system.matrix(), rhs, system.vertices);
}

ScalarField harmonic_extension(const DomainMesh& mesh, const ScalarField& boundary) {
  boundary.check(mesh, "boundary data");
  const auto K = laplacian_system(mesh);
  std::vector<double> rhs(K.size(), 0.0);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const auto nodes = mesh.cell(c);
    const Mat& G = mesh.basis_gradients(c);
    const Vec xc = mesh.centroid(c);
    const Mat Sinv = mesh.metric().inverse(xc);
    const double w = mesh.chart_measure(c) * mesh.metric().volume_density(xc);
    for (size_t a = 0; a < nodes.size(); ++a) {
      const int ia = mesh.interior_index(nodes[a]);
      if (ia < 0) continue;
      for (size_t b = 0; b < nodes.size(); ++b) {
        if (mesh.is_boundary(nodes[b])) rhs[ia] -= w * G.col(a).dot(Sinv * G.col(b)) * boundary[nodes[b]];
      }
    }
  }
  const auto x = linear_solve(K, rhs);
  ScalarField out = boundary;
  for (int i = 0; i < K.size(); ++i) out[K.vertices[i]] = x[i];
  return out;
}

NewtonResult newton_solve(const Problem& problem, double tau, ScalarField z, std::ostream* log) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("tau must lie in [0, 1]");
  const SolverOptions& opt = problem.options;
  const DomainMesh& mesh = *problem.mesh;
  const auto& iv = mesh.interior_vertices();
  const double limit = problem.ambient->interval_end() - opt.clamp_margin;
  z.check(mesh, "initial guess");
  problem.impose_boundary(z, tau);

  NewtonResult out;
  auto clamp = [&](ScalarField& f) {
    for (int v : iv) {
      if (f[v] > limit) {
        f[v] = limit;
        out.clamped = true;
      }
    }
  };
  clamp(z);

  double norm = max_abs(residual_Qtau(problem, z, tau));
  for (int it = 0;; ++it) {
    out.residual_norms.push_back(norm);
    if (norm <= opt.newton_tol) {
      out.z = std::move(z);
      out.iterations = it;
      return out;
    }
    if (it == opt.max_newton_iters) {
      throw NewtonStalled("Newton did not converge in " + std::to_string(it) + " iterations", std::move(z), norm,
                          out.clamped);
    }
    const SparseSystem sys = jacobian_Qtau(problem, z, tau);
    std::vector<double> rhs(sys.residual.size());
    for (size_t i = 0; i < rhs.size(); ++i) rhs[i] = -sys.residual[i];
    const auto delta = linear_solve(sys, rhs);
    const double delta_norm = max_abs(delta);

    double alpha = 1.0;
    bool accepted = false;
    int halvings = 0;
    for (; halvings <= opt.max_halvings; ++halvings, alpha *= opt.damping) {
      ScalarField trial = z;
      for (size_t i = 0; i < iv.size(); ++i) trial[iv[i]] += alpha * delta[i];
      clamp(trial);
      double trial_norm;
      try {
        trial_norm = max_abs(residual_Qtau(problem, trial, tau));
      } catch (const DomainError&) {
        continue;
      }
      if (std::isfinite(trial_norm) && trial_norm < norm) {
        z = std::move(trial);
        norm = trial_norm;
        accepted = true;
        break;
      }
    }
    if (log) {
      nlohmann::json line = {{"tau", tau},
                             {"iter", it + 1},
                             {"residual_norm", norm},
                             {"step_norm", accepted ? alpha * delta_norm : 0.0},
                             {"damping_halvings", std::min(halvings, opt.max_halvings)}};
      *log << line.dump() << '\n';
    }
    if (!accepted) {
      throw NewtonStalled("line search failed to reduce the residual", std::move(z), norm, out.clamped);
    }
  }
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::stalled:
      return "stalled";
    case SolveStatus::left_interval:
      return "left_interval";
  }
  return "unknown";
}

nlohmann::json SolveReport::to_json() const {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& r : newton_history) {
    history.push_back({{"tau", r.tau},
                       {"iterations", r.iterations},
                       {"residual_norms", r.residual_norms},
                       {"accepted", r.accepted}});
  }
  return {{"status", ckg::to_string(status)},
          {"tau_path", tau_path},
          {"newton_history", history},
          {"grad_sup_history", grad_sup_history},
          {"clamped", clamped},
          {"final_residual", final_residual},
          {"message", message}};
}

ContinuationResult continuity_solve(const Problem& problem, std::ostream* log) {
  problem.validate();
  const SolverOptions& opt = problem.options;
  const DomainMesh& mesh = *problem.mesh;
  ContinuationResult out{problem.boundary_field(0.0), {}};
  SolveReport& rep = out.report;

  auto attempt = [&](double tau, const ScalarField& start, bool& clamped) -> std::optional<NewtonResult> {
    try {
      auto r = newton_solve(problem, tau, start, log);
      rep.newton_history.push_back({tau, r.iterations, r.residual_norms, true});
      return r;
    } catch (const NewtonStalled& e) {
      clamped = e.clamped;
      rep.newton_history.push_back({tau, problem.options.max_newton_iters, {e.best_norm}, false});
      rep.message = e.what();
    } catch (const SingularSystemError& e) {
      rep.newton_history.push_back({tau, 0, {}, false});
      rep.message = e.what();
    } catch (const DomainError& e) {
      clamped = true;
      rep.newton_history.push_back({tau, 0, {}, false});
      rep.message = e.what();
    }
    return std::nullopt;
  };

  bool clamped = false;
  auto first = attempt(0.0, out.z, clamped);
  if (!first) {
    rep.status = clamped ? SolveStatus::left_interval : SolveStatus::stalled;
    rep.clamped = clamped;
    return out;
  }
  out.z = std::move(first->z);
  rep.tau_path.push_back(0.0);
  rep.grad_sup_history.push_back(gradient_sup(problem, out.z));

  const ScalarField lift = harmonic_extension(mesh, problem.boundary_field(1.0));
  double tau = 0.0;
  double step = opt.initial_tau_step;
  while (tau < 1.0) {
    const double next = std::min(1.0, tau + step);
    ScalarField start = out.z;
    for (int v = 0; v < mesh.vertex_count(); ++v) start[v] += (next - tau) * lift[v];
    clamped = false;
    if (auto r = attempt(next, start, clamped)) {
      tau = next;
      out.z = std::move(r->z);
      rep.clamped = rep.clamped || r->clamped;
      rep.tau_path.push_back(tau);
      rep.grad_sup_history.push_back(gradient_sup(problem, out.z));
      continue;
    }
    step *= 0.5;
    if (step < opt.min_tau_step) {
      rep.status = clamped ? SolveStatus::left_interval : SolveStatus::stalled;
      rep.clamped = rep.clamped || clamped;
      rep.message = "tau step underflow at tau = " + std::to_string(tau) + ": " + rep.message;
      break;
    }
  }
  if (tau == 1.0) {
    rep.status = SolveStatus::converged;
    rep.message.clear();
  }
  double fr = 0.0;
  for (double r : residual_Qtau(problem, out.z, tau)) fr = std::max(fr, std::abs(r));
  rep.final_residual = fr;
  return out;
}

}  // namespace ckg
