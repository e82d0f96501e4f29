#include "dmaop/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "dmaop/epigraph.hpp"
#include "dmaop/errors.hpp"

namespace dmaop {

namespace {

constexpr double kStageDecrement = 1e-8;
constexpr double kArmijo = 0.01;

struct Iterate {
  DecisionVector dv;
  double cost = std::numeric_limits<double>::infinity();
};

double safe_objective(const ProblemInstance& inst, const Eigen::MatrixXd& eta) {
  try {
    return objective(inst.mesh, eta, inst.f, inst.g, inst.variant);
  } catch (const DomainError&) {
    return std::numeric_limits<double>::infinity();
  }
}

bool jacobians_admissible(const ProblemInstance& inst, const Eigen::MatrixXd& eta) {
  for (int i = 0; i < inst.mesh.num_simplices(); ++i) {
    const double lo = small_min_eigenvalue(discrete_jacobian(inst.mesh, i, eta));
    if (inst.variant == Variant::LDMAOP ? !(lo > 0.0) : !(lo > -kPsdTolerance)) return false;
  }
  return true;
}

double offset_for(const Mesh& mesh, const DecisionVector& dv) {
  double best = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < dv.size(); ++j) best = std::max(best, dv.psi(j) - dv.eta.col(j).dot(mesh.vertices().col(j)));
  return -best;
}

/// Projected subgradient on the nonsmooth objective, starting from (and improving) best.
int subgradient_phase(const ProblemInstance& inst, const EpigraphProgram& prog, const SolverOptions& opts, Iterate& best) {
  const Mesh& mesh = inst.mesh;
  const int n = mesh.dim();
  const double step0 = 0.1 * inst.target.inradius();
  DecisionVector cur = best.dv;
  int iters = 0;
  for (int k = 1; k <= opts.max_subgrad; ++k) {
    ++iters;
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, mesh.num_vertices());
    for (int i = 0; i < mesh.num_simplices(); ++i) {
      const auto lt = prog.local_terms(i, cur.eta, true);
      if (!lt.valid || lt.p <= 0.0) continue;
      const auto& ids = mesh.simplex(i).vertex_ids;
      for (int r = 0; r <= n; ++r) grad.col(ids[r]) += prog.volume(i) * lt.grad_p.segment(r * n, n);
    }
    const double gnorm = grad.norm();
    if (gnorm == 0.0) break;
    DecisionVector next = cur;
    next.eta -= (step0 / std::sqrt(static_cast<double>(k)) / gnorm) * grad;
    for (int j = 0; j < mesh.num_vertices(); ++j) next.eta.col(j) = inst.target.project(next.eta.col(j));
    if (!jacobians_admissible(inst, next.eta)) continue;
    if (!lift_psi(mesh, next.eta, next.psi)) continue;
    cur = std::move(next);
    const double c = safe_objective(inst, cur.eta);
    if (c < best.cost) best = {cur, c};
    if (best.cost <= opts.tol_cost) break;
  }
  return iters;
}

}  // namespace

void SolverOptions::validate() const {
  if (!(tol_cost > 0.0) || !(tol_feas > 0.0)) throw InputError("solver tolerances must be positive");
  if (!(barrier_mu > 1.0)) throw InputError("barrier_mu must exceed 1");
  if (max_outer < 1 || max_newton < 1 || max_subgrad < 0) throw InputError("iteration limits must be positive");
}

DecisionVector feasible_init(const ProblemInstance& instance) {
  const Mesh& mesh = instance.mesh;
  const Point y0 = instance.target.interior_point();
  const double r = instance.target.inradius();
  if (!(r > 0.0)) throw InputError("target has empty interior");
  double rmax = 0.0;
  for (int j = 0; j < mesh.num_vertices(); ++j) rmax = std::max(rmax, mesh.vertices().col(j).norm());
  const double beta = rmax > 0.0 ? r / (2.0 * rmax) : 1.0;
  DecisionVector dv;
  dv.psi.resize(mesh.num_vertices());
  dv.eta.resize(mesh.dim(), mesh.num_vertices());
  for (int j = 0; j < mesh.num_vertices(); ++j) {
    const Point x = mesh.vertices().col(j);
    dv.psi(j) = y0.dot(x) + 0.5 * beta * x.squaredNorm();
    dv.eta.col(j) = y0 + beta * x;
  }
  return dv;
}

bool lift_psi(const Mesh& mesh, const Eigen::MatrixXd& eta, Eigen::VectorXd& psi, double tol) {
  const int nv = mesh.num_vertices();
  const Eigen::MatrixXd& x = mesh.vertices();
  for (int pass = 0; pass <= nv; ++pass) {
    bool changed = false;
    for (int j = 0; j < nv; ++j) {
      for (int i = 0; i < nv; ++i) {
        if (i == j) continue;
        const double v = psi(i) + eta.col(i).dot(x.col(j) - x.col(i));
        if (v > psi(j) + tol) {
          psi(j) = v;
          changed = true;
        }
      }
    }
    if (!changed) return true;
  }
  return false;
}

std::pair<Solution, SolveReport> solve(const ProblemInstance& instance, const SolverOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  opts.validate();
  ProblemInstance inst = instance;
  inst.variant = opts.variant;
  const Mesh& mesh = inst.mesh;

  if (mesh.num_simplices() == 0) throw InputError("mesh has no simplices");
  for (int i = 0; i < mesh.num_simplices(); ++i)
    if (mesh.is_degenerate(i)) throw InputError("mesh simplex " + std::to_string(i) + " is degenerate");
  if (!mesh.contains_origin()) throw InputError("origin is not covered by the mesh");
  if (inst.target.dim() != mesh.dim()) throw InputError("target dimension does not match the mesh");
  const double mass_f = integrate_source(mesh, inst.f);
  const double mass_g = integrate_target(inst.target, inst.g);
  if (std::abs(mass_f - mass_g) > 1e-8 * std::max(mass_f, mass_g))
    throw InputError("source and target masses differ (" + std::to_string(mass_f) + " vs " + std::to_string(mass_g) + ")");

  SolveReport report;
  if (inst.g.kind() == Density::Kind::Grid)
    report.warnings.push_back("target density is sampled on a grid; convexity of g^(-1/n) is not checked");

  const EpigraphProgram prog(inst);
  const double theta = prog.counts().barrier_parameter;

  Iterate best;
  best.dv = feasible_init(inst);
  best.cost = objective(mesh, best.dv.eta, inst.f, inst.g, inst.variant);
  report.initial_cost = best.cost;
  report.trace.push_back(best.cost);

  Eigen::VectorXd slacks(mesh.num_simplices());
  double weighted = 0.0;
  for (int i = 0; i < mesh.num_simplices(); ++i) {
    slacks(i) = std::max(prog.penalty_argument(i, best.dv.eta), 0.0) + 1.0;
    weighted += prog.volume(i) * slacks(i);
  }
  double tau = theta / std::max(weighted, 1e-300);
  Eigen::VectorXd z = prog.pack(best.dv, slacks);
  prog.recenter_slacks(z, tau);
  if (!prog.strictly_feasible(z)) throw std::logic_error("starting point is not strictly feasible");

  int failures = 0;
  bool stalled = false;
  if (best.cost == 0.0) {
    report.converged = true;
    report.reason = "zero cost at the starting point";
  }
  for (int outer = 0; outer < opts.max_outer && !report.converged && !stalled; ++outer) {
    for (int it = 0; it < opts.max_newton; ++it) {
      const auto step = prog.newton_step(z, tau);
      if (step.decrement_sq / 2.0 <= kStageDecrement) break;
      const double m0 = prog.merit(z, tau);
      const double slope = -step.decrement_sq;
      double alpha = std::min(1.0, 0.99 * prog.max_linear_step(z, step.dz));
      bool accepted = false;
      Eigen::VectorXd trial;
      while (alpha > 1e-14) {
        trial = z + alpha * step.dz;
        const double m = prog.merit(trial, tau);
        // allow for rounding in large merit values
        if (std::isfinite(m) && m <= m0 + kArmijo * alpha * slope + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(m0)) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        if (step.decrement_sq / 2.0 > 1e-6 && ++failures >= 2) stalled = true;
        break;
      }
      z = trial;
      prog.recenter_slacks(z, tau);
      ++report.newton_iters;
    }
    ++report.outer_iters;
    const DecisionVector dv = prog.unpack(z);
    const double c = safe_objective(inst, dv.eta);
    if (c < best.cost) best = {dv, c};
    report.trace.push_back(best.cost);
    if (best.cost == 0.0) {
      report.converged = true;
      report.reason = "zero cost reached";
    } else if (theta / tau < opts.tol_cost) {
      report.converged = true;
      report.reason = "barrier gap below tol_cost";
    }
    tau *= opts.barrier_mu;
    prog.recenter_slacks(z, tau);
  }

  if (stalled) {
    if (opts.fallback) {
      report.subgrad_iters = subgradient_phase(inst, prog, opts, best);
      report.trace.push_back(best.cost);
      report.converged = best.cost <= opts.tol_cost;
      report.reason = report.converged ? "subgradient fallback reached tol_cost" : "Newton stalled; subgradient fallback hit its iteration cap";
    } else {
      report.reason = "Newton line search failed twice";
    }
  } else if (!report.converged) {
    report.reason = "max_outer reached";
  }

  report.residuals = residuals(mesh, best.dv, inst.target);
  if (report.residuals.hyperplane_max > opts.tol_feas) {
    lift_psi(mesh, best.dv.eta, best.dv.psi);
    report.residuals = residuals(mesh, best.dv, inst.target);
  }
  const auto& res = report.residuals;
  const bool psd_ok = inst.variant == Variant::LDMAOP ? res.min_eig_H > 0.0 : res.min_eig_H >= -opts.tol_feas;
  if (res.hyperplane_max > opts.tol_feas || res.target_max > opts.tol_feas || !psd_ok)
    throw std::logic_error("solver produced an infeasible iterate");

  Solution sol;
  sol.dv = best.dv;
  sol.cost = best.cost;
  sol.variant = inst.variant;
  sol.b_offset = offset_for(mesh, sol.dv);
  report.cost = best.cost;
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(sol), std::move(report)};
}

}  // namespace dmaop
