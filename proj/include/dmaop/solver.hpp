#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmaop/objective.hpp"
#include "dmaop/problem.hpp"

namespace dmaop {

struct SolverOptions {
  Variant variant = Variant::DMAOP;
  int max_outer = 30;     // barrier stages
  int max_newton = 50;    // Newton iterations per stage
  double barrier_mu = 5.0;
  double tol_cost = 1e-7;
  double tol_feas = 1e-8;
  bool fallback = true;   // projected subgradient when Newton stalls
  int max_subgrad = 2000;
  std::uint64_t seed = 0;

  /// Throws InputError unless tolerances are positive and barrier_mu > 1.
  void validate() const;
};

struct Solution {
  DecisionVector dv;
  double b_offset = 0.0;
  double cost = 0.0;
  Variant variant = Variant::DMAOP;
};

struct SolveReport {
  double cost = 0.0;
  double initial_cost = 0.0;
  ConstraintResiduals residuals;
  int outer_iters = 0;
  int newton_iters = 0;
  int subgrad_iters = 0;
  double wall_time_s = 0.0;
  bool converged = false;
  std::string reason;
  /// Best cost so far: the starting point, then one entry per outer stage.
  std::vector<double> trace;
  std::vector<std::string> warnings;
};

/// Strongly convex quadratic start: eta_j = y0 + beta x_j, psi_j = <y0, x_j> + beta |x_j|^2 / 2
/// with beta = r / (2 max |x_j|), y0 and r the target's interior point and inradius.
DecisionVector feasible_init(const ProblemInstance& instance);

/// Minimises the (L)DMAOP objective. opts.variant overrides instance.variant.
/// Throws InputError for a degenerate mesh, an uncovered origin or unbalanced masses.
std::pair<Solution, SolveReport> solve(const ProblemInstance& instance, const SolverOptions& opts = {});

/// Raises psi to the smallest values >= the input that satisfy every hyperplane constraint
/// for the given eta (longest-path relaxation). Returns false on a positive cycle.
bool lift_psi(const Mesh& mesh, const Eigen::MatrixXd& eta, Eigen::VectorXd& psi, double tol = 0.0);

}  // namespace dmaop
