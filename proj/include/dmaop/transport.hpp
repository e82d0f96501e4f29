#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmaop/objective.hpp"
#include "dmaop/potential.hpp"
#include "dmaop/problem.hpp"
#include "dmaop/solver.hpp"

namespace dmaop {

/// Source points x_j (columns) paired with targets y_j.
struct DiscreteMap {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;

  int size() const { return static_cast<int>(x.cols()); }
};

DiscreteMap discrete_map(const Mesh& mesh, const DecisionVector& dv);

/// (1 - t) x_j + t eta_j, one column per vertex. Throws InputError unless t is in [0, 1].
Eigen::MatrixXd displacement(const Mesh& mesh, const DecisionVector& dv, double t);

/// sum_i V_i | -(det H_i)^{1/n} + (f(xbar_i) / g(etabar_i))^{1/n} |
double two_sided_cost(const Mesh& mesh, const Eigen::MatrixXd& eta, const Density& f, const Density& g);

struct AssignmentResult {
  bool optimal = false;
  double best_cost = 0.0;
  double identity_cost = 0.0;
};

inline constexpr int kMaxExhaustiveAssignment = 9;

/// Exhaustive search over target permutations for sum |x_j - y_sigma(j)|^2.
/// Throws InputError above kMaxExhaustiveAssignment pairs; use cyclical_check instead.
AssignmentResult assignment_oracle(const DiscreteMap& map);

/// Largest sum_k <y_{j_k}, x_{j_{k+1}} - x_{j_k}> over `trials` random cycles of length 2..max_len.
double cyclical_check(const DiscreteMap& map, int max_len, int trials, std::uint64_t seed);

/// Closed-form instance with its Brenier potential.
struct ReferenceProblem {
  std::string name;
  ProblemSpec spec;
  AnalyticPotential phi;
};

/// [-1/2, 1/2]^2 to itself with unit densities; phi = |x|^2 / 2.
ReferenceProblem identity_reference(double h = 0.25);
/// [0,1]^2 to [0,a] x [0,b], f = 1, g = 1/(ab); phi = (a x1^2 + b x2^2) / 2.
ReferenceProblem scaling_reference(double a = 2.0, double b = 1.0, double h = 0.1);
/// [-1/2, 1/2]^2 to its translate by s; phi = |x|^2 / 2 + <s, x>.
ReferenceProblem translation_reference(const Eigen::Vector2d& shift, double h = 0.25);
/// [0,1]^2 to [1,e]^2 with f = exp(x1 + x2), g = 1; phi = e^x1 + e^x2 - 2.
ReferenceProblem exp_reference(double h = 0.1);
/// Centred unit square to the unit disc with unit densities (no closed form).
ProblemSpec square_to_disc(double h = 0.2);

/// max over vertices of |phi(x_j) - (ref(x_j) - ref(0))|.
double vertex_error(const Mesh& mesh, const OptimizationPotential& phi, const AnalyticPotential& ref);
/// Same maximum over the cell centres of a res x res grid on the domain's bounding box that lie in the domain.
double grid_error(const Polygon& domain, const OptimizationPotential& phi, const AnalyticPotential& ref, int res = 50);

struct StudyRow {
  int N = 0;
  double h = 0.0;
  double cost = 0.0;
  double two_sided = 0.0;
  std::optional<double> sup_err;
  double runtime_s = 0.0;
  bool converged = false;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  /// Least-squares slope of log cost against log N over rows with cost above tol_cost;
  /// empty when fewer than two such rows remain.
  std::optional<double> slope;
  bool complete = true;
  std::string error;
};

/// Meshes and solves at each h (strictly decreasing, at least three values).
StudyResult convergence_study(const ProblemSpec& spec, const std::vector<double>& h_list, const SolverOptions& opts,
                              const std::optional<AnalyticPotential>& reference = std::nullopt);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dmaop
