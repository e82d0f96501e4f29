#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dmaop/mesh.hpp"
#include "dmaop/problem.hpp"

namespace dmaop {

/// Potential values psi_j and subgradients eta_j (one column per vertex).
struct DecisionVector {
  Eigen::VectorXd psi;
  Eigen::MatrixXd eta;  // dim x N

  int size() const { return static_cast<int>(psi.size()); }
};

struct ConstraintResiduals {
  /// max over i != j of psi_i + <eta_i, x_j - x_i> - psi_j (<= 0 is feasible)
  double hyperplane_max = 0.0;
  /// max_j distance-type violation of eta_j in the target
  double target_max = 0.0;
  /// min over simplices of the smallest eigenvalue of H_i
  double min_eig_H = 0.0;
  int worst_pair_i = -1, worst_pair_j = -1;
  int worst_target_vertex = -1;
  int worst_simplex = -1;
};

/// A closed-form convex potential with its gradient (e.g. a Brenier potential).
struct AnalyticPotential {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
};

/// Eigenvalues within this distance below zero are treated as zero.
inline constexpr double kPsdTolerance = 1e-10;

/// sym(A_i^{-1} B_i) with B_i rows eta_{i_j} - eta_{i_0}.
Eigen::MatrixXd discrete_jacobian(const Mesh& mesh, int i, const Eigen::MatrixXd& eta);
/// Unsymmetrised A_i^{-1} B_i (the Jacobian of the barycentric interpolant).
Eigen::MatrixXd interpolant_jacobian(const Mesh& mesh, int i, const Eigen::MatrixXd& eta);

double small_det(const Eigen::MatrixXd& h);
double small_min_eigenvalue(const Eigen::MatrixXd& h);
/// (det H)^{1/n} with eigenvalues in (-kPsdTolerance, 0) clamped to zero. If clamp_all is
/// set every negative eigenvalue is clamped; otherwise a more negative one throws DomainError.
double root_det(const Eigen::MatrixXd& h, int simplex, bool clamp_all = false);

/// Mean of eta over the vertices of simplex i.
Point eta_mean(const Mesh& mesh, int i, const Eigen::MatrixXd& eta);

/// Signed argument of the per-simplex max{0, .}.
double penalty_argument(const Mesh& mesh, int i, const Eigen::MatrixXd& eta, const Density& f, const Density& g,
                        Variant variant);
double penalty(const Mesh& mesh, int i, const Eigen::MatrixXd& eta, const Density& f, const Density& g, Variant variant);
/// sum_i V_i * penalty_i
double objective(const Mesh& mesh, const Eigen::MatrixXd& eta, const Density& f, const Density& g, Variant variant);

ConstraintResiduals residuals(const Mesh& mesh, const DecisionVector& dv, const TargetDomain& target);

DecisionVector sample_potential(const Mesh& mesh, const AnalyticPotential& phi);
/// Objective at psi_j = phi(x_j), eta_j = grad phi(x_j).
double restriction_cost(const Mesh& mesh, const AnalyticPotential& phi, const Density& f, const Density& g, Variant variant);

}  // namespace dmaop
