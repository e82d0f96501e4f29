#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dmaop/objective.hpp"
#include "dmaop/problem.hpp"

namespace dmaop {

/// Smooth reformulation of the (L)DMAOP used by the barrier solver.
///
/// Variables z = [psi (N) | eta (n N, vertex-major) | t (M)]. Each simplex gets a slack
/// t_i with t_i >= 0 and t_i >= p_i(eta), where p_i is the signed penalty argument; the
/// objective becomes sum_i V_i t_i. Barriers:
///   -log(t_i - p_i), -log t_i, -log det H_i             per simplex
///   -log(psi_j - psi_i - <eta_i, x_j - x_i>)            per ordered pair i != j
///   -log(r^2 - |eta_j - c|^2) or -log(b_m - a_m.eta_j)  per vertex
class EpigraphProgram {
 public:
  struct Counts {
    int slacks = 0;
    int epigraph = 0;      // t_i >= p_i
    int slack_bounds = 0;  // t_i >= 0
    int hyperplane = 0;    // N^2 - N
    int target = 0;        // one membership constraint per vertex
    int target_halfspaces = 0;
    int psd = 0;           // H_i > 0, one per simplex
    /// Self-concordance parameter of the full barrier (duality-gap numerator).
    double barrier_parameter = 0.0;
  };

  /// Per-simplex penalty argument and its eta-derivatives over the local
  /// (n+1) n vector of the simplex's vertex subgradients (vertex-major).
  struct LocalTerms {
    bool valid = false;  // H_i positive definite
    double p = 0.0;
    Eigen::VectorXd grad_p;
    Eigen::MatrixXd hess_p;
    double logdet = 0.0;
    Eigen::VectorXd grad_logdet;
    Eigen::MatrixXd hess_logdet;
  };

  struct NewtonStep {
    Eigen::VectorXd dz;
    double decrement_sq = 0.0;
    double regularization = 0.0;
  };

  explicit EpigraphProgram(const ProblemInstance& instance);

  const Counts& counts() const { return counts_; }
  int num_vertices() const { return n_vertices_; }
  int num_simplices() const { return n_simplices_; }
  int dim() const { return dim_; }
  int num_variables() const { return n_vertices_ * (1 + dim_) + n_simplices_; }
  int psi_index(int j) const { return j; }
  int eta_index(int j, int d) const { return n_vertices_ + j * dim_ + d; }
  int slack_index(int i) const { return n_vertices_ * (1 + dim_) + i; }

  Eigen::VectorXd pack(const DecisionVector& dv, const Eigen::VectorXd& slacks) const;
  DecisionVector unpack(const Eigen::VectorXd& z) const;
  Eigen::MatrixXd eta_of(const Eigen::VectorXd& z) const;

  LocalTerms local_terms(int i, const Eigen::MatrixXd& eta, bool derivatives) const;
  double penalty_argument(int i, const Eigen::MatrixXd& eta) const;

  /// All barrier arguments strictly positive and every H_i positive definite.
  bool strictly_feasible(const Eigen::VectorXd& z) const;
  /// tau * sum V_i t_i + barrier; +infinity outside the barrier domain.
  double merit(const Eigen::VectorXd& z, double tau) const;
  Eigen::VectorXd merit_gradient(const Eigen::VectorXd& z, double tau) const;
  /// Dense Hessian of the merit, for verification; the solver uses newton_step.
  Eigen::MatrixXd merit_hessian(const Eigen::VectorXd& z, double tau) const;
  /// Newton direction with slacks eliminated simplex by simplex.
  NewtonStep newton_step(const Eigen::VectorXd& z, double tau) const;

  /// argmin_t tau V_i t - log(t - p) - log t.
  double centered_slack(int i, double p, double tau) const;
  /// Replaces every t_i by its centred value for the current eta.
  void recenter_slacks(Eigen::VectorXd& z, double tau) const;
  /// Largest alpha <= 1 keeping every linear barrier argument positive along dz.
  double max_linear_step(const Eigen::VectorXd& z, const Eigen::VectorXd& dz) const;

  double volume(int i) const { return volumes_[i]; }

 private:
  void hyperplane_terms(const Eigen::VectorXd& z, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const;
  void target_terms(const Eigen::VectorXd& z, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const;
  double target_slack_min(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  int dim_ = 2;
  int n_vertices_ = 0;
  int n_simplices_ = 0;
  Variant variant_ = Variant::DMAOP;
  Eigen::MatrixXd x_;
  TargetDomain target_;
  Density g_;
  std::vector<std::vector<int>> ids_;
  std::vector<Eigen::MatrixXd> c_;  // A_i^{-1} [-1 | I], n x (n+1)
  std::vector<double> volumes_;
  std::vector<double> log_f_;       // log f at barycenters
  Counts counts_;
};

}  // namespace dmaop
