#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dmaop/mesh.hpp"
#include "dmaop/objective.hpp"

namespace dmaop {

/// phi(x) = b + max_j [psi_j + <eta_j, x - x_j>], normalised so phi(0) = 0.
class OptimizationPotential {
 public:
  struct Subgradient {
    Point eta;                // slope of the lowest-index maximising piece
    int index = -1;           // that piece
    std::vector<int> active;  // pieces within the tolerance of the maximum
  };

  OptimizationPotential() = default;
  /// anchors and slopes are dim x N.
  OptimizationPotential(Eigen::MatrixXd anchors, Eigen::VectorXd values, Eigen::MatrixXd slopes);

  int size() const { return static_cast<int>(values_.size()); }
  int dim() const { return static_cast<int>(anchors_.rows()); }
  double b_offset() const { return b_; }
  const Eigen::MatrixXd& anchors() const { return anchors_; }
  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::MatrixXd& slopes() const { return slopes_; }

  double eval(const Point& x) const;
  Subgradient subgradient(const Point& x, double tol = 1e-10) const;
  /// One value per column of points.
  Eigen::VectorXd eval_batch(const Eigen::MatrixXd& points) const;

 private:
  double max_piece(const Point& x, int* arg) const;

  Eigen::MatrixXd anchors_;
  Eigen::VectorXd values_;
  Eigen::MatrixXd slopes_;
  Eigen::VectorXd intercepts_;  // psi_j - <eta_j, x_j>
  double b_ = 0.0;
};

OptimizationPotential build_potential(const Mesh& mesh, const DecisionVector& dv);

/// Barycentric interpolant G of the vertex subgradients.
class GradientField {
 public:
  GradientField(Mesh mesh, Eigen::MatrixXd eta);

  /// A_i^{-1} B_i
  const Eigen::MatrixXd& jacobian(int i) const { return jacobians_.at(i); }
  /// G restricted to simplex i, extended affinely.
  Point eval_in(int i, const Point& x) const;
  /// G at x using the lowest-index simplex containing it.
  std::optional<Point> eval(const Point& x) const;
  const Mesh& mesh() const { return mesh_; }

 private:
  Mesh mesh_;
  Eigen::MatrixXd eta_;
  std::vector<Eigen::MatrixXd> jacobians_;
};

/// Piecewise-constant symmetric matrix field, H_i on simplex i.
class HessianField {
 public:
  explicit HessianField(std::vector<Eigen::MatrixXd> values) : values_(std::move(values)) {}
  const Eigen::MatrixXd& at(int i) const { return values_.at(i); }
  int size() const { return static_cast<int>(values_.size()); }

 private:
  std::vector<Eigen::MatrixXd> values_;
};

/// Both throw DegenerateSimplexError on a singular simplex.
GradientField gradient_field(const Mesh& mesh, const DecisionVector& dv);
HessianField hessian_field(const Mesh& mesh, const DecisionVector& dv);

}  // namespace dmaop
