#include "dmaop/potential.hpp"

#include <cmath>
#include <limits>

#include "dmaop/errors.hpp"
#include "dmaop/parallel.hpp"

namespace dmaop {

OptimizationPotential::OptimizationPotential(Eigen::MatrixXd anchors, Eigen::VectorXd values, Eigen::MatrixXd slopes)
    : anchors_(std::move(anchors)), values_(std::move(values)), slopes_(std::move(slopes)) {
  if (values_.size() == 0 || anchors_.cols() != values_.size() || slopes_.cols() != values_.size() ||
      slopes_.rows() != anchors_.rows())
    throw InputError("potential pieces have inconsistent sizes");
  intercepts_.resize(values_.size());
  for (Eigen::Index j = 0; j < values_.size(); ++j) intercepts_(j) = values_(j) - slopes_.col(j).dot(anchors_.col(j));
  b_ = -intercepts_.maxCoeff();
}

double OptimizationPotential::max_piece(const Point& x, int* arg) const {
  double best = -std::numeric_limits<double>::infinity();
  int best_j = -1;
  for (int j = 0; j < size(); ++j) {
    const double a = values_(j) + slopes_.col(j).dot(x - anchors_.col(j));
    if (a > best) {
      best = a;
      best_j = j;
    }
  }
  if (arg) *arg = best_j;
  return best;
}

double OptimizationPotential::eval(const Point& x) const { return b_ + max_piece(x, nullptr); }

OptimizationPotential::Subgradient OptimizationPotential::subgradient(const Point& x, double tol) const {
  Subgradient s;
  const double top = max_piece(x, &s.index);
  s.eta = slopes_.col(s.index);
  for (int j = 0; j < size(); ++j)
    if (values_(j) + slopes_.col(j).dot(x - anchors_.col(j)) >= top - tol) s.active.push_back(j);
  return s;
}

Eigen::VectorXd OptimizationPotential::eval_batch(const Eigen::MatrixXd& points) const {
  Eigen::VectorXd out(points.cols());
  parallel_for(static_cast<std::size_t>(points.cols()), [&](std::size_t begin, std::size_t end) {
    for (auto k = begin; k < end; ++k) out(static_cast<Eigen::Index>(k)) = eval(points.col(static_cast<Eigen::Index>(k)));
  });
  return out;
}

OptimizationPotential build_potential(const Mesh& mesh, const DecisionVector& dv) {
  if (dv.size() != mesh.num_vertices()) throw InputError("decision vector does not match the mesh");
  return OptimizationPotential(mesh.vertices(), dv.psi, dv.eta);
}

GradientField::GradientField(Mesh mesh, Eigen::MatrixXd eta) : mesh_(std::move(mesh)), eta_(std::move(eta)) {
  jacobians_.reserve(mesh_.num_simplices());
  for (int i = 0; i < mesh_.num_simplices(); ++i) jacobians_.push_back(interpolant_jacobian(mesh_, i, eta_));
}

Point GradientField::eval_in(int i, const Point& x) const {
  const Eigen::VectorXd sigma = mesh_.barycentric(i, x);
  const auto& ids = mesh_.simplex(i).vertex_ids;
  Point g = Point::Zero(mesh_.dim());
  for (std::size_t k = 0; k < ids.size(); ++k) g += sigma(static_cast<Eigen::Index>(k)) * eta_.col(ids[k]);
  return g;
}

std::optional<Point> GradientField::eval(const Point& x) const {
  const auto i = mesh_.locate(x);
  if (!i) return std::nullopt;
  return eval_in(*i, x);
}

GradientField gradient_field(const Mesh& mesh, const DecisionVector& dv) { return GradientField(mesh, dv.eta); }

HessianField hessian_field(const Mesh& mesh, const DecisionVector& dv) {
  std::vector<Eigen::MatrixXd> values;
  values.reserve(mesh.num_simplices());
  for (int i = 0; i < mesh.num_simplices(); ++i) values.push_back(discrete_jacobian(mesh, i, dv.eta));
  return HessianField(std::move(values));
}

}  // namespace dmaop
