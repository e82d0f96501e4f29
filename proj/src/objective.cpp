#include "dmaop/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dmaop/errors.hpp"
#include "dmaop/parallel.hpp"

namespace dmaop {

Eigen::MatrixXd interpolant_jacobian(const Mesh& mesh, int i, const Eigen::MatrixXd& eta) {
  const int n = mesh.dim();
  const auto& ids = mesh.simplex(i).vertex_ids;
  Eigen::MatrixXd b(n, n);
  for (int j = 1; j <= n; ++j) b.row(j - 1) = (eta.col(ids[j]) - eta.col(ids[0])).transpose();
  return mesh.edge_matrix_inverse(i) * b;
}

Eigen::MatrixXd discrete_jacobian(const Mesh& mesh, int i, const Eigen::MatrixXd& eta) {
  const Eigen::MatrixXd j = interpolant_jacobian(mesh, i, eta);
  // entrywise j(a,b) + j(b,a) is symmetric bit for bit
  return 0.5 * (j + j.transpose());
}

double small_det(const Eigen::MatrixXd& h) {
  if (h.rows() == 2) return h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
  if (h.rows() == 3)
    return h(0, 0) * (h(1, 1) * h(2, 2) - h(1, 2) * h(2, 1)) - h(0, 1) * (h(1, 0) * h(2, 2) - h(1, 2) * h(2, 0)) +
           h(0, 2) * (h(1, 0) * h(2, 1) - h(1, 1) * h(2, 0));
  return h.determinant();
}

namespace {

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& h) {
  if (h.rows() == 2) {
    const double mean = 0.5 * (h(0, 0) + h(1, 1));
    const double half_gap = std::hypot(0.5 * (h(0, 0) - h(1, 1)), h(0, 1));
    return Eigen::Vector2d(mean - half_gap, mean + half_gap);
  }
  // Householder tridiagonalisation followed by implicit QL
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace

double small_min_eigenvalue(const Eigen::MatrixXd& h) { return symmetric_eigenvalues(h).minCoeff(); }

double root_det(const Eigen::MatrixXd& h, int simplex, bool clamp_all) {
  const int n = static_cast<int>(h.rows());
  const Eigen::VectorXd ev = symmetric_eigenvalues(h);
  const double lo = ev.minCoeff();
  if (lo >= 0.0) return std::pow(std::max(0.0, small_det(h)), 1.0 / n);
  if (!clamp_all && lo <= -kPsdTolerance)
    throw DomainError(simplex, "discrete Jacobian of simplex " + std::to_string(simplex) + " is not positive semidefinite (min eigenvalue " +
                                   std::to_string(lo) + ")");
  double prod = 1.0;
  for (int k = 0; k < n; ++k) prod *= std::max(0.0, ev(k));
  return std::pow(prod, 1.0 / n);
}

Point eta_mean(const Mesh& mesh, int i, const Eigen::MatrixXd& eta) {
  Point m = Point::Zero(mesh.dim());
  for (int id : mesh.simplex(i).vertex_ids) m += eta.col(id);
  return m / static_cast<double>(mesh.dim() + 1);
}

double penalty_argument(const Mesh& mesh, int i, const Eigen::MatrixXd& eta, const Density& f, const Density& g, Variant variant) {
  const int n = mesh.dim();
  const Eigen::MatrixXd h = discrete_jacobian(mesh, i, eta);
  const Point& xbar = mesh.barycenter(i);
  const Point ebar = eta_mean(mesh, i, eta);
  if (variant == Variant::LDMAOP) {
    const double det = small_det(h);
    if (!(det > 0.0) || small_min_eigenvalue(h) <= 0.0)
      throw DomainError(i, "log det undefined on simplex " + std::to_string(i) + " (det H = " + std::to_string(det) + ")");
    return -std::log(det) - g.log_value(ebar) + f.log_value(xbar);
  }
  const double ratio_root = std::exp((f.log_value(xbar) - g.log_value(ebar)) / n);
  return -root_det(h, i) + ratio_root;
}

double penalty(const Mesh& mesh, int i, const Eigen::MatrixXd& eta, const Density& f, const Density& g, Variant variant) {
  return std::max(0.0, penalty_argument(mesh, i, eta, f, g, variant));
}

double objective(const Mesh& mesh, const Eigen::MatrixXd& eta, const Density& f, const Density& g, Variant variant) {
  const int m = mesh.num_simplices();
  std::vector<double> terms(m);
  for (int i = 0; i < m; ++i) terms[i] = mesh.volume(i) * penalty(mesh, i, eta, f, g, variant);
  return pairwise_sum(terms);
}

ConstraintResiduals residuals(const Mesh& mesh, const DecisionVector& dv, const TargetDomain& target) {
  const int n_vertices = mesh.num_vertices();
  if (dv.size() != n_vertices || dv.eta.cols() != n_vertices || dv.eta.rows() != mesh.dim())
    throw InputError("decision vector does not match the mesh");
  ConstraintResiduals r;
  const Eigen::MatrixXd& x = mesh.vertices();

  // row i: max_j psi_i + <eta_i, x_j - x_i> - psi_j, computed per row then reduced in order
  std::vector<double> row_max(n_vertices, -std::numeric_limits<double>::infinity());
  std::vector<int> row_arg(n_vertices, -1);
  parallel_for(static_cast<std::size_t>(n_vertices), [&](std::size_t begin, std::size_t end) {
    for (auto i = static_cast<int>(begin); i < static_cast<int>(end); ++i) {
      const double base = dv.psi(i) - dv.eta.col(i).dot(x.col(i));
      for (int j = 0; j < n_vertices; ++j) {
        if (j == i) continue;
        const double v = base + dv.eta.col(i).dot(x.col(j)) - dv.psi(j);
        if (v > row_max[i]) {
          row_max[i] = v;
          row_arg[i] = j;
        }
      }
    }
  });
  r.hyperplane_max = n_vertices > 1 ? -std::numeric_limits<double>::infinity() : 0.0;
  for (int i = 0; i < n_vertices; ++i) {
    if (row_arg[i] >= 0 && row_max[i] > r.hyperplane_max) {
      r.hyperplane_max = row_max[i];
      r.worst_pair_i = i;
      r.worst_pair_j = row_arg[i];
    }
  }

  r.target_max = 0.0;
  for (int j = 0; j < n_vertices; ++j) {
    const double v = target.violation(dv.eta.col(j));
    if (v > r.target_max) {
      r.target_max = v;
      r.worst_target_vertex = j;
    }
  }

  r.min_eig_H = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh.num_simplices(); ++i) {
    const double e = small_min_eigenvalue(discrete_jacobian(mesh, i, dv.eta));
    if (e < r.min_eig_H) {
      r.min_eig_H = e;
      r.worst_simplex = i;
    }
  }
  if (mesh.num_simplices() == 0) r.min_eig_H = 0.0;
  return r;
}

DecisionVector sample_potential(const Mesh& mesh, const AnalyticPotential& phi) {
  DecisionVector dv;
  dv.psi.resize(mesh.num_vertices());
  dv.eta.resize(mesh.dim(), mesh.num_vertices());
  for (int j = 0; j < mesh.num_vertices(); ++j) {
    const Point x = mesh.vertex(j);
    dv.psi(j) = phi.value(x);
    dv.eta.col(j) = phi.gradient(x);
  }
  return dv;
}

double restriction_cost(const Mesh& mesh, const AnalyticPotential& phi, const Density& f, const Density& g, Variant variant) {
  return objective(mesh, sample_potential(mesh, phi).eta, f, g, variant);
}

}  // namespace dmaop
