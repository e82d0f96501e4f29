#include "dmaop/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include "dmaop/errors.hpp"
#include "dmaop/parallel.hpp"

namespace dmaop {

namespace bg = boost::geometry;
using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint>;
using BMultiPolygon = bg::model::multi_polygon<BPolygon>;

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

BPolygon to_boost(const Polygon& loop) {
  BPolygon out;
  for (const auto& p : loop) bg::append(out.outer(), BPoint(p.x(), p.y()));
  bg::append(out.outer(), BPoint(loop.front().x(), loop.front().y()));
  bg::correct(out);
  return out;
}

}  // namespace

Mesh::Mesh(int dim, Eigen::MatrixXd vertices, std::vector<Simplex> simplices, Polygon polygon)
    : dim_(dim), vertices_(std::move(vertices)), simplices_(std::move(simplices)), polygon_(std::move(polygon)) {
  if (dim_ != 2 && dim_ != 3) throw InputError("mesh dimension must be 2 or 3, got " + std::to_string(dim_));
  if (vertices_.rows() != dim_) throw InputError("vertex matrix has " + std::to_string(vertices_.rows()) + " rows, expected " + std::to_string(dim_));
  if (!vertices_.allFinite()) throw InputError("mesh vertices must be finite");
  const int n_vertices = num_vertices();
  std::vector<char> referenced(n_vertices, 0);
  for (std::size_t i = 0; i < simplices_.size(); ++i) {
    const auto& ids = simplices_[i].vertex_ids;
    if (static_cast<int>(ids.size()) != dim_ + 1)
      throw InputError("simplex " + std::to_string(i) + " has " + std::to_string(ids.size()) + " vertices, expected " + std::to_string(dim_ + 1));
    for (std::size_t a = 0; a < ids.size(); ++a) {
      if (ids[a] < 0 || ids[a] >= n_vertices)
        throw InputError("simplex " + std::to_string(i) + " references vertex " + std::to_string(ids[a]) + " out of range");
      for (std::size_t b = 0; b < a; ++b)
        if (ids[a] == ids[b]) throw InputError("simplex " + std::to_string(i) + " repeats vertex " + std::to_string(ids[a]));
      referenced[ids[a]] = 1;
    }
  }
  for (int j = 0; j < n_vertices; ++j)
    if (!referenced[j]) throw InputError("vertex " + std::to_string(j) + " is not referenced by any simplex");

  const double nfact = factorial(dim_);
  const int m = num_simplices();
  edge_inverses_.resize(m);
  degenerate_.resize(m);
  volumes_.resize(m);
  barycenters_.resize(m);
  boxes_.resize(m);
  for (int i = 0; i < m; ++i) {
    const Eigen::MatrixXd a = edge_matrix(i);
    const double det = a.determinant();
    volumes_[i] = std::abs(det) / nfact;
    double scale = 0.0;
    for (int r = 0; r < dim_; ++r) scale = std::max(scale, a.row(r).norm());
    degenerate_[i] = !(std::abs(det) > 1e-14 * std::pow(scale, dim_));
    if (!degenerate_[i]) edge_inverses_[i] = a.inverse();
    Point c = Point::Zero(dim_);
    Eigen::AlignedBox<double, Eigen::Dynamic> box(dim_);
    for (int id : simplices_[i].vertex_ids) {
      c += vertices_.col(id);
      box.extend(vertices_.col(id));
    }
    barycenters_[i] = c / static_cast<double>(dim_ + 1);
    boxes_[i] = box;
  }
}

Eigen::MatrixXd Mesh::edge_matrix(int i) const {
  const auto& ids = simplex(i).vertex_ids;
  Eigen::MatrixXd a(dim_, dim_);
  for (int j = 1; j <= dim_; ++j) a.row(j - 1) = (vertices_.col(ids[j]) - vertices_.col(ids[0])).transpose();
  return a;
}

const Eigen::MatrixXd& Mesh::edge_matrix_inverse(int i) const {
  if (degenerate_.at(i)) throw DegenerateSimplexError(i, "simplex " + std::to_string(i) + " is degenerate (singular edge matrix)");
  return edge_inverses_[i];
}

double Mesh::diameter(int i) const {
  const auto& ids = simplex(i).vertex_ids;
  double d = 0.0;
  for (std::size_t a = 0; a < ids.size(); ++a)
    for (std::size_t b = 0; b < a; ++b) d = std::max(d, (vertices_.col(ids[a]) - vertices_.col(ids[b])).norm());
  return d;
}

Eigen::VectorXd Mesh::barycentric(int i, const Point& x) const {
  const auto& ids = simplex(i).vertex_ids;
  const Eigen::VectorXd rel = x - vertices_.col(ids[0]);
  Eigen::VectorXd sigma(dim_ + 1);
  // x = x_0 + A^T sigma_{1..n}
  sigma.tail(dim_) = edge_matrix_inverse(i).transpose() * rel;
  sigma(0) = 1.0 - sigma.tail(dim_).sum();
  return sigma;
}

std::optional<int> Mesh::locate(const Point& x, double tol) const {
  for (int i = 0; i < num_simplices(); ++i) {
    if (degenerate_[i]) continue;
    const auto& box = boxes_[i];
    const double pad = tol * (1.0 + box.diagonal().norm());
    bool in_box = true;
    for (int d = 0; d < dim_; ++d)
      if (x(d) < box.min()(d) - pad || x(d) > box.max()(d) + pad) in_box = false;
    if (!in_box) continue;
    if (barycentric(i, x).minCoeff() >= -tol) return i;
  }
  return std::nullopt;
}

bool Mesh::contains_origin() const { return locate(Point::Zero(dim_), 1e-10).has_value(); }

double Mesh::total_volume() const { return pairwise_sum(volumes_); }

double Mesh::h_max() const {
  double h = 0.0;
  for (int i = 0; i < num_simplices(); ++i) h = std::max(h, diameter(i));
  return h;
}

Eigen::MatrixXd edge_matrix(const Mesh& mesh, int i) { return mesh.edge_matrix(i); }

double simplex_volume(const Mesh& mesh, int i) { return mesh.volume(i); }

Point barycenter(const Mesh& mesh, int i) { return mesh.barycenter(i); }

std::optional<int> locate(const Mesh& mesh, const Point& x) { return mesh.locate(x); }

MeshQualityReport quality(const Mesh& mesh, double eps) {
  if (!(eps >= 0.0)) throw InputError("boundary band width must be >= 0");
  MeshQualityReport report;
  report.R_min = std::numeric_limits<double>::infinity();
  report.min_volume = std::numeric_limits<double>::infinity();
  const int n = mesh.dim();
  for (int i = 0; i < mesh.num_simplices(); ++i) {
    report.h_max = std::max(report.h_max, mesh.diameter(i));
    report.min_volume = std::min(report.min_volume, mesh.volume(i));
    Eigen::MatrixXd u = mesh.edge_matrix(i);
    double r = 0.0;
    bool ok = true;
    for (int j = 0; j < n; ++j) {
      const double len = u.row(j).norm();
      if (len == 0.0) ok = false;
      else u.row(j) /= len;
    }
    if (ok) r = std::abs(u.determinant());
    report.R_min = std::min(report.R_min, r);
  }
  if (mesh.num_simplices() == 0) {
    report.R_min = 0.0;
    report.min_volume = 0.0;
  }

  if (n == 2 && mesh.polygon().size() >= 3) {
    BMultiPolygon region;
    const BPolygon domain = to_boost(mesh.polygon());
    if (eps > 0.0) {
      bg::strategy::buffer::distance_symmetric<double> distance(-eps);
      bg::strategy::buffer::side_straight side;
      bg::strategy::buffer::join_miter join;
      bg::strategy::buffer::end_flat end;
      bg::strategy::buffer::point_square point;
      bg::buffer(domain, region, distance, side, join, end, point);
    } else {
      region.push_back(domain);
    }
    const double region_area = bg::area(region);
    std::vector<double> covered(mesh.num_simplices(), 0.0);
    for (int i = 0; i < mesh.num_simplices(); ++i) {
      if (mesh.volume(i) == 0.0) continue;
      BPolygon tri;
      for (int id : mesh.simplex(i).vertex_ids) bg::append(tri.outer(), BPoint(mesh.vertices()(0, id), mesh.vertices()(1, id)));
      const int first = mesh.simplex(i).vertex_ids[0];
      bg::append(tri.outer(), BPoint(mesh.vertices()(0, first), mesh.vertices()(1, first)));
      bg::correct(tri);
      BMultiPolygon piece;
      bg::intersection(tri, region, piece);
      covered[i] = bg::area(piece);
    }
    report.coverage_gap = std::max(0.0, region_area - pairwise_sum(covered));
  }
  return report;
}

double polygon_signed_area(const Polygon& polygon) {
  double a = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = polygon[k];
    const auto& q = polygon[(k + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

bool point_in_polygon(const Polygon& polygon, const Eigen::Vector2d& p, double tol) {
  const std::size_t n = polygon.size();
  // on-boundary check first
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector2d a = polygon[k];
    const Eigen::Vector2d b = polygon[(k + 1) % n];
    const Eigen::Vector2d ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    if ((a + t * ab - p).norm() <= tol) return true;
  }
  bool inside = false;
  for (std::size_t k = 0, l = n - 1; k < n; l = k++) {
    const auto& a = polygon[k];
    const auto& b = polygon[l];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

}  // namespace dmaop
