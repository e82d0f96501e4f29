#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace dmaop {

using Point = Eigen::VectorXd;
using Polygon = std::vector<Eigen::Vector2d>;

/// Vertex indices of one simplex; entry 0 is the base vertex.
struct Simplex {
  std::vector<int> vertex_ids;
};

struct MeshQualityReport {
  double h_max = 0.0;         // largest simplex diameter
  double R_min = 0.0;         // smallest det of unit edge directions from the base vertex
  double coverage_gap = 0.0;  // measure of the eps-shrunk domain not covered by simplices
  double min_volume = 0.0;
};

/// Almost-triangulation of the source domain. Immutable once built; per-simplex
/// geometry (edge matrix inverse, volume, barycenter) is cached at construction.
class Mesh {
 public:
  Mesh() = default;
  /// vertices is dim x N (one column per point). Throws InputError on bad indices,
  /// non-finite coordinates or unreferenced vertices. Degenerate simplices are accepted
  /// and flagged by the operations that need an invertible edge matrix.
  Mesh(int dim, Eigen::MatrixXd vertices, std::vector<Simplex> simplices, Polygon polygon = {});

  int dim() const { return dim_; }
  int num_vertices() const { return static_cast<int>(vertices_.cols()); }
  int num_simplices() const { return static_cast<int>(simplices_.size()); }

  const Eigen::MatrixXd& vertices() const { return vertices_; }
  Point vertex(int j) const { return vertices_.col(j); }
  const std::vector<Simplex>& simplices() const { return simplices_; }
  const Simplex& simplex(int i) const { return simplices_.at(i); }
  const Polygon& polygon() const { return polygon_; }

  /// Rows are x_{i_j} - x_{i_0}, j = 1..n.
  Eigen::MatrixXd edge_matrix(int i) const;
  /// Cached inverse of edge_matrix(i); throws DegenerateSimplexError if singular.
  const Eigen::MatrixXd& edge_matrix_inverse(int i) const;
  bool is_degenerate(int i) const { return degenerate_.at(i); }
  double volume(int i) const { return volumes_.at(i); }
  const Point& barycenter(int i) const { return barycenters_.at(i); }
  double diameter(int i) const;

  /// Barycentric coordinates (sigma_0..sigma_n) of x with respect to simplex i.
  Eigen::VectorXd barycentric(int i, const Point& x) const;
  /// Lowest index of a simplex containing x (coordinates >= -tol), if any.
  std::optional<int> locate(const Point& x, double tol = 1e-12) const;

  /// Origin inside the closed domain (covered by some simplex).
  bool contains_origin() const;
  double total_volume() const;
  /// Largest simplex diameter (h of the mesh).
  double h_max() const;

 private:
  int dim_ = 2;
  Eigen::MatrixXd vertices_;
  std::vector<Simplex> simplices_;
  Polygon polygon_;
  std::vector<Eigen::MatrixXd> edge_inverses_;
  std::vector<bool> degenerate_;
  std::vector<double> volumes_;
  std::vector<Point> barycenters_;
  std::vector<Eigen::AlignedBox<double, Eigen::Dynamic>> boxes_;
};

Eigen::MatrixXd edge_matrix(const Mesh& mesh, int i);
double simplex_volume(const Mesh& mesh, int i);
Point barycenter(const Mesh& mesh, int i);
std::optional<int> locate(const Mesh& mesh, const Point& x);

/// h_max, R_min, min volume, and the uncovered measure of the domain shrunk by eps.
MeshQualityReport quality(const Mesh& mesh, double eps = 0.0);

/// Structured grid-overlay mesher for a simple 2-D polygon.
///
/// Grid lines sit at half-integer multiples of h around the centre of the polygon's
/// bounding box. Vertices of cells cut by the boundary are snapped onto it (polygon
/// corners first), cells are split into two triangles along the diagonal that gives
/// the better minimum angle, and only triangles lying inside the polygon survive.
Mesh triangulate_polygon(const Polygon& polygon, double h);

/// Signed area (counter-clockwise positive).
double polygon_signed_area(const Polygon& polygon);
bool point_in_polygon(const Polygon& polygon, const Eigen::Vector2d& p, double tol = 1e-10);

}  // namespace dmaop
