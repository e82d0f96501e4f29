#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmaop/mesh.hpp"

namespace dmaop {

enum class Variant { LDMAOP, DMAOP };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

/// Bilinear sample lattice over an axis-aligned box (2-D).
struct GridSamples {
  Eigen::Vector2d lo;
  Eigen::Vector2d hi;
  /// rows index y, columns index x; at least 2x2
  Eigen::MatrixXd values;
};

/// Strictly positive density. Value = scale * shape(x), where the shape depends on the kind.
class Density {
 public:
  enum class Kind { Uniform, GaussianFloored, Grid, Analytic };

  /// Analytic shapes carry their own log-derivatives; used for manufactured references.
  struct AnalyticShape {
    std::function<double(const Point&)> log_value;
    std::function<Eigen::VectorXd(const Point&)> grad_log;
    std::function<Eigen::MatrixXd(const Point&)> hess_log;
  };

  static Density uniform(double height);
  /// peak * (floor + (1 - floor) exp(-q/2)), q = sum (x_k - c_k)^2 / var_k; floor is a
  /// fraction of the peak in (0, 1), default 1e-3.
  static Density gaussian(Eigen::VectorXd center, Eigen::VectorXd variances, double peak = 1.0, double floor = 1e-3);
  /// Samples below floor * max(sample) are raised to it.
  static Density grid(GridSamples samples, double floor = 1e-3);
  static Density analytic(AnalyticShape shape, std::string label = "analytic");

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  Density scaled(double factor) const;

  double value(const Point& x) const;
  double log_value(const Point& x) const;
  Eigen::VectorXd grad_log(const Point& x) const;
  Eigen::MatrixXd hess_log(const Point& x) const;

  bool is_uniform() const { return kind_ == Kind::Uniform; }
  /// Uniform shape height (before scale); only meaningful for uniform densities.
  double height() const { return height_; }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::VectorXd& variances() const { return variances_; }
  double peak() const { return peak_; }
  double floor_fraction() const { return floor_; }
  const GridSamples& samples() const { return *grid_; }
  const std::string& label() const { return label_; }

 private:
  Kind kind_ = Kind::Uniform;
  double scale_ = 1.0;
  double height_ = 1.0;
  Eigen::VectorXd center_, variances_;
  double peak_ = 1.0;
  double floor_ = 1e-3;
  std::shared_ptr<const GridSamples> grid_;
  std::shared_ptr<const AnalyticShape> analytic_;
  std::string label_;

  double grid_log_and_derivs(const Point& x, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const;
};

/// Convex, bounded target set: a ball (disc in 2-D) or a convex polygon.
class TargetDomain {
 public:
  enum class Kind { Disc, Polygon };

  static TargetDomain disc(Eigen::VectorXd center, double radius);
  /// Convex vertex loop in either orientation. Throws InputError if not convex.
  static TargetDomain polygon(const Polygon& loop);

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(center_.size()); }
  const Eigen::VectorXd& center() const { return center_; }
  double radius() const { return radius_; }
  const Polygon& loop() const { return loop_; }
  /// Rows are unit normals a_m; constraint a_m . y <= b_m.
  const Eigen::MatrixXd& normals() const { return normals_; }
  const Eigen::VectorXd& offsets() const { return offsets_; }

  double violation(const Point& y) const;
  Point project(const Point& y) const;
  bool contains(const Point& y, double tol = 0.0) const;

  /// Interior reference point (ball centre or polygon area centroid).
  Point interior_point() const { return center_; }
  /// Distance from interior_point() to the boundary.
  double inradius() const;
  /// Lebesgue measure (area in 2-D).
  double measure() const;
  Eigen::AlignedBox<double, Eigen::Dynamic> bounding_box() const;

 private:
  Kind kind_ = Kind::Disc;
  Eigen::VectorXd center_;
  double radius_ = 0.0;
  Polygon loop_;
  Eigen::MatrixXd normals_;
  Eigen::VectorXd offsets_;
};

double target_violation(const TargetDomain& target, const Point& y);
Point target_projection(const TargetDomain& target, const Point& y);
double density_eval(const Density& d, const Point& x);
double density_log_eval(const Density& d, const Point& x);

struct ProblemInstance {
  Mesh mesh;
  TargetDomain target;
  Density f;
  Density g;
  Variant variant = Variant::DMAOP;
};

/// Barycenter-rule quadrature of f over the mesh.
double integrate_source(const Mesh& mesh, const Density& f);
/// Closed form for uniform densities, otherwise 512^2 midpoint rule over the bounding box.
double integrate_target(const TargetDomain& target, const Density& g);

/// Rescales g so both integrals agree. Throws InputError for a non-positive integral.
ProblemInstance mass_normalize(const ProblemInstance& instance);

/// Problem description before meshing: a polygonal source domain and a mesh scale.
struct ProblemSpec {
  Polygon domain;
  TargetDomain target;
  Density f = Density::uniform(1.0);
  Density g = Density::uniform(1.0);
  Variant variant = Variant::DMAOP;
  double h = 0.1;
};

/// Meshes the domain at spec.h and balances the masses.
ProblemInstance instantiate(const ProblemSpec& spec);
/// Uses a given mesh instead; throws InputError if its dimension differs from the target's.
ProblemInstance instantiate(const ProblemSpec& spec, const Mesh& mesh);

}  // namespace dmaop
