#include "dmaop/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dmaop/errors.hpp"
#include "dmaop/parallel.hpp"

namespace dmaop {

std::string to_string(Variant v) { return v == Variant::LDMAOP ? "ldmaop" : "dmaop"; }

Variant parse_variant(const std::string& s) {
  if (s == "ldmaop" || s == "LDMAOP") return Variant::LDMAOP;
  if (s == "dmaop" || s == "DMAOP") return Variant::DMAOP;
  throw InputError("unknown variant '" + s + "' (expected \"dmaop\" or \"ldmaop\")");
}

// ---------------------------------------------------------------------------
// Density

Density Density::uniform(double height) {
  if (!(height > 0.0) || !std::isfinite(height)) throw InputError("uniform density height must be positive");
  Density d;
  d.kind_ = Kind::Uniform;
  d.height_ = height;
  d.label_ = "uniform";
  return d;
}

Density Density::gaussian(Eigen::VectorXd center, Eigen::VectorXd variances, double peak, double floor) {
  if (center.size() != variances.size() || center.size() == 0) throw InputError("gaussian centre and variances must have equal nonzero length");
  if ((variances.array() <= 0.0).any() || !variances.allFinite()) throw InputError("gaussian variances must be positive");
  if (!(peak > 0.0)) throw InputError("gaussian peak must be positive");
  if (!(floor > 0.0 && floor < 1.0)) throw InputError("gaussian floor must lie in (0, 1)");
  Density d;
  d.kind_ = Kind::GaussianFloored;
  d.center_ = std::move(center);
  d.variances_ = std::move(variances);
  d.peak_ = peak;
  d.floor_ = floor;
  d.label_ = "gaussian";
  return d;
}

Density Density::grid(GridSamples samples, double floor) {
  if (samples.values.rows() < 2 || samples.values.cols() < 2) throw InputError("grid density needs at least 2x2 samples");
  if (!(samples.hi.array() > samples.lo.array()).all()) throw InputError("grid density bounds are empty");
  if (!samples.values.allFinite()) throw InputError("grid density samples must be finite");
  const double top = samples.values.maxCoeff();
  if (!(top > 0.0)) throw InputError("grid density has no positive sample");
  if (!(floor > 0.0 && floor < 1.0)) throw InputError("grid floor must lie in (0, 1)");
  samples.values = samples.values.cwiseMax(floor * top);
  Density d;
  d.kind_ = Kind::Grid;
  d.floor_ = floor;
  d.grid_ = std::make_shared<const GridSamples>(std::move(samples));
  d.label_ = "grid";
  return d;
}

Density Density::analytic(AnalyticShape shape, std::string label) {
  Density d;
  d.kind_ = Kind::Analytic;
  d.analytic_ = std::make_shared<const AnalyticShape>(std::move(shape));
  d.label_ = std::move(label);
  return d;
}

Density Density::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw InputError("density scale factor must be positive");
  Density d = *this;
  d.scale_ *= factor;
  return d;
}

double Density::grid_log_and_derivs(const Point& x, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
  const GridSamples& s = *grid_;
  if (x.size() != 2) throw InputError("grid densities are two-dimensional");
  const double slack = 1e-12 * (s.hi - s.lo).norm();
  if ((x.array() < s.lo.array() - slack).any() || (x.array() > s.hi.array() + slack).any())
    throw InputError("grid density queried outside its lattice");
  const int nx = static_cast<int>(s.values.cols());
  const int ny = static_cast<int>(s.values.rows());
  const double dx = (s.hi.x() - s.lo.x()) / (nx - 1);
  const double dy = (s.hi.y() - s.lo.y()) / (ny - 1);
  const double u = std::clamp((x(0) - s.lo.x()) / dx, 0.0, nx - 1.0);
  const double w = std::clamp((x(1) - s.lo.y()) / dy, 0.0, ny - 1.0);
  const int i = std::min(static_cast<int>(std::floor(u)), nx - 2);
  const int j = std::min(static_cast<int>(std::floor(w)), ny - 2);
  const double a = u - i;
  const double b = w - j;
  const double v00 = s.values(j, i), v10 = s.values(j, i + 1), v01 = s.values(j + 1, i), v11 = s.values(j + 1, i + 1);
  double v;
  if (a == 0.0 && b == 0.0) v = v00;  // lattice nodes reproduce samples exactly
  else v = (1 - a) * (1 - b) * v00 + a * (1 - b) * v10 + (1 - a) * b * v01 + a * b * v11;
  if (grad || hess) {
    Eigen::Vector2d dv((1 - b) * (v10 - v00) / dx + b * (v11 - v01) / dx, (1 - a) * (v01 - v00) / dy + a * (v11 - v10) / dy);
    const double dxy = (v11 - v10 - v01 + v00) / (dx * dy);
    if (grad) *grad = dv / v;
    if (hess) {
      Eigen::Matrix2d h2;
      h2 << 0.0, dxy, dxy, 0.0;
      *hess = h2 / v - dv * dv.transpose() / (v * v);
    }
  }
  return std::log(v);
}

double Density::log_value(const Point& x) const {
  const double ls = std::log(scale_);
  switch (kind_) {
    case Kind::Uniform:
      return ls + std::log(height_);
    case Kind::GaussianFloored: {
      if (x.size() != center_.size()) throw InputError("gaussian density queried with wrong dimension");
      const double q = ((x - center_).array().square() / variances_.array()).sum();
      return ls + std::log(peak_) + std::log(floor_ + (1.0 - floor_) * std::exp(-0.5 * q));
    }
    case Kind::Grid:
      return ls + grid_log_and_derivs(x, nullptr, nullptr);
    case Kind::Analytic:
      return ls + analytic_->log_value(x);
  }
  return 0.0;
}

double Density::value(const Point& x) const {
  switch (kind_) {
    case Kind::Uniform:
      return scale_ * height_;
    case Kind::GaussianFloored: {
      if (x.size() != center_.size()) throw InputError("gaussian density queried with wrong dimension");
      const double q = ((x - center_).array().square() / variances_.array()).sum();
      return scale_ * peak_ * (floor_ + (1.0 - floor_) * std::exp(-0.5 * q));
    }
    default:
      return std::exp(log_value(x));
  }
}

Eigen::VectorXd Density::grad_log(const Point& x) const {
  switch (kind_) {
    case Kind::Uniform:
      return Eigen::VectorXd::Zero(x.size());
    case Kind::GaussianFloored: {
      const Eigen::VectorXd u = ((x - center_).array() / variances_.array()).matrix();
      const double e = (1.0 - floor_) * std::exp(-0.5 * u.dot(x - center_));
      return -e * u / (floor_ + e);
    }
    case Kind::Grid: {
      Eigen::VectorXd gr;
      grid_log_and_derivs(x, &gr, nullptr);
      return gr;
    }
    case Kind::Analytic:
      return analytic_->grad_log(x);
  }
  return {};
}

Eigen::MatrixXd Density::hess_log(const Point& x) const {
  switch (kind_) {
    case Kind::Uniform:
      return Eigen::MatrixXd::Zero(x.size(), x.size());
    case Kind::GaussianFloored: {
      const Eigen::VectorXd u = ((x - center_).array() / variances_.array()).matrix();
      const double e = (1.0 - floor_) * std::exp(-0.5 * u.dot(x - center_));
      const double d = floor_ + e;
      const Eigen::MatrixXd uu = u * u.transpose();
      Eigen::MatrixXd inv_var = variances_.cwiseInverse().asDiagonal();
      return (e * uu - e * inv_var) / d - (e * e / (d * d)) * uu;
    }
    case Kind::Grid: {
      Eigen::MatrixXd hs;
      grid_log_and_derivs(x, nullptr, &hs);
      return hs;
    }
    case Kind::Analytic:
      return analytic_->hess_log(x);
  }
  return {};
}

double density_eval(const Density& d, const Point& x) { return d.value(x); }

double density_log_eval(const Density& d, const Point& x) { return d.log_value(x); }

// ---------------------------------------------------------------------------
// TargetDomain

TargetDomain TargetDomain::disc(Eigen::VectorXd center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InputError("target radius must be positive");
  if (center.size() < 2 || !center.allFinite()) throw InputError("target centre must be a finite point");
  TargetDomain t;
  t.kind_ = Kind::Disc;
  t.center_ = std::move(center);
  t.radius_ = radius;
  return t;
}

TargetDomain TargetDomain::polygon(const Polygon& input) {
  if (input.size() < 3) throw InputError("target polygon needs at least 3 vertices");
  Polygon loop = input;
  const double area = polygon_signed_area(loop);
  if (!(std::abs(area) > 0.0)) throw InputError("target polygon has empty interior");
  if (area < 0) std::reverse(loop.begin(), loop.end());
  const std::size_t n = loop.size();
  TargetDomain t;
  t.kind_ = Kind::Polygon;
  t.normals_.resize(static_cast<Eigen::Index>(n), 2);
  t.offsets_.resize(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector2d e = loop[(k + 1) % n] - loop[k];
    const Eigen::Vector2d next = loop[(k + 2) % n] - loop[(k + 1) % n];
    if (e.norm() == 0.0) throw InputError("target polygon repeats a vertex");
    if (e.x() * next.y() - e.y() * next.x() < -1e-14 * e.norm() * next.norm()) throw InputError("target polygon must be convex");
    const Eigen::Vector2d normal = Eigen::Vector2d(e.y(), -e.x()).normalized();
    t.normals_.row(static_cast<Eigen::Index>(k)) = normal.transpose();
    t.offsets_(static_cast<Eigen::Index>(k)) = normal.dot(loop[k]);
  }
  // area centroid
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  double a2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = loop[k];
    const auto& q = loop[(k + 1) % n];
    const double cr = p.x() * q.y() - q.x() * p.y();
    c += (p + q) * cr;
    a2 += cr;
  }
  t.center_ = c / (3.0 * a2);
  t.loop_ = std::move(loop);
  return t;
}

double TargetDomain::violation(const Point& y) const {
  if (kind_ == Kind::Disc) return std::max(0.0, (y - center_).norm() - radius_);
  const Eigen::VectorXd s = normals_ * y - offsets_;
  return std::max(0.0, s.maxCoeff());
}

bool TargetDomain::contains(const Point& y, double tol) const { return violation(y) <= tol; }

Point TargetDomain::project(const Point& y) const {
  if (kind_ == Kind::Disc) {
    const Eigen::VectorXd d = y - center_;
    const double r = d.norm();
    if (r <= radius_) return y;
    return center_ + d * (radius_ / r);
  }
  if (violation(y) == 0.0) return y;
  const Eigen::Vector2d p(y(0), y(1));
  Eigen::Vector2d best = loop_.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < loop_.size(); ++k) {
    const Eigen::Vector2d a = loop_[k];
    const Eigen::Vector2d ab = loop_[(k + 1) % loop_.size()] - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const Eigen::Vector2d c = a + t * ab;
    const double d = (c - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double TargetDomain::inradius() const {
  if (kind_ == Kind::Disc) return radius_;
  return (offsets_ - normals_ * center_).minCoeff();
}

double TargetDomain::measure() const {
  if (kind_ == Kind::Disc) {
    const double n = static_cast<double>(dim());
    return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0) * std::pow(radius_, n);
  }
  return std::abs(polygon_signed_area(loop_));
}

Eigen::AlignedBox<double, Eigen::Dynamic> TargetDomain::bounding_box() const {
  Eigen::AlignedBox<double, Eigen::Dynamic> box(dim());
  if (kind_ == Kind::Disc) {
    box.extend(center_ - Eigen::VectorXd::Constant(dim(), radius_));
    box.extend(center_ + Eigen::VectorXd::Constant(dim(), radius_));
  } else {
    for (const auto& p : loop_) box.extend(Eigen::VectorXd(p));
  }
  return box;
}

double target_violation(const TargetDomain& target, const Point& y) { return target.violation(y); }

Point target_projection(const TargetDomain& target, const Point& y) { return target.project(y); }

// ---------------------------------------------------------------------------
// Mass balance

double integrate_source(const Mesh& mesh, const Density& f) {
  std::vector<double> terms(mesh.num_simplices());
  for (int i = 0; i < mesh.num_simplices(); ++i) terms[i] = mesh.volume(i) * f.value(mesh.barycenter(i));
  return pairwise_sum(terms);
}

double integrate_target(const TargetDomain& target, const Density& g) {
  if (g.is_uniform()) return g.scale() * g.height() * target.measure();
  const auto box = target.bounding_box();
  const int n = target.dim();
  const int res = n == 2 ? 512 : 96;
  const Eigen::VectorXd lo = box.min();
  const Eigen::VectorXd step = (box.max() - box.min()) / res;
  const double cell = step.prod();
  long total = 1;
  for (int d = 0; d < n; ++d) total *= res;
  std::vector<double> terms(static_cast<std::size_t>(total), 0.0);
  for (long k = 0; k < total; ++k) {
    Eigen::VectorXd y(n);
    long r = k;
    for (int d = 0; d < n; ++d) {
      y(d) = lo(d) + (static_cast<double>(r % res) + 0.5) * step(d);
      r /= res;
    }
    if (target.contains(y)) terms[static_cast<std::size_t>(k)] = g.value(y) * cell;
  }
  return pairwise_sum(terms);
}

ProblemInstance mass_normalize(const ProblemInstance& instance) {
  const double mass_f = integrate_source(instance.mesh, instance.f);
  const double mass_g = integrate_target(instance.target, instance.g);
  if (!(mass_f > 0.0) || !std::isfinite(mass_f)) throw InputError("source density has non-positive integral");
  if (!(mass_g > 0.0) || !std::isfinite(mass_g)) throw InputError("target density has non-positive integral");
  ProblemInstance out = instance;
  out.g = instance.g.scaled(mass_f / mass_g);
  return out;
}

ProblemInstance instantiate(const ProblemSpec& spec) { return instantiate(spec, triangulate_polygon(spec.domain, spec.h)); }

ProblemInstance instantiate(const ProblemSpec& spec, const Mesh& mesh) {
  if (mesh.dim() != spec.target.dim())
    throw InputError("mesh dimension " + std::to_string(mesh.dim()) + " does not match target dimension " +
                     std::to_string(spec.target.dim()));
  return mass_normalize(ProblemInstance{mesh, spec.target, spec.f, spec.g, spec.variant});
}

}  // namespace dmaop
