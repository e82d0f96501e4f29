#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/box.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include "dmaop/errors.hpp"
#include "dmaop/mesh.hpp"

namespace dmaop {

namespace bg = boost::geometry;

namespace {

using Vec2 = Eigen::Vector2d;
using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint>;
using BMultiPolygon = bg::model::multi_polygon<BPolygon>;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); }

Vec2 closest_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return a + t * ab;
}

// True if the open segments (p1,p2) and (q1,q2) cross at a single interior point.
bool proper_crossing(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2, double tol) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  return ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol));
}

bool segments_touch(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  auto on = [](const Vec2& a, const Vec2& b, const Vec2& p, double d) {
    return d == 0.0 && std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) && std::min(a.y(), b.y()) <= p.y() &&
           p.y() <= std::max(a.y(), b.y());
  };
  return on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4);
}

class Boundary {
 public:
  explicit Boundary(const Polygon& loop) : loop_(loop) {}

  double distance(const Vec2& p) const { return (p - project(p)).norm(); }

  Vec2 project(const Vec2& p) const {
    Vec2 best = loop_.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < loop_.size(); ++k) {
      const Vec2 c = closest_on_segment(p, loop_[k], loop_[(k + 1) % loop_.size()]);
      const double d = (c - p).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return best;
  }

  // Segment-vs-box overlap, closed sets.
  bool touches_box(const Vec2& lo, const Vec2& hi) const {
    const std::array<Vec2, 4> c = {lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())};
    for (std::size_t k = 0; k < loop_.size(); ++k) {
      const Vec2& a = loop_[k];
      const Vec2& b = loop_[(k + 1) % loop_.size()];
      auto inside = [&](const Vec2& p) { return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y(); };
      if (inside(a) || inside(b)) return true;
      for (int e = 0; e < 4; ++e)
        if (segments_touch(a, b, c[e], c[(e + 1) % 4])) return true;
    }
    return false;
  }

  // Triangle (counter-clockwise) lies inside the closed polygon.
  bool contains_triangle(const std::array<Vec2, 3>& t, double tol) const {
    for (const auto& p : t)
      if (!point_in_polygon(loop_, p, tol)) return false;
    const Vec2 centroid = (t[0] + t[1] + t[2]) / 3.0;
    if (!point_in_polygon(loop_, centroid, tol)) return false;
    for (int e = 0; e < 3; ++e)
      if (!point_in_polygon(loop_, 0.5 * (t[e] + t[(e + 1) % 3]), tol)) return false;
    for (std::size_t k = 0; k < loop_.size(); ++k) {
      const Vec2& a = loop_[k];
      const Vec2& b = loop_[(k + 1) % loop_.size()];
      for (int e = 0; e < 3; ++e)
        if (proper_crossing(a, b, t[e], t[(e + 1) % 3], tol)) return false;
      // a polygon corner strictly inside the triangle means the triangle pokes outside
      if (orient(t[0], t[1], a) > tol && orient(t[1], t[2], a) > tol && orient(t[2], t[0], a) > tol) return false;
    }
    return true;
  }

 private:
  const Polygon& loop_;
};

void validate_polygon(const Polygon& poly, double scale) {
  if (poly.size() < 3) throw InputError("polygon needs at least 3 vertices");
  for (const auto& p : poly)
    if (!p.allFinite()) throw InputError("polygon vertices must be finite");
  const std::size_t n = poly.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < a; ++b)
      if ((poly[a] - poly[b]).norm() <= 1e-12 * scale)
        throw InputError("polygon repeats vertex " + std::to_string(b) + " at index " + std::to_string(a));
  if (std::abs(polygon_signed_area(poly)) <= 1e-14 * scale * scale) throw InputError("polygon has zero area");
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const bool adjacent = (b == a + 1) || (a == 0 && b == n - 1);
      const Vec2& p1 = poly[a];
      const Vec2& p2 = poly[(a + 1) % n];
      const Vec2& q1 = poly[b];
      const Vec2& q2 = poly[(b + 1) % n];
      if (adjacent) {
        // adjacent edges may only share their common endpoint
        const Vec2& shared = (b == a + 1) ? p2 : p1;
        const Vec2& other_p = (b == a + 1) ? p1 : p2;
        const Vec2& other_q = (b == a + 1) ? q2 : q1;
        const Vec2 u = other_p - shared;
        const Vec2 v = other_q - shared;
        if (std::abs(cross(u, v)) <= 1e-14 * u.norm() * v.norm() && u.dot(v) > 0)
          throw InputError("polygon folds back on itself at vertex " + std::to_string((b == a + 1) ? b : a));
      } else if (segments_touch(p1, p2, q1, q2)) {
        throw InputError("polygon is not simple: edges " + std::to_string(a) + " and " + std::to_string(b) + " intersect");
      }
    }
  }
}

double min_angle(const std::array<Vec2, 3>& t) {
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const Vec2 u = t[(k + 1) % 3] - t[k];
    const Vec2 v = t[(k + 2) % 3] - t[k];
    m = std::min(m, std::atan2(std::abs(cross(u, v)), u.dot(v)));
  }
  return m;
}

}  // namespace

Mesh triangulate_polygon(const Polygon& input, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("target edge length h must be positive");
  Eigen::AlignedBox2d bbox;
  for (const auto& p : input) bbox.extend(p);
  const double scale = input.empty() ? 1.0 : std::max(bbox.diagonal().norm(), 1e-300);
  validate_polygon(input, scale);

  Polygon poly = input;
  if (polygon_signed_area(poly) < 0) std::reverse(poly.begin(), poly.end());
  const double tol = 1e-10 * scale;
  if (!point_in_polygon(poly, Vec2::Zero(), tol)) throw InputError("polygon must contain the origin");
  const Boundary boundary(poly);

  // grid lines at centre + (k + 1/2) h, one extra line beyond each side
  auto make_lines = [&](double lo, double hi, double c) {
    const int k0 = static_cast<int>(std::floor((lo - c) / h - 0.5)) - 1;
    const int k1 = static_cast<int>(std::ceil((hi - c) / h - 0.5)) + 1;
    std::vector<double> v;
    for (int k = k0; k <= k1; ++k) v.push_back(c + (k + 0.5) * h);
    return v;
  };
  const Vec2 centre = bbox.center();
  const auto xs = make_lines(bbox.min().x(), bbox.max().x(), centre.x());
  const auto ys = make_lines(bbox.min().y(), bbox.max().y(), centre.y());
  const int nx = static_cast<int>(xs.size());
  const int ny = static_cast<int>(ys.size());
  auto vid = [&](int a, int b) { return b * nx + a; };

  const int n_grid = nx * ny;
  std::vector<Vec2> pos(n_grid);
  enum class Where { In, On, Out };
  std::vector<Where> where(n_grid);
  std::vector<double> dist(n_grid);
  for (int b = 0; b < ny; ++b) {
    for (int a = 0; a < nx; ++a) {
      const int v = vid(a, b);
      pos[v] = Vec2(xs[a], ys[b]);
      dist[v] = boundary.distance(pos[v]);
      if (dist[v] <= tol) where[v] = Where::On;
      else where[v] = point_in_polygon(poly, pos[v], 0.0) ? Where::In : Where::Out;
    }
  }

  // cells that overlap the polygon with positive area
  BPolygon bpoly;
  for (const auto& p : poly) bg::append(bpoly.outer(), BPoint(p.x(), p.y()));
  bg::append(bpoly.outer(), BPoint(poly.front().x(), poly.front().y()));
  bg::correct(bpoly);
  std::vector<std::array<int, 2>> cells;
  std::vector<char> used(n_grid, 0);
  for (int b = 0; b + 1 < ny; ++b) {
    for (int a = 0; a + 1 < nx; ++a) {
      const std::array<int, 4> c = {vid(a, b), vid(a + 1, b), vid(a + 1, b + 1), vid(a, b + 1)};
      const Vec2 lo(xs[a], ys[b]);
      const Vec2 hi(xs[a + 1], ys[b + 1]);
      bool relevant;
      const bool all_in = std::all_of(c.begin(), c.end(), [&](int v) { return where[v] == Where::In; });
      if (all_in && !boundary.touches_box(lo, hi)) {
        relevant = true;
      } else if (!boundary.touches_box(lo, hi)) {
        relevant = false;
      } else {
        bg::model::box<BPoint> box(BPoint(lo.x(), lo.y()), BPoint(hi.x(), hi.y()));
        BMultiPolygon piece;
        bg::intersection(box, bpoly, piece);
        relevant = bg::area(piece) > 1e-12 * h * h;
      }
      if (relevant) {
        cells.push_back({a, b});
        for (int v : c) used[v] = 1;
      }
    }
  }
  if (cells.empty()) throw InputError("polygon is too small for mesh size h");

  // snap vertices outside or hugging the boundary onto it
  std::vector<char> snapped(n_grid, 0);
  for (int v = 0; v < n_grid; ++v) {
    if (!used[v]) continue;
    if (where[v] == Where::Out || where[v] == Where::On || dist[v] < 0.2 * h) {
      pos[v] = boundary.project(pos[v]);
      snapped[v] = 1;
    }
  }
  // every polygon corner must be a mesh vertex
  for (const auto& corner : poly) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    bool exact = false;
    for (int v = 0; v < n_grid; ++v) {
      if (!used[v]) continue;
      const double d = (pos[v] - corner).norm();
      if (d <= tol) {
        exact = true;
        break;
      }
      if (d < best_d) {
        best_d = d;
        best = v;
      }
    }
    if (!exact && best >= 0) {
      pos[best] = corner;
      snapped[best] = 1;
    }
  }
  // merge coincident snapped vertices
  std::vector<int> rep(n_grid);
  for (int v = 0; v < n_grid; ++v) rep[v] = v;
  std::vector<int> snapped_ids;
  for (int v = 0; v < n_grid; ++v)
    if (used[v] && snapped[v]) snapped_ids.push_back(v);
  for (std::size_t p = 0; p < snapped_ids.size(); ++p) {
    for (std::size_t q = 0; q < p; ++q) {
      if ((pos[snapped_ids[p]] - pos[snapped_ids[q]]).norm() <= 1e-9 * h) {
        rep[snapped_ids[p]] = rep[snapped_ids[q]];
        break;
      }
    }
  }

  // split cells, keep triangles inside the polygon
  std::vector<std::array<int, 3>> triangles;
  const double min_area = 1e-10 * h * h;
  auto valid = [&](const std::array<int, 3>& t) {
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) return false;
    const std::array<Vec2, 3> p = {pos[t[0]], pos[t[1]], pos[t[2]]};
    if (0.5 * orient(p[0], p[1], p[2]) <= min_area) return false;
    return boundary.contains_triangle(p, tol);
  };
  for (const auto& [a, b] : cells) {
    const int r00 = rep[vid(a, b)], r10 = rep[vid(a + 1, b)], r11 = rep[vid(a + 1, b + 1)], r01 = rep[vid(a, b + 1)];
    const std::array<std::array<int, 3>, 2> split_a = {{{r00, r10, r11}, {r00, r11, r01}}};
    const std::array<std::array<int, 3>, 2> split_b = {{{r00, r10, r01}, {r10, r11, r01}}};
    auto score = [&](const std::array<std::array<int, 3>, 2>& split, std::vector<std::array<int, 3>>& keep) {
      double area = 0.0;
      double angle = std::numeric_limits<double>::infinity();
      for (const auto& t : split) {
        if (!valid(t)) continue;
        keep.push_back(t);
        const std::array<Vec2, 3> p = {pos[t[0]], pos[t[1]], pos[t[2]]};
        area += 0.5 * orient(p[0], p[1], p[2]);
        angle = std::min(angle, min_angle(p));
      }
      return std::pair{area, keep.empty() ? 0.0 : angle};
    };
    std::vector<std::array<int, 3>> keep_a, keep_b;
    const auto [area_a, angle_a] = score(split_a, keep_a);
    const auto [area_b, angle_b] = score(split_b, keep_b);
    bool use_b = false;
    if (area_b > area_a + 1e-12 * h * h) use_b = true;
    else if (area_b >= area_a - 1e-12 * h * h && angle_b > angle_a + 1e-9) use_b = true;
    const auto& keep = use_b ? keep_b : keep_a;
    triangles.insert(triangles.end(), keep.begin(), keep.end());
  }

  // compact vertex numbering in grid order
  std::vector<int> new_id(n_grid, -1);
  for (const auto& t : triangles)
    for (int v : t) new_id[v] = 0;
  int count = 0;
  for (int v = 0; v < n_grid; ++v)
    if (new_id[v] == 0) new_id[v] = count++;
  Eigen::MatrixXd vertices(2, count);
  for (int v = 0; v < n_grid; ++v)
    if (new_id[v] >= 0) vertices.col(new_id[v]) = pos[v];
  std::vector<Simplex> simplices;
  simplices.reserve(triangles.size());
  for (const auto& t : triangles) {
    // base vertex at the largest angle, orientation kept
    int base = 0;
    double lowest = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      const Vec2 e1 = (pos[t[(k + 1) % 3]] - pos[t[k]]).normalized(), e2 = (pos[t[(k + 2) % 3]] - pos[t[k]]).normalized();
      if (e1.dot(e2) < lowest) {
        lowest = e1.dot(e2);
        base = k;
      }
    }
    simplices.push_back(Simplex{{new_id[t[base]], new_id[t[(base + 1) % 3]], new_id[t[(base + 2) % 3]]}});
  }
  return Mesh(2, std::move(vertices), std::move(simplices), std::move(poly));
}

}  // namespace dmaop
