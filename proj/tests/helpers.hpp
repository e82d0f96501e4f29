#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "dmaop/mesh.hpp"

namespace testing {

using dmaop::Mesh;
using dmaop::Polygon;
using dmaop::Simplex;

inline Polygon box(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}; }

inline Mesh triangle(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  Eigen::MatrixXd v(2, 3);
  v << a(0), b(0), c(0), a(1), b(1), c(1);
  return Mesh(2, v, {Simplex{{0, 1, 2}}});
}

/// Structured k x k grid on [lo, hi]^2 with interior nodes jittered, split along alternating diagonals.
inline Mesh jittered_grid(int k, double lo, double hi, double jitter, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double step = (hi - lo) / (k - 1);
  Eigen::MatrixXd v(2, k * k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) {
      Eigen::Vector2d p(lo + c * step, lo + r * step);
      if (r > 0 && r < k - 1 && c > 0 && c < k - 1) p += jitter * step * Eigen::Vector2d(u(rng), u(rng));
      v.col(r * k + c) = p;
    }
  std::vector<Simplex> s;
  for (int r = 0; r + 1 < k; ++r)
    for (int c = 0; c + 1 < k; ++c) {
      const int a = r * k + c, b = a + 1, d = a + k, e = d + 1;
      if ((r + c) % 2 == 0) {
        s.push_back({{a, b, e}});
        s.push_back({{a, e, d}});
      } else {
        s.push_back({{a, b, d}});
        s.push_back({{b, e, d}});
      }
    }
  return Mesh(2, v, s, box(lo, lo, hi, hi));
}

inline double shoelace(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  return 0.5 * std::abs((b(0) - a(0)) * (c(1) - a(1)) - (c(0) - a(0)) * (b(1) - a(1)));
}

inline std::string scratch_dir(const std::string& name) {
  return std::string(DMAOP_SCRATCH_DIR) + "/" + name;
}

}  // namespace testing
