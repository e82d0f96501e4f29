#include <doctest.h>

#include <map>
#include <random>

#include "dmaop/errors.hpp"
#include "dmaop/potential.hpp"
#include "dmaop/solver.hpp"
#include "dmaop/transport.hpp"
#include "helpers.hpp"

using namespace dmaop;

namespace {

struct Solved {
  ProblemInstance inst;
  Solution sol;
};

const Solved& solved_disc() {
  static const Solved s = [] {
    const ProblemInstance inst = instantiate(square_to_disc(0.2));
    return Solved{inst, solve(inst).first};
  }();
  return s;
}

}  // namespace

TEST_SUITE("potential") {
  TEST_CASE("single flat piece") {
    const OptimizationPotential phi(Eigen::MatrixXd::Zero(2, 1), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(2, 1));
    CHECK(phi.eval(Eigen::Vector2d(3, -4)) == 0.0);
    CHECK(phi.b_offset() == 0.0);
  }

  TEST_CASE("two symmetric pieces in one dimension") {
    Eigen::MatrixXd anchors = Eigen::MatrixXd::Zero(1, 2);
    Eigen::MatrixXd slopes(1, 2);
    slopes << 1, -1;
    const OptimizationPotential phi(anchors, Eigen::VectorXd::Zero(2), slopes);
    const auto s = phi.subgradient(Eigen::VectorXd::Zero(1));
    CHECK(s.active == std::vector<int>{0, 1});
    CHECK(s.index == 0);
    CHECK(phi.eval(Eigen::VectorXd::Constant(1, -2.0)) == 2.0);
  }

  TEST_CASE("tangent planes of a quadratic") {
    const Mesh m = testing::jittered_grid(6, -1, 1, 0.3, 9);
    DecisionVector dv;
    dv.eta = m.vertices();
    dv.psi = 0.5 * m.vertices().colwise().squaredNorm().transpose();
    const OptimizationPotential phi = build_potential(m, dv);
    CHECK(phi.eval(Eigen::Vector2d::Zero()) == 0.0);
    for (int j = 0; j < m.num_vertices(); ++j) {
      CHECK(phi.eval(m.vertex(j)) == dv.psi(j) + phi.b_offset());
      const auto s = phi.subgradient(m.vertex(j));
      CHECK(std::find(s.active.begin(), s.active.end(), j) != s.active.end());
    }
  }

  TEST_CASE("solved potential: normalisation, interpolation, subgradients, convexity") {
    const auto& [inst, sol] = solved_disc();
    const OptimizationPotential phi = build_potential(inst.mesh, sol.dv);
    CHECK(phi.eval(Eigen::Vector2d::Zero()) == 0.0);
    CHECK(phi.b_offset() == sol.b_offset);
    double interp = 0.0;
    for (int j = 0; j < inst.mesh.num_vertices(); ++j)
      interp = std::max(interp, std::abs(phi.eval(inst.mesh.vertex(j)) - sol.dv.psi(j) - phi.b_offset()));
    CHECK(interp <= 1e-12);

    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-0.5, 0.5), ut(0, 1);
    for (int j = 0; j < inst.mesh.num_vertices(); ++j)
      for (int k = 0; k < 50; ++k) {
        const Eigen::Vector2d x(u(rng), u(rng));
        const Point xj = inst.mesh.vertex(j);
        CHECK(phi.eval(x) >= phi.eval(xj) + sol.dv.eta.col(j).dot(x - xj) - 1e-10);
      }
    for (int k = 0; k < 1000; ++k) {
      const Eigen::Vector2d x(u(rng), u(rng)), y(u(rng), u(rng));
      const double t = ut(rng);
      CHECK(phi.eval(t * x + (1 - t) * y) <= t * phi.eval(x) + (1 - t) * phi.eval(y) + 1e-10);
    }
    Eigen::MatrixXd pts(2, 3);
    pts << 0.1, -0.2, 0.3, 0.0, 0.4, -0.1;
    const Eigen::VectorXd batch = phi.eval_batch(pts);
    for (int k = 0; k < 3; ++k) CHECK(batch(k) == phi.eval(pts.col(k)));
  }

  TEST_CASE("gradient field of an affine map") {
    const Mesh m = testing::jittered_grid(5, -1, 1, 0.3, 6);
    Eigen::Matrix2d M;
    M << 1.5, 0.4, -0.2, 0.7;
    DecisionVector dv;
    dv.eta = M * m.vertices();
    dv.eta.colwise() += Eigen::Vector2d(0.3, -0.1);
    dv.psi = Eigen::VectorXd::Zero(m.num_vertices());
    const GradientField G = gradient_field(m, dv);
    const HessianField H = hessian_field(m, dv);
    for (int i = 0; i < m.num_simplices(); ++i) {
      CHECK((G.jacobian(i) - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      const Eigen::MatrixXd& J = G.jacobian(i);
      CHECK(H.at(i) == 0.5 * (J + J.transpose()));
      CHECK(H.at(i) == discrete_jacobian(m, i, dv.eta));
    }
    for (int i = 0; i < m.num_simplices(); ++i)
      for (int id : m.simplex(i).vertex_ids) CHECK((G.eval_in(i, m.vertex(id)) - dv.eta.col(id)).norm() <= 1e-12);
  }

  TEST_CASE("gradient field interpolates, is continuous and has the edge derivatives") {
    const auto& [inst, sol] = solved_disc();
    const Mesh& m = inst.mesh;
    const GradientField G = gradient_field(m, sol.dv);
    for (int i = 0; i < m.num_simplices(); ++i) {
      const auto& ids = m.simplex(i).vertex_ids;
      for (int id : ids) CHECK((G.eval_in(i, m.vertex(id)) - sol.dv.eta.col(id)).norm() <= 1e-12);
      // D_v G along edge v = x_{i_j} - x_{i_0}, by a finite step inside the simplex
      const Point c = m.barycenter(i);
      for (int j = 1; j <= 2; ++j) {
        const Point v = m.vertex(ids[j]) - m.vertex(ids[0]);
        const Point d = (G.eval_in(i, c + 0.1 * v) - G.eval_in(i, c)) / 0.1;
        CHECK((d - (sol.dv.eta.col(ids[j]) - sol.dv.eta.col(ids[0]))).norm() <= 1e-10);
      }
    }
    std::map<std::pair<int, int>, int> edges;
    int shared = 0;
    for (int i = 0; i < m.num_simplices(); ++i) {
      const auto& ids = m.simplex(i).vertex_ids;
      for (int a = 0; a < 3; ++a) {
        const auto key = std::minmax(ids[a], ids[(a + 1) % 3]);
        const auto it = edges.find(key);
        if (it == edges.end()) {
          edges[key] = i;
          continue;
        }
        ++shared;
        const Point mid = 0.5 * (m.vertex(key.first) + m.vertex(key.second));
        CHECK((G.eval_in(i, mid) - G.eval_in(it->second, mid)).norm() <= 1e-12);
      }
    }
    CHECK(shared > 0);
    CHECK(G.eval(Eigen::Vector2d(0.1, 0.1)).has_value());
    CHECK_FALSE(G.eval(Eigen::Vector2d(2.0, 0.0)).has_value());
  }

  TEST_CASE("degenerate simplices are rejected by the fields") {
    const Mesh line = testing::triangle({0, 0}, {1, 1}, {2, 2});
    DecisionVector dv{Eigen::VectorXd::Zero(3), line.vertices()};
    CHECK_THROWS_AS(gradient_field(line, dv), DegenerateSimplexError);
    CHECK_THROWS_AS(hessian_field(line, dv), DegenerateSimplexError);
  }
}
