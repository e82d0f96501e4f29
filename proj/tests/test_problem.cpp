#include <doctest.h>

#include <numbers>
#include <random>

#include "dmaop/errors.hpp"
#include "dmaop/problem.hpp"
#include "helpers.hpp"

using namespace dmaop;
using testing::box;

namespace {

Eigen::VectorXd fd_grad_log(const Density& d, const Point& x, double step = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Point a = x, b = x;
    a(k) += step;
    b(k) -= step;
    g(k) = (d.log_value(a) - d.log_value(b)) / (2 * step);
  }
  return g;
}

Eigen::MatrixXd fd_hess_log(const Density& d, const Point& x, double step = 1e-5) {
  Eigen::MatrixXd h(x.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Point a = x, b = x;
    a(k) += step;
    b(k) -= step;
    h.col(k) = (d.grad_log(a) - d.grad_log(b)) / (2 * step);
  }
  return h;
}

}  // namespace

TEST_SUITE("problem") {
  TEST_CASE("density values") {
    CHECK(density_eval(Density::uniform(2.0), Eigen::Vector2d(0.3, -7)) == 2.0);
    const Density gauss = Density::gaussian(Eigen::Vector2d(0.2, 0.1), Eigen::Vector2d(0.5, 0.25), 1.0, 0.1);
    CHECK(density_eval(gauss, Eigen::Vector2d(0.2, 0.1)) == doctest::Approx(1.0).epsilon(1e-15));
    // far away the floor takes over
    CHECK(density_eval(gauss, Eigen::Vector2d(50, 50)) == doctest::Approx(0.1).epsilon(1e-12));
    const Point x(Eigen::Vector2d(0.7, -0.4));
    CHECK(std::abs(density_log_eval(gauss, x) - std::log(density_eval(gauss, x))) < 1e-14);
    CHECK_THROWS_AS(Density::uniform(0.0), InputError);
    CHECK_THROWS_AS(Density::gaussian(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, -1)), InputError);
  }

  TEST_CASE("log-density derivatives match finite differences") {
    const Density gauss = Density::gaussian(Eigen::Vector2d(0.2, 0.1), Eigen::Vector2d(0.5, 0.25), 2.0, 0.05);
    GridSamples s;
    s.lo = Eigen::Vector2d(-1, -1);
    s.hi = Eigen::Vector2d(1, 1);
    s.values.resize(4, 5);
    s.values << 1, 2, 3, 2, 1, 2, 3, 4, 3, 2, 1, 5, 2, 2, 1, 1, 1, 1, 1, 1;
    const Density grid = Density::grid(s);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-0.95, 0.95);
    for (int k = 0; k < 20; ++k) {
      const Point x(Eigen::Vector2d(u(rng), u(rng)));
      CHECK((gauss.grad_log(x) - fd_grad_log(gauss, x)).norm() < 1e-7);
      CHECK((gauss.hess_log(x) - fd_hess_log(gauss, x)).norm() < 1e-5);
      CHECK((grid.grad_log(x) - fd_grad_log(grid, x)).norm() < 1e-6 * (1 + grid.grad_log(x).norm()));
    }
  }

  TEST_CASE("grid density interpolates nodes and never overshoots") {
    GridSamples s;
    s.lo = Eigen::Vector2d(0, 0);
    s.hi = Eigen::Vector2d(2, 1);
    s.values.resize(2, 3);
    s.values << 1, 4, 2, 3, 0.5, 6;
    const Density d = Density::grid(s);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c) CHECK(d.value(Eigen::Vector2d(c, r)) == doctest::Approx(s.values(r, c)).epsilon(1e-14));
    CHECK(d.value(Eigen::Vector2d(0.5, 0.5)) == doctest::Approx(0.25 * (1 + 4 + 3 + 0.5)));
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 200; ++k) {
      const Eigen::Vector2d x(2 * u(rng), u(rng));
      const int c = std::min(1, static_cast<int>(x(0)));
      const double lo = s.values.block(0, c, 2, 2).minCoeff(), hi = s.values.block(0, c, 2, 2).maxCoeff();
      const double v = d.value(x);
      CHECK(v >= lo - 1e-14);
      CHECK(v <= hi + 1e-14);
    }
    CHECK_THROWS_AS(d.value(Eigen::Vector2d(2.5, 0.5)), InputError);
    s.values.setConstant(-1.0);
    CHECK_THROWS_AS(Density::grid(s), InputError);
  }

  TEST_CASE("target violation and projection examples") {
    const TargetDomain disc = TargetDomain::disc(Eigen::Vector2d::Zero(), 1.0);
    CHECK(target_violation(disc, Eigen::Vector2d(0.5, 0)) == 0.0);
    CHECK(target_violation(disc, Eigen::Vector2d(2, 0)) == 1.0);
    CHECK(target_projection(disc, Eigen::Vector2d(2, 0)) == Eigen::Vector2d(1, 0));
    const TargetDomain sq = TargetDomain::polygon(box(0, 0, 1, 1));
    CHECK(target_violation(sq, Eigen::Vector2d(1.25, 0.5)) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK((target_projection(sq, Eigen::Vector2d(-1, 0.5)) - Eigen::Vector2d(0, 0.5)).norm() < 1e-15);
    CHECK(target_projection(sq, Eigen::Vector2d(0.3, 0.6)) == Eigen::Vector2d(0.3, 0.6));
  }

  TEST_CASE("projection lands in the target and is nearest") {
    const TargetDomain targets[] = {TargetDomain::disc(Eigen::Vector2d(0.3, -0.2), 0.8),
                                    TargetDomain::polygon({{0, 0}, {0, 1}, {1.5, 1.2}, {2, 0}})};  // clockwise input
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(-3, 3);
    for (const auto& t : targets) {
      const auto bb = t.bounding_box();
      std::uniform_real_distribution<double> ux(bb.min()(0), bb.max()(0)), uy(bb.min()(1), bb.max()(1));
      for (int k = 0; k < 50; ++k) {
        const Point y(Eigen::Vector2d(u(rng), u(rng)));
        const Point p = t.project(y);
        CHECK(t.violation(p) <= 1e-14);
        int checked = 0;
        while (checked < 100) {
          const Point z(Eigen::Vector2d(ux(rng), uy(rng)));
          if (!t.contains(z)) continue;
          ++checked;
          CHECK((y - p).norm() <= (y - z).norm() + 1e-12);
        }
      }
    }
  }

  TEST_CASE("polygon targets must be convex") {
    CHECK_THROWS_AS(TargetDomain::polygon({{0, 0}, {2, 0}, {1, 0.5}, {2, 2}, {0, 2}}), InputError);
    const TargetDomain t = TargetDomain::polygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
    CHECK(polygon_signed_area(t.loop()) > 0.0);
    CHECK(t.measure() == doctest::Approx(1.0));
    CHECK(t.inradius() == doctest::Approx(0.5));
    CHECK((t.interior_point() - Eigen::Vector2d(0.5, 0.5)).norm() < 1e-15);
  }

  TEST_CASE("mass normalisation") {
    const Mesh sq = triangulate_polygon(box(-0.5, -0.5, 0.5, 0.5), 0.25);
    const ProblemInstance disc{sq, TargetDomain::disc(Eigen::Vector2d::Zero(), 1.0), Density::uniform(1), Density::uniform(1), Variant::DMAOP};
    const ProblemInstance a = mass_normalize(disc);
    CHECK(a.g.value(Eigen::Vector2d::Zero()) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-12));
    const ProblemInstance b = mass_normalize(a);
    CHECK(std::abs(b.g.scale() / a.g.scale() - 1.0) < 1e-12);

    const Mesh unit = triangulate_polygon(box(0, 0, 1, 1), 0.25);
    const ProblemInstance rect{unit, TargetDomain::polygon(box(0, 0, 2, 1)), Density::uniform(1), Density::uniform(1), Variant::DMAOP};
    CHECK(mass_normalize(rect).g.value(Eigen::Vector2d(1, 0.5)) == doctest::Approx(0.5).epsilon(1e-12));

    const ProblemInstance gauss{sq, TargetDomain::disc(Eigen::Vector2d::Zero(), 1.0), Density::uniform(1),
                                Density::gaussian(Eigen::Vector2d(0.1, 0), Eigen::Vector2d(0.2, 0.3)), Variant::DMAOP};
    const ProblemInstance c = mass_normalize(gauss);
    const double mf = integrate_source(c.mesh, c.f), mg = integrate_target(c.target, c.g);
    CHECK(std::abs(mf - mg) <= 1e-8 * mf);
  }

  TEST_CASE("target integrals") {
    CHECK(integrate_target(TargetDomain::disc(Eigen::Vector2d(1, 1), 0.5), Density::uniform(2)) ==
          doctest::Approx(2 * std::numbers::pi * 0.25).epsilon(1e-14));
    // quadrature against the closed form of a wide gaussian with a negligible floor
    const Density g = Density::gaussian(Eigen::Vector2d(0, 0), Eigen::Vector2d(0.04, 0.04), 1.0, 1e-9);
    const double exact = 2 * std::numbers::pi * 0.04;
    CHECK(integrate_target(TargetDomain::disc(Eigen::Vector2d::Zero(), 2.0), g) == doctest::Approx(exact).epsilon(1e-4));
  }

  TEST_CASE("variant names") {
    CHECK(parse_variant("ldmaop") == Variant::LDMAOP);
    CHECK(to_string(Variant::DMAOP) == "dmaop");
    CHECK_THROWS_AS(parse_variant("lp"), InputError);
  }
}
