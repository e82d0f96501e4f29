#include "dmaop/transport.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "dmaop/errors.hpp"
#include "dmaop/parallel.hpp"

namespace dmaop {

DiscreteMap discrete_map(const Mesh& mesh, const DecisionVector& dv) {
  if (dv.size() != mesh.num_vertices()) throw InputError("decision vector does not match the mesh");
  return {mesh.vertices(), dv.eta};
}

Eigen::MatrixXd displacement(const Mesh& mesh, const DecisionVector& dv, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InputError("displacement time must lie in [0, 1]");
  if (dv.size() != mesh.num_vertices()) throw InputError("decision vector does not match the mesh");
  return (1.0 - t) * mesh.vertices() + t * dv.eta;
}

double two_sided_cost(const Mesh& mesh, const Eigen::MatrixXd& eta, const Density& f, const Density& g) {
  const int n = mesh.dim();
  std::vector<double> terms(mesh.num_simplices());
  for (int i = 0; i < mesh.num_simplices(); ++i) {
    const double root = root_det(discrete_jacobian(mesh, i, eta), i, true);
    const double ratio = std::exp((f.log_value(mesh.barycenter(i)) - g.log_value(eta_mean(mesh, i, eta))) / n);
    terms[i] = mesh.volume(i) * std::abs(-root + ratio);
  }
  return pairwise_sum(terms);
}

AssignmentResult assignment_oracle(const DiscreteMap& map) {
  const int n = map.size();
  if (n > kMaxExhaustiveAssignment)
    throw InputError("assignment oracle is exhaustive up to " + std::to_string(kMaxExhaustiveAssignment) +
                     " pairs; use cyclical_check for larger maps");
  Eigen::MatrixXd cost(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) cost(j, k) = (map.x.col(j) - map.y.col(k)).squaredNorm();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  AssignmentResult r;
  r.identity_cost = cost.trace();
  r.best_cost = r.identity_cost;
  do {
    double c = 0.0;
    for (int j = 0; j < n; ++j) c += cost(j, perm[j]);
    r.best_cost = std::min(r.best_cost, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  r.optimal = r.identity_cost <= r.best_cost + 1e-12 * (1.0 + std::abs(r.best_cost));
  return r;
}

double cyclical_check(const DiscreteMap& map, int max_len, int trials, std::uint64_t seed) {
  if (max_len < 2) throw InputError("cycle length must be at least 2");
  const int n = map.size();
  if (n < 2 || trials <= 0) return 0.0;
  std::mt19937_64 rng(seed);
  const int longest = std::min(max_len, n);
  std::vector<int> pool(n);
  double worst = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < trials; ++trial) {
    const int m = std::uniform_int_distribution<int>(2, longest)(rng);
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < m; ++k) std::swap(pool[k], pool[std::uniform_int_distribution<int>(k, n - 1)(rng)]);
    double sum = 0.0;
    for (int k = 0; k < m; ++k) {
      const int a = pool[k], b = pool[(k + 1) % m];
      sum += map.y.col(a).dot(map.x.col(b) - map.x.col(a));
    }
    worst = std::max(worst, sum);
  }
  return worst;
}

namespace {

Polygon box(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}; }

AnalyticPotential quadratic(double a, double b, Eigen::Vector2d shift = Eigen::Vector2d::Zero()) {
  AnalyticPotential p;
  p.value = [=](const Point& x) { return 0.5 * (a * x(0) * x(0) + b * x(1) * x(1)) + shift.dot(x); };
  p.gradient = [=](const Point& x) -> Point { return Eigen::Vector2d(a * x(0) + shift(0), b * x(1) + shift(1)); };
  return p;
}

}  // namespace

ReferenceProblem identity_reference(double h) {
  ReferenceProblem r;
  r.name = "identity";
  r.spec.domain = box(-0.5, -0.5, 0.5, 0.5);
  r.spec.target = TargetDomain::polygon(r.spec.domain);
  r.spec.h = h;
  r.phi = quadratic(1.0, 1.0);
  return r;
}

ReferenceProblem scaling_reference(double a, double b, double h) {
  if (!(a > 0.0 && b > 0.0)) throw InputError("scaling factors must be positive");
  ReferenceProblem r;
  r.name = "scaling";
  r.spec.domain = box(0.0, 0.0, 1.0, 1.0);
  r.spec.target = TargetDomain::polygon(box(0.0, 0.0, a, b));
  r.spec.g = Density::uniform(1.0 / (a * b));
  r.spec.h = h;
  r.phi = quadratic(a, b);
  return r;
}

ReferenceProblem translation_reference(const Eigen::Vector2d& shift, double h) {
  ReferenceProblem r;
  r.name = "translation";
  r.spec.domain = box(-0.5, -0.5, 0.5, 0.5);
  r.spec.target = TargetDomain::polygon(box(shift(0) - 0.5, shift(1) - 0.5, shift(0) + 0.5, shift(1) + 0.5));
  r.spec.h = h;
  r.phi = quadratic(1.0, 1.0, shift);
  return r;
}

ReferenceProblem exp_reference(double h) {
  ReferenceProblem r;
  r.name = "exp";
  r.spec.domain = box(0.0, 0.0, 1.0, 1.0);
  r.spec.target = TargetDomain::polygon(box(1.0, 1.0, std::exp(1.0), std::exp(1.0)));
  Density::AnalyticShape shape;
  shape.log_value = [](const Point& x) { return x.sum(); };
  shape.grad_log = [](const Point& x) -> Eigen::VectorXd { return Eigen::VectorXd::Ones(x.size()); };
  shape.hess_log = [](const Point& x) -> Eigen::MatrixXd { return Eigen::MatrixXd::Zero(x.size(), x.size()); };
  r.spec.f = Density::analytic(shape, "exp(x1+x2)");
  r.spec.h = h;
  r.phi.value = [](const Point& x) { return std::exp(x(0)) + std::exp(x(1)) - 2.0; };
  r.phi.gradient = [](const Point& x) -> Point { return Eigen::Vector2d(std::exp(x(0)), std::exp(x(1))); };
  return r;
}

ProblemSpec square_to_disc(double h) {
  ProblemSpec s;
  s.domain = box(-0.5, -0.5, 0.5, 0.5);
  s.target = TargetDomain::disc(Eigen::Vector2d::Zero(), 1.0);
  s.h = h;
  return s;
}

double vertex_error(const Mesh& mesh, const OptimizationPotential& phi, const AnalyticPotential& ref) {
  const double ref0 = ref.value(Point::Zero(mesh.dim()));
  double worst = 0.0;
  for (int j = 0; j < mesh.num_vertices(); ++j) {
    const Point x = mesh.vertex(j);
    worst = std::max(worst, std::abs(phi.eval(x) - (ref.value(x) - ref0)));
  }
  return worst;
}

double grid_error(const Polygon& domain, const OptimizationPotential& phi, const AnalyticPotential& ref, int res) {
  if (domain.size() < 3 || res < 1) throw InputError("grid error needs a polygon and a positive resolution");
  Eigen::Vector2d lo = domain.front(), hi = domain.front();
  for (const auto& p : domain) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double ref0 = ref.value(Point::Zero(2));
  double worst = 0.0;
  for (int r = 0; r < res; ++r)
    for (int c = 0; c < res; ++c) {
      const Eigen::Vector2d x(lo(0) + (c + 0.5) * (hi(0) - lo(0)) / res, lo(1) + (r + 0.5) * (hi(1) - lo(1)) / res);
      if (!point_in_polygon(domain, x)) continue;
      worst = std::max(worst, std::abs(phi.eval(x) - (ref.value(x) - ref0)));
    }
  return worst;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("slope fit needs at least two points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw InputError("slope fit needs distinct abscissae");
  return (n * sxy - sx * sy) / denom;
}

StudyResult convergence_study(const ProblemSpec& spec, const std::vector<double>& h_list, const SolverOptions& opts,
                              const std::optional<AnalyticPotential>& reference) {
  if (h_list.size() < 3) throw InputError("a study needs at least three mesh scales");
  for (std::size_t k = 0; k < h_list.size(); ++k) {
    if (!(h_list[k] > 0.0)) throw InputError("mesh scales must be positive");
    if (k > 0 && !(h_list[k] < h_list[k - 1])) throw InputError("mesh scales must be strictly decreasing");
  }
  StudyResult result;
  for (double h : h_list) {
    try {
      const auto start = std::chrono::steady_clock::now();
      ProblemSpec level = spec;
      level.h = h;
      const ProblemInstance inst = instantiate(level);
      const auto [sol, report] = solve(inst, opts);
      StudyRow row;
      row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      row.N = inst.mesh.num_vertices();
      row.h = h;
      row.cost = sol.cost;
      row.two_sided = two_sided_cost(inst.mesh, sol.dv.eta, inst.f, inst.g);
      row.converged = report.converged;
      if (reference) row.sup_err = grid_error(spec.domain, build_potential(inst.mesh, sol.dv), *reference);
      result.rows.push_back(row);
    } catch (const std::exception& e) {
      result.complete = false;
      result.error = "h = " + std::to_string(h) + ": " + e.what();
      break;
    }
  }
  std::vector<double> ns, costs;
  for (const auto& row : result.rows)
    if (row.cost > opts.tol_cost) {
      ns.push_back(row.N);
      costs.push_back(row.cost);
    }
  if (ns.size() >= 2 && ns.front() != ns.back()) result.slope = loglog_slope(ns, costs);
  return result;
}

}  // namespace dmaop
