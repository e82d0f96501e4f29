#include "dmaop/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dmaop/errors.hpp"

namespace dmaop {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw InputError("config field '" + field + "': " + what);
}

const json& require(const json& j, const std::string& key, const std::string& context) {
  if (!j.is_object() || !j.contains(key)) field_error(context.empty() ? key : context + "." + key, "missing");
  return j.at(key);
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) field_error(field, "expected a number");
  return j.get<double>();
}

Eigen::VectorXd vector_of(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) field_error(field, "expected a non-empty array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = number(j[k], field);
  return v;
}

Polygon polygon_of(const json& j, const std::string& field) {
  if (!j.is_array()) field_error(field, "expected an array of [x, y] pairs");
  Polygon p;
  for (const auto& q : j) {
    const Eigen::VectorXd v = vector_of(q, field);
    if (v.size() != 2) field_error(field, "polygon vertices must have two coordinates");
    p.emplace_back(v(0), v(1));
  }
  return p;
}

json array_of(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

json columns_of(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(array_of(m.col(c)));
  return a;
}

json polygon_json(const Polygon& p) {
  json a = json::array();
  for (const auto& v : p) a.push_back({v(0), v(1)});
  return a;
}

Eigen::MatrixXd columns_from(const json& j, int rows, const std::string& field) {
  if (!j.is_array()) field_error(field, "expected an array of points");
  Eigen::MatrixXd m(rows, j.size());
  for (std::size_t c = 0; c < j.size(); ++c) {
    const Eigen::VectorXd v = vector_of(j[c], field);
    if (v.size() != rows) field_error(field, "point " + std::to_string(c) + " has " + std::to_string(v.size()) + " coordinates, expected " + std::to_string(rows));
    m.col(static_cast<Eigen::Index>(c)) = v;
  }
  return m;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

bool parse_double(std::string s, double& v) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return false;
  s = s.substr(b, e - b + 1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json mesh_to_json(const Mesh& mesh) {
  json j;
  j["dim"] = mesh.dim();
  j["vertices"] = columns_of(mesh.vertices());
  json s = json::array();
  for (const auto& simplex : mesh.simplices()) s.push_back(simplex.vertex_ids);
  j["simplices"] = s;
  j["polygon"] = polygon_json(mesh.polygon());
  return j;
}

Mesh mesh_from_json(const json& j) {
  const json& dim_j = require(j, "dim", "mesh");
  if (!dim_j.is_number_integer()) field_error("mesh.dim", "expected an integer");
  const int dim = dim_j.get<int>();
  if (dim != 2 && dim != 3) field_error("mesh.dim", "must be 2 or 3");
  const Eigen::MatrixXd vertices = columns_from(require(j, "vertices", "mesh"), dim, "mesh.vertices");
  const json& sj = require(j, "simplices", "mesh");
  if (!sj.is_array()) field_error("mesh.simplices", "expected an array of index lists");
  std::vector<Simplex> simplices;
  for (const auto& s : sj) {
    if (!s.is_array()) field_error("mesh.simplices", "expected an index list");
    Simplex simplex;
    for (const auto& id : s) {
      if (!id.is_number_integer()) field_error("mesh.simplices", "indices must be integers");
      simplex.vertex_ids.push_back(id.get<int>());
    }
    simplices.push_back(std::move(simplex));
  }
  Polygon polygon;
  if (j.contains("polygon")) polygon = polygon_of(j.at("polygon"), "mesh.polygon");
  return Mesh(dim, vertices, std::move(simplices), std::move(polygon));
}

json density_to_json(const Density& d) {
  json j;
  switch (d.kind()) {
    case Density::Kind::Uniform:
      j["uniform"] = d.height();
      break;
    case Density::Kind::GaussianFloored:
      j["gaussian"] = {{"center", array_of(d.center())}, {"variances", array_of(d.variances())}, {"peak", d.peak()}, {"floor", d.floor_fraction()}};
      break;
    case Density::Kind::Grid: {
      const GridSamples& s = d.samples();
      json rows = json::array();
      for (Eigen::Index r = 0; r < s.values.rows(); ++r) rows.push_back(array_of(s.values.row(r).transpose()));
      j["grid"] = {{"lo", array_of(s.lo)}, {"hi", array_of(s.hi)}, {"values", rows}, {"floor", d.floor_fraction()}};
      break;
    }
    case Density::Kind::Analytic:
      throw InputError("analytic density '" + d.label() + "' cannot be serialised");
  }
  if (d.scale() != 1.0) j["scale"] = d.scale();
  return j;
}

Density density_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (j.is_number()) return Density::uniform(j.get<double>());
  if (!j.is_object()) field_error("density", "expected an object");
  Density d = Density::uniform(1.0);
  if (j.contains("uniform")) {
    d = Density::uniform(number(j.at("uniform"), "density.uniform"));
  } else if (j.contains("gaussian")) {
    const json& g = j.at("gaussian");
    d = Density::gaussian(vector_of(require(g, "center", "gaussian"), "gaussian.center"),
                          vector_of(require(g, "variances", "gaussian"), "gaussian.variances"),
                          g.contains("peak") ? number(g.at("peak"), "gaussian.peak") : 1.0,
                          g.contains("floor") ? number(g.at("floor"), "gaussian.floor") : 1e-3);
  } else if (j.contains("grid")) {
    const json& g = j.at("grid");
    const double floor = g.contains("floor") ? number(g.at("floor"), "grid.floor") : 1e-3;
    GridSamples s;
    if (g.contains("csv")) {
      if (!g.at("csv").is_string()) field_error("grid.csv", "expected a path");
      std::filesystem::path p = g.at("csv").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      s = read_grid_csv(p);
    } else {
      const Eigen::VectorXd lo = vector_of(require(g, "lo", "grid"), "grid.lo");
      const Eigen::VectorXd hi = vector_of(require(g, "hi", "grid"), "grid.hi");
      if (lo.size() != 2 || hi.size() != 2) field_error("grid", "bounds must be two-dimensional");
      s.lo = lo;
      s.hi = hi;
      const json& rows = require(g, "values", "grid");
      if (!rows.is_array() || rows.empty()) field_error("grid.values", "expected rows of samples");
      const Eigen::VectorXd first = vector_of(rows[0], "grid.values");
      s.values.resize(static_cast<Eigen::Index>(rows.size()), first.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const Eigen::VectorXd row = vector_of(rows[r], "grid.values");
        if (row.size() != first.size()) field_error("grid.values", "rows must have equal length");
        s.values.row(static_cast<Eigen::Index>(r)) = row.transpose();
      }
    }
    d = Density::grid(std::move(s), floor);
  } else {
    field_error("density", "expected one of \"uniform\", \"gaussian\", \"grid\"");
  }
  if (j.contains("scale")) d = d.scaled(number(j.at("scale"), "density.scale"));
  return d;
}

json target_to_json(const TargetDomain& t) {
  if (t.kind() == TargetDomain::Kind::Disc) return {{"disc", {{"center", array_of(t.center())}, {"radius", t.radius()}}}};
  return {{"polygon", polygon_json(t.loop())}};
}

TargetDomain target_from_json(const json& j) {
  if (j.is_object() && j.contains("disc")) {
    const json& d = j.at("disc");
    return TargetDomain::disc(vector_of(require(d, "center", "target.disc"), "target.disc.center"),
                              number(require(d, "radius", "target.disc"), "target.disc.radius"));
  }
  if (j.is_object() && j.contains("polygon")) return TargetDomain::polygon(polygon_of(j.at("polygon"), "target.polygon"));
  field_error("target", "expected {\"disc\": {...}} or {\"polygon\": [...]}");
}

ProblemConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  ProblemConfig c;
  const json& domain = require(j, "domain", "");
  c.spec.domain = polygon_of(require(domain, "polygon", "domain"), "domain.polygon");
  try {
    c.spec.target = target_from_json(require(j, "target", ""));
  } catch (const InputError& e) {
    const std::string what = e.what();
    if (what.find("'target") != std::string::npos) throw;
    field_error("target", what);
  }
  if (j.contains("f")) c.spec.f = density_from_json(j.at("f"), base_dir);
  if (j.contains("g")) c.spec.g = density_from_json(j.at("g"), base_dir);
  if (j.contains("variant")) {
    if (!j.at("variant").is_string()) field_error("variant", "expected \"dmaop\" or \"ldmaop\"");
    c.spec.variant = parse_variant(j.at("variant").get<std::string>());
  }
  c.options.variant = c.spec.variant;
  if (j.contains("mesh")) {
    const json& m = j.at("mesh");
    if (m.contains("h")) c.spec.h = number(m.at("h"), "mesh.h");
    if (!(c.spec.h > 0.0)) field_error("mesh.h", "must be positive");
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    auto integer = [&](const char* key, int& out) {
      if (!s.contains(key)) return;
      if (!s.at(key).is_number_integer()) field_error(std::string("solver.") + key, "expected an integer");
      out = s.at(key).get<int>();
    };
    auto real = [&](const char* key, double& out) {
      if (s.contains(key)) out = number(s.at(key), std::string("solver.") + key);
    };
    integer("max_outer", c.options.max_outer);
    integer("max_newton", c.options.max_newton);
    integer("max_subgrad", c.options.max_subgrad);
    real("barrier_mu", c.options.barrier_mu);
    real("tol_cost", c.options.tol_cost);
    real("tol_feas", c.options.tol_feas);
    if (s.contains("fallback")) c.options.fallback = s.at("fallback").get<bool>();
    c.options.validate();
  }
  return c;
}

json solution_to_json(const ProblemInstance& instance, const Solution& sol, const SolveReport& report, bool timings) {
  const auto& r = report.residuals;
  json j;
  j["variant"] = to_string(sol.variant);
  j["N"] = sol.dv.size();
  j["psi"] = array_of(sol.dv.psi);
  j["eta"] = columns_of(sol.dv.eta);
  j["b"] = sol.b_offset;
  j["cost"] = sol.cost;
  j["residuals"] = {{"hyperplane_max", r.hyperplane_max},
                    {"target_max", r.target_max},
                    {"min_eig_H", r.min_eig_H},
                    {"worst_pair", {r.worst_pair_i, r.worst_pair_j}},
                    {"worst_target_vertex", r.worst_target_vertex},
                    {"worst_simplex", r.worst_simplex}};
  j["mesh_h"] = instance.mesh.h_max();
  json rep;
  rep["iters"] = {{"outer", report.outer_iters}, {"newton", report.newton_iters}, {"subgradient", report.subgrad_iters}};
  rep["initial_cost"] = report.initial_cost;
  rep["converged"] = report.converged;
  rep["reason"] = report.reason;
  rep["trace"] = report.trace;
  rep["warnings"] = report.warnings;
  if (timings) rep["wall_time_s"] = report.wall_time_s;
  j["report"] = rep;
  j["mesh"] = mesh_to_json(instance.mesh);
  j["problem"] = {{"target", target_to_json(instance.target)}, {"f", density_to_json(instance.f)}, {"g", density_to_json(instance.g)}};
  return j;
}

SolutionRecord solution_from_json(const json& j) {
  if (!j.is_object()) throw InputError("solution must be a JSON object");
  SolutionRecord rec;
  rec.mesh = mesh_from_json(require(j, "mesh", ""));
  const json& problem = require(j, "problem", "");
  rec.target = target_from_json(require(problem, "target", "problem"));
  rec.f = density_from_json(require(problem, "f", "problem"));
  rec.g = density_from_json(require(problem, "g", "problem"));
  Solution& s = rec.solution;
  const json& v = require(j, "variant", "");
  if (!v.is_string()) field_error("variant", "expected a string");
  s.variant = parse_variant(v.get<std::string>());
  s.dv.psi = vector_of(require(j, "psi", ""), "psi");
  s.dv.eta = columns_from(require(j, "eta", ""), rec.mesh.dim(), "eta");
  if (s.dv.psi.size() != rec.mesh.num_vertices() || s.dv.eta.cols() != rec.mesh.num_vertices())
    field_error("psi", "length does not match the mesh vertex count");
  s.b_offset = number(require(j, "b", ""), "b");
  s.cost = number(require(j, "cost", ""), "cost");
  if (j.contains("residuals")) {
    const json& r = j.at("residuals");
    ConstraintResiduals& res = rec.report.residuals;
    res.hyperplane_max = number(require(r, "hyperplane_max", "residuals"), "residuals.hyperplane_max");
    res.target_max = number(require(r, "target_max", "residuals"), "residuals.target_max");
    res.min_eig_H = number(require(r, "min_eig_H", "residuals"), "residuals.min_eig_H");
    if (r.contains("worst_pair")) {
      res.worst_pair_i = r.at("worst_pair").at(0).get<int>();
      res.worst_pair_j = r.at("worst_pair").at(1).get<int>();
    }
    res.worst_target_vertex = r.value("worst_target_vertex", -1);
    res.worst_simplex = r.value("worst_simplex", -1);
  }
  if (j.contains("report")) {
    const json& rep = j.at("report");
    if (rep.contains("iters")) {
      rec.report.outer_iters = rep.at("iters").value("outer", 0);
      rec.report.newton_iters = rep.at("iters").value("newton", 0);
      rec.report.subgrad_iters = rep.at("iters").value("subgradient", 0);
    }
    rec.report.initial_cost = rep.value("initial_cost", 0.0);
    rec.report.converged = rep.value("converged", false);
    rec.report.reason = rep.value("reason", std::string());
    if (rep.contains("trace")) rec.report.trace = rep.at("trace").get<std::vector<double>>();
    if (rep.contains("warnings")) rec.report.warnings = rep.at("warnings").get<std::vector<std::string>>();
    rec.report.wall_time_s = rep.value("wall_time_s", 0.0);
  }
  rec.report.cost = s.cost;
  return rec;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

ProblemConfig read_config(const std::filesystem::path& path) {
  try {
    return config_from_json(read_json(path), path.parent_path());
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

Mesh read_mesh(const std::filesystem::path& path) {
  try {
    return mesh_from_json(read_json(path));
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

GridSamples read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty grid file");
  auto header = split_csv(line);
  std::vector<double> h(header.size());
  bool numeric = header.size() == 6;
  for (std::size_t k = 0; numeric && k < header.size(); ++k) numeric = parse_double(header[k], h[k]);
  if (!numeric) {
    // named header line, values on the next line
    if (!std::getline(in, line)) throw InputError(path.string() + ": missing grid bounds");
    header = split_csv(line);
    h.assign(header.size(), 0.0);
    numeric = header.size() == 6;
    for (std::size_t k = 0; numeric && k < header.size(); ++k) numeric = parse_double(header[k], h[k]);
  }
  if (!numeric) throw InputError(path.string() + ": grid header must be xmin,ymin,xmax,ymax,nx,ny");
  const int nx = static_cast<int>(h[4]), ny = static_cast<int>(h[5]);
  if (nx < 2 || ny < 2 || nx != h[4] || ny != h[5]) throw InputError(path.string() + ": nx and ny must be integers >= 2");
  GridSamples s;
  s.lo = Eigen::Vector2d(h[0], h[1]);
  s.hi = Eigen::Vector2d(h[2], h[3]);
  s.values.resize(ny, nx);
  for (int r = 0; r < ny; ++r) {
    if (!std::getline(in, line)) throw InputError(path.string() + ": expected " + std::to_string(ny) + " sample rows");
    const auto cells = split_csv(line);
    if (static_cast<int>(cells.size()) != nx)
      throw InputError(path.string() + ": line " + std::to_string(r + 2) + " has " + std::to_string(cells.size()) + " samples, expected " + std::to_string(nx));
    for (int c = 0; c < nx; ++c)
      if (!parse_double(cells[c], s.values(r, c))) throw InputError(path.string() + ": line " + std::to_string(r + 2) + " has a non-numeric sample");
  }
  return s;
}

Eigen::MatrixXd read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    std::vector<double> row(cells.size());
    bool ok = true;
    for (std::size_t k = 0; k < cells.size() && ok; ++k) ok = parse_double(cells[k], row[k]);
    if (!ok) {
      if (rows.empty() && lineno == 1) continue;
      throw InputError(path.string() + ": line " + std::to_string(lineno) + " is not numeric");
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw InputError(path.string() + ": line " + std::to_string(lineno) + " has a different column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(2, 0);
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c)
    for (std::size_t r = 0; r < rows[c].size(); ++r) pts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[c][r];
  return pts;
}

}  // namespace dmaop
