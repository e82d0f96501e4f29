#include "dmaop/cli.hpp"

#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dmaop/errors.hpp"
#include "dmaop/io.hpp"
#include "dmaop/parallel.hpp"
#include "dmaop/potential.hpp"
#include "dmaop/render.hpp"
#include "dmaop/solver.hpp"
#include "dmaop/transport.hpp"

namespace dmaop {

namespace fs = std::filesystem;

namespace {

constexpr double kVerifyTol = 1e-8;
constexpr double kCycleTol = 1e-9;

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir = ".";
  bool timings = false;
};

fs::path output_path(const std::string& explicit_path, const Globals& g, const char* fallback) {
  return explicit_path.empty() ? fs::path(g.out_dir) / fallback : fs::path(explicit_path);
}

std::optional<AnalyticPotential> parse_reference(const std::string& name) {
  if (name.empty()) return std::nullopt;
  const auto colon = name.find(':');
  const std::string kind = name.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::stringstream ss(name.substr(colon + 1));
    std::string cell;
    while (std::getline(ss, cell, ',')) args.push_back(std::stod(cell));
  }
  if (kind == "identity") return identity_reference().phi;
  if (kind == "exp") return exp_reference().phi;
  if (kind == "scaling" && args.size() == 2) return scaling_reference(args[0], args[1]).phi;
  if (kind == "translation" && args.size() == 2) return translation_reference(Eigen::Vector2d(args[0], args[1])).phi;
  throw InputError("unknown reference '" + name + "' (identity, exp, scaling:a,b, translation:sx,sy)");
}

void print_residuals(std::ostream& out, const ConstraintResiduals& r) {
  out << "hyperplane_max " << format_number(r.hyperplane_max) << "\n";
  out << "target_max " << format_number(r.target_max) << "\n";
  out << "min_eig_H " << format_number(r.min_eig_H) << "\n";
}

int cmd_mesh(const std::string& config, double h, const std::string& out_path, double eps, const Globals& g, std::ostream& out) {
  ProblemConfig cfg = read_config(config);
  if (h > 0.0) cfg.spec.h = h;
  const Mesh mesh = triangulate_polygon(cfg.spec.domain, cfg.spec.h);
  const fs::path path = output_path(out_path, g, "mesh.json");
  write_json(path, mesh_to_json(mesh));
  const MeshQualityReport q = quality(mesh, eps);
  out << "vertices " << mesh.num_vertices() << "\nsimplices " << mesh.num_simplices() << "\n";
  out << "h_max " << format_number(q.h_max) << "\nR_min " << format_number(q.R_min) << "\ncoverage_gap " << format_number(q.coverage_gap)
      << "\nwrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_solve(const std::string& config, const std::string& mesh_in, const std::string& mesh_out, const std::string& out_path,
              const Globals& g, std::ostream& out, std::ostream& err) {
  ProblemConfig cfg = read_config(config);
  cfg.options.seed = g.seed;
  std::optional<Mesh> mesh;
  if (!mesh_in.empty()) {
    mesh = read_mesh(mesh_in);
  } else {
    mesh = triangulate_polygon(cfg.spec.domain, cfg.spec.h);
    const fs::path mp = output_path(mesh_out, g, "mesh.json");
    write_json(mp, mesh_to_json(*mesh));
    out << "wrote " << mp.string() << "\n";
  }
  const ProblemInstance inst = instantiate(cfg.spec, *mesh);
  const auto [sol, report] = solve(inst, cfg.options);
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  const fs::path sp = output_path(out_path, g, "solution.json");
  write_json(sp, solution_to_json(inst, sol, report, g.timings));
  out << "N " << inst.mesh.num_vertices() << "\ncost " << format_number(sol.cost) << "\n";
  print_residuals(out, report.residuals);
  out << "converged " << (report.converged ? "yes" : "no") << " (" << report.reason << ")\n";
  out << "wrote " << sp.string() << "\n";
  return report.converged ? kExitOk : kExitIterationCap;
}

int cmd_verify(const std::string& path, int max_len, int trials, const Globals& g, std::ostream& out) {
  const SolutionRecord rec = solution_from_json(read_json(path));
  const Solution& sol = rec.solution;
  const ConstraintResiduals r = residuals(rec.mesh, sol.dv, rec.target);
  print_residuals(out, r);
  bool ok = true;
  if (r.hyperplane_max > kVerifyTol) {
    ok = false;
    out << "FAIL hyperplane constraint, worst pair (" << r.worst_pair_i << ", " << r.worst_pair_j << ")\n";
  }
  if (r.target_max > kVerifyTol) {
    ok = false;
    out << "FAIL target constraint, worst vertex " << r.worst_target_vertex << "\n";
  }
  const bool psd = sol.variant == Variant::LDMAOP ? r.min_eig_H > 0.0 : r.min_eig_H >= -kVerifyTol;
  if (!psd) {
    ok = false;
    out << "FAIL discrete Jacobian, worst simplex " << r.worst_simplex << "\n";
  }
  const DiscreteMap map = discrete_map(rec.mesh, sol.dv);
  const double cycle = cyclical_check(map, max_len, trials, g.seed);
  out << "cycle_max " << format_number(cycle) << "\n";
  if (cycle > kCycleTol) {
    ok = false;
    out << "FAIL cyclical monotonicity\n";
  }
  if (map.size() <= kMaxExhaustiveAssignment) {
    const AssignmentResult a = assignment_oracle(map);
    out << "assignment " << (a.optimal ? "optimal" : "not optimal") << " (identity " << format_number(a.identity_cost) << ", best "
        << format_number(a.best_cost) << ")\n";
    if (!a.optimal) ok = false;
  } else {
    out << "assignment skipped (N > " << kMaxExhaustiveAssignment << ")\n";
  }
  out << (ok ? "OK" : "FAILED") << "\n";
  return ok ? kExitOk : kExitVerifyFailed;
}

int cmd_study(const std::string& config, const std::vector<double>& hs, const std::string& reference, const std::string& out_path,
              const Globals& g, std::ostream& out) {
  ProblemConfig cfg = read_config(config);
  cfg.options.seed = g.seed;
  const StudyResult study = convergence_study(cfg.spec, hs, cfg.options, parse_reference(reference));
  std::string csv = "N,h,cost,two_sided,sup_err,runtime_s\n";
  for (const auto& row : study.rows) {
    csv += std::to_string(row.N) + "," + format_number(row.h) + "," + format_number(row.cost) + "," + format_number(row.two_sided) + "," +
           (row.sup_err ? format_number(*row.sup_err) : std::string()) + "," + format_number(row.runtime_s) + "\n";
  }
  csv += "# slope," + (study.slope ? format_number(*study.slope) : std::string("undefined")) + "\n";
  if (!study.complete) csv += "# incomplete," + study.error + "\n";
  const fs::path path = output_path(out_path, g, "study.csv");
  write_text(path, csv);
  out << csv << "wrote " << path.string() << "\n";
  return study.complete ? kExitOk : kExitInternal;
}

int cmd_render(const std::string& path, const std::vector<double>& times, const Globals& g, std::ostream& out) {
  for (double t : times)
    if (!(t >= 0.0 && t <= 1.0)) throw InputError("render times must lie in [0, 1]");
  const SolutionRecord rec = solution_from_json(read_json(path));
  for (std::size_t k = 0; k < times.size(); ++k) {
    const fs::path fp = fs::path(g.out_dir) / ("frame_" + std::to_string(k) + ".svg");
    write_text(fp, render_frame(rec.mesh, rec.solution.dv, rec.target, rec.f, times[k]));
    out << "wrote " << fp.string() << "\n";
  }
  return kExitOk;
}

int cmd_eval(const std::string& path, const std::string& points_path, const std::string& out_path, const Globals& g, std::ostream& out) {
  const SolutionRecord rec = solution_from_json(read_json(path));
  const OptimizationPotential phi = build_potential(rec.mesh, rec.solution.dv);
  const Eigen::MatrixXd pts = read_points_csv(points_path);
  if (pts.cols() > 0 && pts.rows() != phi.dim()) throw InputError("points must have " + std::to_string(phi.dim()) + " coordinates");
  const char* axes[] = {"x", "y", "z"};
  std::string csv;
  for (int d = 0; d < phi.dim(); ++d) csv += std::string(axes[d]) + ",";
  csv += "phi,index";
  for (int d = 0; d < phi.dim(); ++d) csv += std::string(",eta_") + axes[d];
  csv += "\n";
  for (Eigen::Index k = 0; k < pts.cols(); ++k) {
    const Point x = pts.col(k);
    const auto sg = phi.subgradient(x);
    for (int d = 0; d < phi.dim(); ++d) csv += format_number(x(d)) + ",";
    csv += format_number(phi.eval(x)) + "," + std::to_string(sg.index);
    for (int d = 0; d < phi.dim(); ++d) csv += "," + format_number(sg.eta(d));
    csv += "\n";
  }
  const fs::path op = output_path(out_path, g, "values.csv");
  write_text(op, csv);
  out << "wrote " << op.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete Monge-Ampere optimal transport solver", "dmaop"};
  // "--h" is the mesh scale, so help is long-form only
  app.set_help_flag("--help", "print this help message and exit");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "seed for randomised checks");
  app.add_option("--threads", g.threads, "worker threads for assembly")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "directory for default output files");

  std::string config, mesh_in, mesh_out, out_path, solution, points, reference;
  double h = 0.0, eps = 0.0;
  int max_len = 5, trials = 10000;
  std::vector<double> hs, times = kDefaultRenderTimes;

  auto* mesh_cmd = app.add_subcommand("mesh", "triangulate the source domain");
  mesh_cmd->add_option("--config", config, "problem config (JSON)")->required();
  mesh_cmd->add_option("--h", h, "mesh scale (overrides the config)");
  mesh_cmd->add_option("--eps", eps, "boundary shrink for the coverage gap");
  mesh_cmd->add_option("--out,--mesh-out", out_path, "mesh file to write");

  auto* solve_cmd = app.add_subcommand("solve", "solve a problem config");
  solve_cmd->add_option("--config", config, "problem config (JSON)")->required();
  solve_cmd->add_option("--mesh-in", mesh_in, "use this mesh instead of meshing the domain");
  solve_cmd->add_option("--mesh-out", mesh_out, "where to write the generated mesh");
  solve_cmd->add_option("--out", out_path, "solution file to write");
  solve_cmd->add_flag("--timings", g.timings, "record wall time in the solution file");

  auto* verify_cmd = app.add_subcommand("verify", "check a solution file");
  verify_cmd->add_option("--solution", solution, "solution file")->required();
  verify_cmd->add_option("--max-len", max_len, "longest sampled cycle");
  verify_cmd->add_option("--trials", trials, "number of sampled cycles");

  auto* study_cmd = app.add_subcommand("study", "mesh-refinement convergence study");
  study_cmd->add_option("--config", config, "problem config (JSON)")->required();
  study_cmd->add_option("--h", hs, "strictly decreasing mesh scales")->delimiter(',')->required();
  study_cmd->add_option("--reference", reference, "exact potential: identity, exp, scaling:a,b, translation:sx,sy");
  study_cmd->add_option("--out", out_path, "CSV file to write");

  auto* render_cmd = app.add_subcommand("render", "write SVG frames of the displacement interpolation");
  render_cmd->add_option("--solution", solution, "solution file")->required();
  render_cmd->add_option("--times", times, "frame times in [0, 1]")->delimiter(',');

  auto* eval_cmd = app.add_subcommand("eval", "evaluate the potential at points");
  eval_cmd->add_option("--solution", solution, "solution file")->required();
  eval_cmd->add_option("--points", points, "CSV of query points")->required();
  eval_cmd->add_option("--out", out_path, "CSV file to write");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    set_thread_count(g.threads);
    if (*mesh_cmd) return cmd_mesh(config, h, out_path, eps, g, out);
    if (*solve_cmd) return cmd_solve(config, mesh_in, mesh_out, out_path, g, out, err);
    if (*verify_cmd) return cmd_verify(solution, max_len, trials, g, out);
    if (*study_cmd) return cmd_study(config, hs, reference, out_path, g, out);
    if (*render_cmd) return cmd_render(solution, times, g, out);
    if (*eval_cmd) return cmd_eval(solution, points, out_path, g, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DegenerateSimplexError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInput;
}

}  // namespace dmaop
