#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmaop/mesh.hpp"
#include "dmaop/problem.hpp"
#include "dmaop/solver.hpp"

namespace dmaop {

/// Problem config plus solver settings read from a JSON file.
struct ProblemConfig {
  ProblemSpec spec;
  SolverOptions options;
};

/// Everything a solution file carries: the mesh, the balanced problem data and the result.
struct SolutionRecord {
  Mesh mesh;
  TargetDomain target;
  Density f = Density::uniform(1.0);
  Density g = Density::uniform(1.0);
  Solution solution;
  SolveReport report;
};

nlohmann::json mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const nlohmann::json& j);
nlohmann::json density_to_json(const Density& d);
/// Grid "csv" paths are resolved against base_dir.
Density density_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json target_to_json(const TargetDomain& t);
TargetDomain target_from_json(const nlohmann::json& j);

/// Field problems are reported as InputError naming the field.
ProblemConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Timings are left out unless requested so that files are reproducible.
nlohmann::json solution_to_json(const ProblemInstance& instance, const Solution& sol, const SolveReport& report,
                                bool timings = false);
SolutionRecord solution_from_json(const nlohmann::json& j);

/// Reads a JSON document; parse errors become InputError with the file name and byte offset.
nlohmann::json read_json(const std::filesystem::path& path);
/// Two-space indented, newline terminated.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

ProblemConfig read_config(const std::filesystem::path& path);
Mesh read_mesh(const std::filesystem::path& path);

/// Header line "xmin,ymin,xmax,ymax,nx,ny", then ny rows of nx samples (row 0 at ymin).
GridSamples read_grid_csv(const std::filesystem::path& path);
/// Rows "x,y[,...]"; a non-numeric first line is skipped as a header. Returns dim x K.
Eigen::MatrixXd read_points_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace dmaop
