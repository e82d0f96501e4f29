#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dmaop/cli.hpp"
#include "dmaop/io.hpp"
#include "dmaop/transport.hpp"
#include "helpers.hpp"

using namespace dmaop;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

/// Fresh scratch directory holding a square-to-disc config.
fs::path setup(const std::string& name, const std::string& extra = "") {
  const fs::path dir = testing::scratch_dir("cli/" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text(dir / "config.json", R"({"domain": {"polygon": [[-0.5,-0.5],[0.5,-0.5],[0.5,0.5],[-0.5,0.5]]},
    "target": {"disc": {"center": [0, 0], "radius": 1}}, "mesh": {"h": 0.5})" + extra + "}\n");
  return dir;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("solve writes mesh and solution") {
    const fs::path dir = setup("solve");
    const Run r = run({"--out-dir", dir.string(), "solve", "--config", (dir / "config.json").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("cost ") != std::string::npos);
    REQUIRE(fs::exists(dir / "solution.json"));
    REQUIRE(fs::exists(dir / "mesh.json"));
    const auto j = read_json(dir / "solution.json");
    CHECK(j.contains("cost"));
    CHECK(j["cost"].get<double>() >= 0.0);
    CHECK(j["N"].get<int>() == static_cast<int>(j["psi"].size()));
  }

  TEST_CASE("input errors exit with code 1") {
    const fs::path dir = testing::scratch_dir("cli/errors");
    fs::create_directories(dir);
    write_text(dir / "config.json", R"({"domain": {"polygon": [[-1,-1],[1,-1],[1,1],[-1,1]]}})");
    Run r = run({"solve", "--config", (dir / "config.json").string(), "--out", (dir / "s.json").string()});
    CHECK(r.code == kExitInput);
    CHECK(r.err.find("target") != std::string::npos);

    const fs::path good = setup("errors3d");
    write_text(good / "mesh3.json", R"({"dim": 3, "vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]], "simplices": [[0,1,2,3]]})");
    r = run({"--out-dir", good.string(), "solve", "--config", (good / "config.json").string(), "--mesh-in", (good / "mesh3.json").string()});
    CHECK(r.code == kExitInput);
    CHECK_FALSE(fs::exists(good / "solution.json"));

    r = run({"solve"});
    CHECK(r.code == kExitInput);
    r = run({"verify", "--solution", (dir / "nope.json").string()});
    CHECK(r.code == kExitInput);
  }

  TEST_CASE("verify accepts a solution and flags a corrupted one") {
    const fs::path dir = setup("verify");
    REQUIRE(run({"--out-dir", dir.string(), "solve", "--config", (dir / "config.json").string()}).code == kExitOk);
    const Run ok = run({"verify", "--solution", (dir / "solution.json").string()});
    CHECK(ok.code == kExitOk);
    CHECK(ok.out.find("OK\n") != std::string::npos);

    auto j = read_json(dir / "solution.json");
    j["eta"][2] = {5.0, 0.0};
    write_json(dir / "bad.json", j);
    const Run bad = run({"verify", "--solution", (dir / "bad.json").string()});
    CHECK(bad.code == kExitVerifyFailed);
    CHECK(bad.out.find("FAIL target constraint, worst vertex 2") != std::string::npos);
  }

  TEST_CASE("study prints one row per scale and a slope") {
    const fs::path dir = setup("study");
    const Run r = run({"--out-dir", dir.string(), "study", "--config", (dir / "config.json").string(), "--h", "0.5,0.35,0.25"});
    CHECK(r.code == kExitOk);
    const std::string csv = slurp(dir / "study.csv");
    std::istringstream lines(csv);
    std::string line;
    std::vector<std::string> all;
    while (std::getline(lines, line)) all.push_back(line);
    REQUIRE(all.size() == 5);
    CHECK(all[0] == "N,h,cost,two_sided,sup_err,runtime_s");
    CHECK(all[4].rfind("# slope,", 0) == 0);
    CHECK(run({"study", "--config", (dir / "config.json").string(), "--h", "0.25,0.5,0.1"}).code == kExitInput);
    CHECK(run({"study", "--config", (dir / "config.json").string(), "--h", "0.5,0.4,0.3", "--reference", "bogus"}).code == kExitInput);
  }

  TEST_CASE("render writes one frame per time") {
    const fs::path dir = setup("render");
    REQUIRE(run({"--out-dir", dir.string(), "solve", "--config", (dir / "config.json").string()}).code == kExitOk);
    CHECK(run({"--out-dir", dir.string(), "render", "--solution", (dir / "solution.json").string()}).code == kExitOk);
    for (int k = 0; k < 4; ++k) {
      const std::string svg = slurp(dir / ("frame_" + std::to_string(k) + ".svg"));
      CHECK(svg.rfind("<svg", 0) == 0);
      CHECK(svg.find("<circle") != std::string::npos);
    }
    const SolutionRecord rec = solution_from_json(read_json(dir / "solution.json"));
    const Eigen::MatrixXd end = displacement(rec.mesh, rec.solution.dv, 1.0);
    for (Eigen::Index j = 0; j < end.cols(); ++j) CHECK(rec.target.violation(end.col(j)) <= 1e-8);
    CHECK(run({"--out-dir", dir.string(), "render", "--solution", (dir / "solution.json").string(), "--times", "0,1.5"}).code == kExitInput);
  }

  TEST_CASE("eval writes potential values") {
    const fs::path dir = setup("eval");
    REQUIRE(run({"--out-dir", dir.string(), "solve", "--config", (dir / "config.json").string()}).code == kExitOk);
    write_text(dir / "points.csv", "x,y\n0,0\n0.25,-0.1\n");
    CHECK(run({"--out-dir", dir.string(), "eval", "--solution", (dir / "solution.json").string(), "--points", (dir / "points.csv").string()}).code ==
          kExitOk);
    const std::string csv = slurp(dir / "values.csv");
    CHECK(csv.rfind("x,y,phi,index,eta_x,eta_y\n0,0,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }

  TEST_CASE("outputs are reproducible") {
    const fs::path a = setup("repro_a"), b = setup("repro_b");
    REQUIRE(run({"--out-dir", a.string(), "solve", "--config", (a / "config.json").string()}).code == kExitOk);
    REQUIRE(run({"--out-dir", b.string(), "--threads", "3", "solve", "--config", (b / "config.json").string()}).code == kExitOk);
    CHECK(slurp(a / "solution.json") == slurp(b / "solution.json"));
    CHECK(slurp(a / "mesh.json") == slurp(b / "mesh.json"));
    const Run va = run({"--seed", "4", "verify", "--solution", (a / "solution.json").string()});
    const Run vb = run({"--seed", "4", "verify", "--solution", (b / "solution.json").string()});
    CHECK(va.out == vb.out);

    // a round trip through the reader and writer leaves verify output unchanged
    const SolutionRecord rec = solution_from_json(read_json(a / "solution.json"));
    const ProblemInstance inst{rec.mesh, rec.target, rec.f, rec.g, rec.solution.variant};
    write_json(a / "again.json", solution_to_json(inst, rec.solution, rec.report));
    CHECK(slurp(a / "again.json") == slurp(a / "solution.json"));
    CHECK(run({"--seed", "4", "verify", "--solution", (a / "again.json").string()}).out == va.out);
  }
}
