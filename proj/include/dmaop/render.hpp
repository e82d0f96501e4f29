#pragma once

#include <string>
#include <vector>

#include "dmaop/mesh.hpp"
#include "dmaop/objective.hpp"
#include "dmaop/problem.hpp"

namespace dmaop {

struct RenderOptions {
  int size = 640;          // canvas width and height in pixels
  double point_radius = 2.5;
};

inline const std::vector<double> kDefaultRenderTimes = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};

/// SVG of the displaced vertices at time t over the target outline. The source
/// triangulation is drawn at t = 0, shaded by f. Output depends only on the inputs.
std::string render_frame(const Mesh& mesh, const DecisionVector& dv, const TargetDomain& target, const Density& f, double t,
                         const RenderOptions& opts = {});

}  // namespace dmaop
