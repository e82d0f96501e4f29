#include "dmaop/render.hpp"

#include <algorithm>
#include <cstdio>

#include "dmaop/errors.hpp"
#include "dmaop/transport.hpp"

namespace dmaop {

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string render_frame(const Mesh& mesh, const DecisionVector& dv, const TargetDomain& target, const Density& f, double t,
                         const RenderOptions& opts) {
  if (mesh.dim() != 2) throw InputError("rendering supports two-dimensional meshes only");
  const Eigen::MatrixXd pts = displacement(mesh, dv, t);

  Eigen::Vector2d lo = mesh.vertices().rowwise().minCoeff().cwiseMin(dv.eta.rowwise().minCoeff());
  Eigen::Vector2d hi = mesh.vertices().rowwise().maxCoeff().cwiseMax(dv.eta.rowwise().maxCoeff());
  const auto tb = target.bounding_box();
  lo = lo.cwiseMin(tb.min().head<2>());
  hi = hi.cwiseMax(tb.max().head<2>());
  const double span = std::max((hi - lo).maxCoeff(), 1e-12);
  const double margin = 0.05 * opts.size;
  const double scale = (opts.size - 2.0 * margin) / span;
  auto px = [&](double x) { return fixed(margin + (x - lo(0)) * scale); };
  auto py = [&](double y) { return fixed(opts.size - margin - (y - lo(1)) * scale); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opts.size) + "\" height=\"" + std::to_string(opts.size) +
       "\" viewBox=\"0 0 " + std::to_string(opts.size) + " " + std::to_string(opts.size) + "\">\n";
  s += "<title>t = " + fixed(t) + "</title>\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (t == 0.0) {
    double fmax = 0.0;
    std::vector<double> fv(mesh.num_simplices());
    for (int i = 0; i < mesh.num_simplices(); ++i) {
      fv[i] = f.value(mesh.barycenter(i));
      fmax = std::max(fmax, fv[i]);
    }
    s += "<g stroke=\"#555555\" stroke-width=\"0.5\">\n";
    for (int i = 0; i < mesh.num_simplices(); ++i) {
      s += "<polygon points=\"";
      const auto& ids = mesh.simplex(i).vertex_ids;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (k) s += " ";
        s += px(mesh.vertices()(0, ids[k])) + "," + py(mesh.vertices()(1, ids[k]));
      }
      s += "\" fill=\"#3070c0\" fill-opacity=\"" + fixed(fmax > 0.0 ? 0.35 * fv[i] / fmax : 0.0) + "\"/>\n";
    }
    s += "</g>\n";
  }

  if (target.kind() == TargetDomain::Kind::Disc) {
    s += "<circle cx=\"" + px(target.center()(0)) + "\" cy=\"" + py(target.center()(1)) + "\" r=\"" + fixed(target.radius() * scale) +
         "\" fill=\"none\" stroke=\"#c03030\" stroke-width=\"1.5\"/>\n";
  } else {
    s += "<polygon points=\"";
    for (std::size_t k = 0; k < target.loop().size(); ++k) {
      if (k) s += " ";
      s += px(target.loop()[k](0)) + "," + py(target.loop()[k](1));
    }
    s += "\" fill=\"none\" stroke=\"#c03030\" stroke-width=\"1.5\"/>\n";
  }

  s += "<g fill=\"#202020\">\n";
  for (Eigen::Index j = 0; j < pts.cols(); ++j)
    s += "<circle cx=\"" + px(pts(0, j)) + "\" cy=\"" + py(pts(1, j)) + "\" r=\"" + fixed(opts.point_radius) + "\"/>\n";
  s += "</g>\n</svg>\n";
  return s;
}

}  // namespace dmaop
