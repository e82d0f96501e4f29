#include "dmaop/epigraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmaop/errors.hpp"
#include "dmaop/parallel.hpp"

namespace dmaop {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

EpigraphProgram::EpigraphProgram(const ProblemInstance& instance)
    : dim_(instance.mesh.dim()),
      n_vertices_(instance.mesh.num_vertices()),
      n_simplices_(instance.mesh.num_simplices()),
      variant_(instance.variant),
      x_(instance.mesh.vertices()),
      target_(instance.target),
      g_(instance.g) {
  const Mesh& mesh = instance.mesh;
  if (target_.dim() != dim_) throw InputError("target dimension does not match the mesh");
  if (target_.kind() == TargetDomain::Kind::Polygon && dim_ != 2) throw InputError("polygon targets require a 2-D mesh");
  ids_.resize(n_simplices_);
  c_.resize(n_simplices_);
  volumes_.resize(n_simplices_);
  log_f_.resize(n_simplices_);
  Eigen::MatrixXd d(dim_, dim_ + 1);
  d.col(0).setConstant(-1.0);
  d.rightCols(dim_).setIdentity();
  for (int i = 0; i < n_simplices_; ++i) {
    ids_[i] = mesh.simplex(i).vertex_ids;
    c_[i] = mesh.edge_matrix_inverse(i) * d;
    volumes_[i] = mesh.volume(i);
    log_f_[i] = instance.f.log_value(mesh.barycenter(i));
  }
  counts_.slacks = n_simplices_;
  counts_.epigraph = n_simplices_;
  counts_.slack_bounds = n_simplices_;
  counts_.hyperplane = n_vertices_ * (n_vertices_ - 1);
  counts_.target = n_vertices_;
  counts_.target_halfspaces = target_.kind() == TargetDomain::Kind::Disc ? n_vertices_ : n_vertices_ * static_cast<int>(target_.offsets().size());
  counts_.psd = n_simplices_;
  counts_.barrier_parameter = static_cast<double>(counts_.epigraph) + counts_.slack_bounds + static_cast<double>(counts_.hyperplane) +
                              counts_.target_halfspaces + static_cast<double>(dim_) * counts_.psd;
}

Eigen::VectorXd EpigraphProgram::pack(const DecisionVector& dv, const Eigen::VectorXd& slacks) const {
  Eigen::VectorXd z(num_variables());
  z.head(n_vertices_) = dv.psi;
  for (int j = 0; j < n_vertices_; ++j)
    for (int d = 0; d < dim_; ++d) z(eta_index(j, d)) = dv.eta(d, j);
  z.tail(n_simplices_) = slacks;
  return z;
}

Eigen::MatrixXd EpigraphProgram::eta_of(const Eigen::VectorXd& z) const {
  return Eigen::Map<const Eigen::MatrixXd>(z.data() + n_vertices_, dim_, n_vertices_);
}

DecisionVector EpigraphProgram::unpack(const Eigen::VectorXd& z) const {
  DecisionVector dv;
  dv.psi = z.head(n_vertices_);
  dv.eta = eta_of(z);
  return dv;
}

EpigraphProgram::LocalTerms EpigraphProgram::local_terms(int i, const Eigen::MatrixXd& eta, bool derivatives) const {
  const int n = dim_;
  const int k = (n + 1) * n;
  const auto& ids = ids_[i];
  const Eigen::MatrixXd& c = c_[i];
  Eigen::MatrixXd e(n + 1, n);
  Point ebar = Point::Zero(n);
  for (int r = 0; r <= n; ++r) {
    e.row(r) = eta.col(ids[r]).transpose();
    ebar += eta.col(ids[r]);
  }
  ebar /= static_cast<double>(n + 1);
  const Eigen::MatrixXd jac = c * e;
  const Eigen::MatrixXd h = 0.5 * (jac + jac.transpose());

  LocalTerms lt;
  if (!(small_min_eigenvalue(h) > 0.0)) return lt;
  const double det = small_det(h);
  if (!(det > 0.0)) return lt;
  lt.valid = true;
  lt.logdet = std::log(det);
  const double lg = g_.log_value(ebar);
  double root = 0.0, ratio_root = 0.0;
  if (variant_ == Variant::LDMAOP) {
    lt.p = -lt.logdet - lg + log_f_[i];
  } else {
    root = std::exp(lt.logdet / n);
    ratio_root = std::exp((log_f_[i] - lg) / n);
    lt.p = -root + ratio_root;
  }
  if (!derivatives) return lt;

  const Eigen::MatrixXd w = h.inverse();
  const Eigen::MatrixXd wc = w * c;
  lt.grad_logdet.resize(k);
  std::vector<Eigen::MatrixXd> m(k);
  for (int r = 0; r <= n; ++r) {
    for (int d = 0; d < n; ++d) {
      const int a = r * n + d;
      lt.grad_logdet(a) = wc(d, r);
      // W L_a with L_a = sym(c_r e_d^T)
      Eigen::MatrixXd ma = 0.5 * w.col(d) * c.col(r).transpose();
      ma.col(d) += 0.5 * wc.col(r);
      m[a] = std::move(ma);
    }
  }
  lt.hess_logdet.resize(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b <= a; ++b) {
      const double v = -(m[a].cwiseProduct(m[b].transpose())).sum();
      lt.hess_logdet(a, b) = v;
      lt.hess_logdet(b, a) = v;
    }

  Eigen::VectorXd grad_lg = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd hess_lg = Eigen::MatrixXd::Zero(k, k);
  if (!g_.is_uniform()) {
    const Eigen::VectorXd gl = g_.grad_log(ebar) / (n + 1.0);
    const Eigen::MatrixXd hl = g_.hess_log(ebar) / ((n + 1.0) * (n + 1.0));
    for (int r = 0; r <= n; ++r) {
      grad_lg.segment(r * n, n) = gl;
      for (int s = 0; s <= n; ++s) hess_lg.block(r * n, s * n, n, n) = hl;
    }
  }

  if (variant_ == Variant::LDMAOP) {
    lt.grad_p = -lt.grad_logdet - grad_lg;
    lt.hess_p = -lt.hess_logdet - hess_lg;
  } else {
    const Eigen::VectorXd grad_root = (root / n) * lt.grad_logdet;
    const Eigen::MatrixXd hess_root = (root / (n * n)) * lt.grad_logdet * lt.grad_logdet.transpose() + (root / n) * lt.hess_logdet;
    const Eigen::VectorXd grad_ratio = (-ratio_root / n) * grad_lg;
    const Eigen::MatrixXd hess_ratio = (ratio_root / (n * n)) * grad_lg * grad_lg.transpose() - (ratio_root / n) * hess_lg;
    lt.grad_p = -grad_root + grad_ratio;
    lt.hess_p = -hess_root + hess_ratio;
  }
  return lt;
}

double EpigraphProgram::penalty_argument(int i, const Eigen::MatrixXd& eta) const {
  const LocalTerms lt = local_terms(i, eta, false);
  if (!lt.valid) throw DomainError(i, "discrete Jacobian is not positive definite");
  return lt.p;
}

double EpigraphProgram::target_slack_min(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (target_.kind() == TargetDomain::Kind::Disc) return target_.radius() * target_.radius() - (y - target_.center()).squaredNorm();
  return (target_.offsets() - target_.normals() * y).minCoeff();
}

bool EpigraphProgram::strictly_feasible(const Eigen::VectorXd& z) const { return std::isfinite(merit(z, 1.0)); }

double EpigraphProgram::merit(const Eigen::VectorXd& z, double tau) const {
  const Eigen::MatrixXd eta = eta_of(z);
  // simplices
  std::vector<double> simplex_terms(n_simplices_);
  bool ok = true;
  for (int i = 0; i < n_simplices_; ++i) {
    const double t = z(slack_index(i));
    const LocalTerms lt = local_terms(i, eta, false);
    if (!lt.valid || !(t > 0.0) || !(t - lt.p > 0.0)) {
      ok = false;
      break;
    }
    simplex_terms[i] = tau * volumes_[i] * t - std::log(t - lt.p) - std::log(t) - lt.logdet;
  }
  if (!ok) return kInf;
  // targets
  std::vector<double> target_terms(n_vertices_);
  for (int j = 0; j < n_vertices_; ++j) {
    const Eigen::VectorXd y = eta.col(j);
    if (target_.kind() == TargetDomain::Kind::Disc) {
      const double s = target_.radius() * target_.radius() - (y - target_.center()).squaredNorm();
      if (!(s > 0.0)) return kInf;
      target_terms[j] = -std::log(s);
    } else {
      const Eigen::VectorXd s = target_.offsets() - target_.normals() * y;
      if (!(s.minCoeff() > 0.0)) return kInf;
      target_terms[j] = -s.array().log().sum();
    }
  }
  // hyperplanes, one partial sum per row
  std::vector<double> rows(n_vertices_, 0.0);
  std::vector<char> row_ok(n_vertices_, 1);
  const Eigen::VectorXd psi = z.head(n_vertices_);
  parallel_for(static_cast<std::size_t>(n_vertices_), [&](std::size_t begin, std::size_t end) {
    for (auto i = static_cast<int>(begin); i < static_cast<int>(end); ++i) {
      const double base = psi(i) - eta.col(i).dot(x_.col(i));
      double acc = 0.0;
      for (int j = 0; j < n_vertices_; ++j) {
        if (j == i) continue;
        const double s = psi(j) - base - eta.col(i).dot(x_.col(j));
        if (!(s > 0.0)) {
          row_ok[i] = 0;
          break;
        }
        acc -= std::log(s);
      }
      rows[i] = acc;
    }
  });
  if (std::find(row_ok.begin(), row_ok.end(), 0) != row_ok.end()) return kInf;
  return pairwise_sum(simplex_terms) + pairwise_sum(target_terms) + pairwise_sum(rows);
}

void EpigraphProgram::hyperplane_terms(const Eigen::VectorXd& z, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
  const int nv = n_vertices_;
  const int n = dim_;
  const Eigen::MatrixXd eta = eta_of(z);
  const Eigen::VectorXd psi = z.head(nv);
  Eigen::MatrixXd inv_s = Eigen::MatrixXd::Zero(nv, nv);  // 1 / slack(i, j)
  parallel_for(static_cast<std::size_t>(nv), [&](std::size_t begin, std::size_t end) {
    for (auto i = static_cast<int>(begin); i < static_cast<int>(end); ++i) {
      const double base = psi(i) - eta.col(i).dot(x_.col(i));
      for (int j = 0; j < nv; ++j)
        if (j != i) inv_s(i, j) = 1.0 / (psi(j) - base - eta.col(i).dot(x_.col(j)));
    }
  });
  parallel_for(static_cast<std::size_t>(nv), [&](std::size_t begin, std::size_t end) {
    for (auto r = static_cast<int>(begin); r < static_cast<int>(end); ++r) {
      const Eigen::VectorXd xr = x_.col(r);
      if (grad) {
        double gp = 0.0;
        Eigen::VectorXd ge = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < nv; ++j) {
          if (j == r) continue;
          gp += inv_s(r, j) - inv_s(j, r);
          ge += inv_s(r, j) * (x_.col(j) - xr);
        }
        (*grad)(psi_index(r)) += gp;
        grad->segment(eta_index(r, 0), n) += ge;
      }
      if (hess) {
        double diag = 0.0;
        Eigen::VectorXd psi_eta_own = Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd eta_eta = Eigen::MatrixXd::Zero(n, n);
        for (int j = 0; j < nv; ++j) {
          if (j == r) continue;
          const double w_rj = inv_s(r, j) * inv_s(r, j);
          const double w_jr = inv_s(j, r) * inv_s(j, r);
          diag += w_rj + w_jr;
          (*hess)(psi_index(r), psi_index(j)) -= w_rj + w_jr;
          const Eigen::VectorXd d_rj = x_.col(j) - xr;
          psi_eta_own += w_rj * d_rj;
          eta_eta += w_rj * d_rj * d_rj.transpose();
          // psi_r against eta_j (pair (j, r)): -W_jr (x_r - x_j)
          hess->block(psi_index(r), eta_index(j, 0), 1, n) -= (w_jr * (xr - x_.col(j))).transpose();
          // eta_r against psi_j (pair (r, j)): -W_rj d_rj
          hess->block(eta_index(r, 0), psi_index(j), n, 1) -= w_rj * d_rj;
        }
        (*hess)(psi_index(r), psi_index(r)) += diag;
        hess->block(psi_index(r), eta_index(r, 0), 1, n) += psi_eta_own.transpose();
        hess->block(eta_index(r, 0), psi_index(r), n, 1) += psi_eta_own;
        hess->block(eta_index(r, 0), eta_index(r, 0), n, n) += eta_eta;
      }
    }
  });
}

void EpigraphProgram::target_terms(const Eigen::VectorXd& z, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
  const int n = dim_;
  for (int j = 0; j < n_vertices_; ++j) {
    const Eigen::VectorXd y = z.segment(eta_index(j, 0), n);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    if (target_.kind() == TargetDomain::Kind::Disc) {
      const Eigen::VectorXd u = y - target_.center();
      const double s = target_.radius() * target_.radius() - u.squaredNorm();
      g = 2.0 * u / s;
      h = (2.0 / s) * Eigen::MatrixXd::Identity(n, n) + (4.0 / (s * s)) * u * u.transpose();
    } else {
      const Eigen::VectorXd s = target_.offsets() - target_.normals() * y;
      for (Eigen::Index m = 0; m < s.size(); ++m) {
        const Eigen::VectorXd a = target_.normals().row(m).transpose();
        g += a / s(m);
        h += a * a.transpose() / (s(m) * s(m));
      }
    }
    if (grad) grad->segment(eta_index(j, 0), n) += g;
    if (hess) hess->block(eta_index(j, 0), eta_index(j, 0), n, n) += h;
  }
}

Eigen::VectorXd EpigraphProgram::merit_gradient(const Eigen::VectorXd& z, double tau) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(num_variables());
  hyperplane_terms(z, &grad, nullptr);
  target_terms(z, &grad, nullptr);
  const Eigen::MatrixXd eta = eta_of(z);
  const int n = dim_;
  for (int i = 0; i < n_simplices_; ++i) {
    const LocalTerms lt = local_terms(i, eta, true);
    if (!lt.valid) throw DomainError(i, "merit gradient requested outside the barrier domain");
    const double t = z(slack_index(i));
    const double s = t - lt.p;
    grad(slack_index(i)) += tau * volumes_[i] - 1.0 / s - 1.0 / t;
    const Eigen::VectorXd ge = lt.grad_p / s - lt.grad_logdet;
    for (int r = 0; r <= n; ++r) grad.segment(eta_index(ids_[i][r], 0), n) += ge.segment(r * n, n);
  }
  return grad;
}

Eigen::MatrixXd EpigraphProgram::merit_hessian(const Eigen::VectorXd& z, double /*tau*/) const {
  const int nz = num_variables();
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(nz, nz);
  hyperplane_terms(z, nullptr, &hess);
  target_terms(z, nullptr, &hess);
  const Eigen::MatrixXd eta = eta_of(z);
  const int n = dim_;
  for (int i = 0; i < n_simplices_; ++i) {
    const LocalTerms lt = local_terms(i, eta, true);
    if (!lt.valid) throw DomainError(i, "merit Hessian requested outside the barrier domain");
    const double t = z(slack_index(i));
    const double s = t - lt.p;
    const int ti = slack_index(i);
    hess(ti, ti) += 1.0 / (s * s) + 1.0 / (t * t);
    const Eigen::VectorXd cross = -lt.grad_p / (s * s);
    const Eigen::MatrixXd local = lt.grad_p * lt.grad_p.transpose() / (s * s) + lt.hess_p / s - lt.hess_logdet;
    for (int r = 0; r <= n; ++r) {
      const int ir = eta_index(ids_[i][r], 0);
      hess.block(ir, ti, n, 1) += cross.segment(r * n, n);
      hess.block(ti, ir, 1, n) += cross.segment(r * n, n).transpose();
      for (int q = 0; q <= n; ++q) hess.block(ir, eta_index(ids_[i][q], 0), n, n) += local.block(r * n, q * n, n, n);
    }
  }
  return hess;
}

EpigraphProgram::NewtonStep EpigraphProgram::newton_step(const Eigen::VectorXd& z, double tau) const {
  const int nv = n_vertices_;
  const int n = dim_;
  const int ny = nv * (1 + n);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(num_variables());
  Eigen::MatrixXd hy = Eigen::MatrixXd::Zero(ny, ny);
  hyperplane_terms(z, &grad, &hy);
  target_terms(z, &grad, &hy);

  // psi enters only through differences: fix the gauge with a rank-one term along 1
  const double gauge = hy.topLeftCorner(nv, nv).trace() / (static_cast<double>(nv) * nv);
  hy.topLeftCorner(nv, nv).array() += gauge;

  const Eigen::MatrixXd eta = eta_of(z);
  std::vector<LocalTerms> terms(n_simplices_);
  parallel_for(static_cast<std::size_t>(n_simplices_), [&](std::size_t begin, std::size_t end) {
    for (auto i = static_cast<int>(begin); i < static_cast<int>(end); ++i) terms[i] = local_terms(i, eta, true);
  });

  Eigen::VectorXd reduced = grad.head(ny);
  std::vector<Eigen::VectorXd> cross(n_simplices_);
  std::vector<double> curv(n_simplices_), gt(n_simplices_);
  for (int i = 0; i < n_simplices_; ++i) {
    const LocalTerms& lt = terms[i];
    if (!lt.valid) throw DomainError(i, "Newton step requested outside the barrier domain");
    const double t = z(slack_index(i));
    const double s = t - lt.p;
    gt[i] = tau * volumes_[i] - 1.0 / s - 1.0 / t;
    curv[i] = 1.0 / (s * s) + 1.0 / (t * t);
    cross[i] = -lt.grad_p / (s * s);
    const Eigen::VectorXd ge = lt.grad_p / s - lt.grad_logdet;
    const Eigen::MatrixXd local = lt.grad_p * lt.grad_p.transpose() / (s * s) + lt.hess_p / s - lt.hess_logdet -
                                  cross[i] * cross[i].transpose() / curv[i];
    const Eigen::VectorXd local_g = ge - cross[i] * (gt[i] / curv[i]);
    grad(slack_index(i)) = gt[i];
    for (int r = 0; r <= n; ++r) {
      const int ir = eta_index(ids_[i][r], 0);
      grad.segment(ir, n) += ge.segment(r * n, n);
      reduced.segment(ir, n) += local_g.segment(r * n, n);
      for (int q = 0; q <= n; ++q) hy.block(ir, eta_index(ids_[i][q], 0), n, n) += local.block(r * n, q * n, n, n);
    }
  }

  NewtonStep step;
  Eigen::LLT<Eigen::MatrixXd> llt(hy);
  if (llt.info() != Eigen::Success) {
    const double scale = hy.diagonal().cwiseAbs().mean();
    for (double reg = 1e-12; reg < 1e6; reg *= 100.0) {
      Eigen::MatrixXd shifted = hy;
      shifted.diagonal().array() += reg * scale;
      llt.compute(shifted);
      if (llt.info() == Eigen::Success) {
        step.regularization = reg * scale;
        break;
      }
    }
    if (llt.info() != Eigen::Success) throw std::runtime_error("Newton system could not be factorised");
  }
  const Eigen::VectorXd dy = llt.solve(-reduced);
  step.dz.resize(num_variables());
  step.dz.head(ny) = dy;
  for (int i = 0; i < n_simplices_; ++i) {
    double cd = 0.0;
    for (int r = 0; r <= n; ++r) cd += cross[i].segment(r * n, n).dot(dy.segment(eta_index(ids_[i][r], 0), n));
    step.dz(slack_index(i)) = (-gt[i] - cd) / curv[i];
  }
  step.decrement_sq = -grad.dot(step.dz);
  return step;
}

double EpigraphProgram::centered_slack(int i, double p, double tau) const {
  const double a = tau * volumes_[i];
  const double b = a * p + 2.0;
  const double disc = std::sqrt(b * b - 4.0 * a * p);
  // larger root of a t^2 - b t + p = 0, in the cancellation-free form
  if (b >= 0.0) return (b + disc) / (2.0 * a);
  return 2.0 * p / (b - disc);
}

void EpigraphProgram::recenter_slacks(Eigen::VectorXd& z, double tau) const {
  const Eigen::MatrixXd eta = eta_of(z);
  for (int i = 0; i < n_simplices_; ++i) {
    const LocalTerms lt = local_terms(i, eta, false);
    if (!lt.valid) throw DomainError(i, "cannot centre slack outside the barrier domain");
    z(slack_index(i)) = centered_slack(i, lt.p, tau);
  }
}

double EpigraphProgram::max_linear_step(const Eigen::VectorXd& z, const Eigen::VectorXd& dz) const {
  const int nv = n_vertices_;
  const Eigen::MatrixXd eta = eta_of(z);
  const Eigen::MatrixXd deta = eta_of(dz);
  std::vector<double> row_alpha(nv, kInf);
  parallel_for(static_cast<std::size_t>(nv), [&](std::size_t begin, std::size_t end) {
    for (auto i = static_cast<int>(begin); i < static_cast<int>(end); ++i) {
      const double base = z(i) - eta.col(i).dot(x_.col(i));
      const double dbase = dz(i) - deta.col(i).dot(x_.col(i));
      double alpha = kInf;
      for (int j = 0; j < nv; ++j) {
        if (j == i) continue;
        const double ds = dz(j) - dbase - deta.col(i).dot(x_.col(j));
        if (ds < 0.0) {
          const double s = z(j) - base - eta.col(i).dot(x_.col(j));
          alpha = std::min(alpha, -s / ds);
        }
      }
      row_alpha[i] = alpha;
    }
  });
  double alpha = *std::min_element(row_alpha.begin(), row_alpha.end());
  if (target_.kind() == TargetDomain::Kind::Polygon) {
    for (int j = 0; j < nv; ++j) {
      const Eigen::VectorXd s = target_.offsets() - target_.normals() * eta.col(j);
      const Eigen::VectorXd ds = -target_.normals() * deta.col(j);
      for (Eigen::Index m = 0; m < s.size(); ++m)
        if (ds(m) < 0.0) alpha = std::min(alpha, -s(m) / ds(m));
    }
  }
  for (int i = 0; i < n_simplices_; ++i) {
    const double dt = dz(slack_index(i));
    if (dt < 0.0) alpha = std::min(alpha, -z(slack_index(i)) / dt);
  }
  return alpha;
}

}  // namespace dmaop
