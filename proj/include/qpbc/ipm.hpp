#pragma once

// Dense primal-dual interior-point backend.
//
// One engine solves the homogeneous self-dual embedding of
//
//   min c'x   s.t.  A x = b,   G x + s = h,   s in K,
//
// where K is a product of nonnegative-orthant and PSD blocks (svec
// coordinates, sqrt(2) off-diagonal scaling).  LPs and SDPs are fed to the
// engine directly; convex QPs get a specialized Mehrotra path on the KKT
// system so the quadratic objective needs no lifting.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "qpbc/conic.hpp"
#include "qpbc/tolerances.hpp"

namespace qpbc {

struct SolverOptions {
  int max_iters = 200;
  double feas_tol = tol::feas;
  double gap_tol = tol::gap_rel;
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct EngineCone {
  enum class Kind { nonneg, psd };
  Kind kind;
  int dim;     // rows in the cone (psd: order*(order+1)/2)
  int order;   // psd order
  int offset;  // first row index
};

struct EngineProblem {
  VectorXd c;
  MatrixXd A;  // p x N equality map (may have 0 rows)
  VectorXd b;
  MatrixXd G;  // r x N cone map
  VectorXd h;
  std::vector<EngineCone> cones;

  int nvars() const { return static_cast<int>(c.size()); }
  int neq() const { return static_cast<int>(b.size()); }
  int ncone() const { return static_cast<int>(h.size()); }
  int barrier_degree() const {
    int nu = 0;
    for (const auto& k : cones) nu += (k.kind == EngineCone::Kind::nonneg) ? k.dim : k.order;
    return nu;
  }
};

struct EngineResult {
  SolveStatus status = SolveStatus::numerical_failure;
  VectorXd x, y, z, s;
  double pobj = 0.0;
  double gap = 0.0;
  int iterations = 0;
  const char* note = "";  // failure site, for diagnostics
};

// Per-iteration Nesterov-Todd scaling for one cone block.
struct BlockScaling {
  EngineCone cone;
  // nonneg
  VectorXd w, w2, winv2, lam;
  // psd:  W u = R' U R,  Wm = R R'
  MatrixXd R, Rinv, Wm, WmInv;
  VectorXd sigma;
};

class NtScaling {
 public:
  bool compute(const std::vector<EngineCone>& cones, const VectorXd& s, const VectorXd& z) {
    blocks_.clear();
    blocks_.reserve(cones.size());
    total_ = 0;
    for (const auto& k : cones) {
      BlockScaling bs;
      bs.cone = k;
      total_ += k.dim;
      if (k.kind == EngineCone::Kind::nonneg) {
        VectorXd sv = s.segment(k.offset, k.dim);
        VectorXd zv = z.segment(k.offset, k.dim);
        if ((sv.array() <= 0).any() || (zv.array() <= 0).any()) return false;
        bs.w = (sv.array() / zv.array()).sqrt().matrix();
        bs.w2 = bs.w.array().square().matrix();
        bs.winv2 = bs.w2.cwiseInverse();
        bs.lam = (sv.array() * zv.array()).sqrt().matrix();
      } else {
        MatrixXd S = smat(s.segment(k.offset, k.dim), k.order);
        MatrixXd Z = smat(z.segment(k.offset, k.dim), k.order);
        Eigen::LLT<MatrixXd> ls(S), lz(Z);
        if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
        MatrixXd Ls = ls.matrixL();
        MatrixXd Lz = lz.matrixL();
        Eigen::JacobiSVD<MatrixXd> svd(MatrixXd(Lz.transpose() * Ls),
                                       Eigen::ComputeFullU | Eigen::ComputeFullV);
        VectorXd sig = svd.singularValues();
        if ((sig.array() <= 0).any()) return false;
        VectorXd isqrt = sig.array().sqrt().inverse().matrix();
        bs.R = Ls * svd.matrixV() * isqrt.asDiagonal();
        bs.Rinv = isqrt.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
        bs.Wm = bs.R * bs.R.transpose();
        bs.WmInv = bs.Rinv.transpose() * bs.Rinv;
        bs.sigma = sig;
      }
      blocks_.push_back(std::move(bs));
    }
    return true;
  }

  const std::vector<BlockScaling>& blocks() const { return blocks_; }
  int total() const { return total_; }

  VectorXd lambda() const {
    VectorXd out(total_);
    for (const auto& b : blocks_) {
      if (b.cone.kind == EngineCone::Kind::nonneg)
        out.segment(b.cone.offset, b.cone.dim) = b.lam;
      else
        out.segment(b.cone.offset, b.cone.dim) = svec(MatrixXd(b.sigma.asDiagonal()));
    }
    return out;
  }

  VectorXd apply_W(const VectorXd& v) const {
    return apply(v, [](const BlockScaling& b, const MatrixXd& V) -> MatrixXd {
      return b.R.transpose() * V * b.R;
    });
  }
  VectorXd apply_WT(const VectorXd& v) const {
    return apply(v, [](const BlockScaling& b, const MatrixXd& V) -> MatrixXd {
      return b.R * V * b.R.transpose();
    });
  }
  VectorXd apply_WtW(const VectorXd& v) const {
    return apply(
        v, [](const BlockScaling& b, const MatrixXd& V) -> MatrixXd { return b.Wm * V * b.Wm; },
        /*nonneg_sq=*/1);
  }
  VectorXd apply_WtW_inv(const VectorXd& v) const {
    return apply(
        v,
        [](const BlockScaling& b, const MatrixXd& V) -> MatrixXd { return b.WmInv * V * b.WmInv; },
        /*nonneg_sq=*/-1);
  }

  // Solve lambda o u = gamma in the scaled algebra.
  VectorXd comp_div(const VectorXd& gamma) const {
    VectorXd out(total_);
    for (const auto& b : blocks_) {
      auto seg = gamma.segment(b.cone.offset, b.cone.dim);
      if (b.cone.kind == EngineCone::Kind::nonneg) {
        out.segment(b.cone.offset, b.cone.dim) = seg.cwiseQuotient(b.lam);
      } else {
        const int s = b.cone.order;
        MatrixXd Gm = smat(seg, s);
        MatrixXd U(s, s);
        for (int i = 0; i < s; ++i)
          for (int j = 0; j < s; ++j) U(i, j) = 2.0 * Gm(i, j) / (b.sigma[i] + b.sigma[j]);
        out.segment(b.cone.offset, b.cone.dim) = svec(U);
      }
    }
    return out;
  }

  // Jordan product of two vectors in scaled coordinates.
  VectorXd comp_prod(const VectorXd& a, const VectorXd& c) const {
    VectorXd out(total_);
    for (const auto& b : blocks_) {
      if (b.cone.kind == EngineCone::Kind::nonneg) {
        out.segment(b.cone.offset, b.cone.dim) =
            a.segment(b.cone.offset, b.cone.dim)
                .cwiseProduct(c.segment(b.cone.offset, b.cone.dim));
      } else {
        MatrixXd A = smat(a.segment(b.cone.offset, b.cone.dim), b.cone.order);
        MatrixXd C = smat(c.segment(b.cone.offset, b.cone.dim), b.cone.order);
        out.segment(b.cone.offset, b.cone.dim) = svec(MatrixXd(0.5 * (A * C + C * A)));
      }
    }
    return out;
  }

  // Largest alpha keeping lambda + alpha*dir in the cone.
  double max_step(const VectorXd& dir) const {
    double alpha = kInf;
    for (const auto& b : blocks_) {
      if (b.cone.kind == EngineCone::Kind::nonneg) {
        for (int i = 0; i < b.cone.dim; ++i) {
          const double d = dir[b.cone.offset + i];
          if (d < 0) alpha = std::min(alpha, -b.lam[i] / d);
        }
      } else {
        MatrixXd D = smat(dir.segment(b.cone.offset, b.cone.dim), b.cone.order);
        VectorXd is = b.sigma.array().sqrt().inverse().matrix();
        MatrixXd M = is.asDiagonal() * D * is.asDiagonal();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
        const double emin = es.eigenvalues().minCoeff();
        if (emin < 0) alpha = std::min(alpha, -1.0 / emin);
      }
    }
    return alpha;
  }

 private:
  template <class PsdOp>
  VectorXd apply(const VectorXd& v, PsdOp&& op, int nonneg_sq = 0) const {
    VectorXd out(total_);
    for (const auto& b : blocks_) {
      auto seg = v.segment(b.cone.offset, b.cone.dim);
      if (b.cone.kind == EngineCone::Kind::nonneg) {
        if (nonneg_sq > 0)
          out.segment(b.cone.offset, b.cone.dim) = b.w2.cwiseProduct(seg);
        else if (nonneg_sq < 0)
          out.segment(b.cone.offset, b.cone.dim) = b.winv2.cwiseProduct(seg);
        else
          out.segment(b.cone.offset, b.cone.dim) = b.w.cwiseProduct(seg);
      } else {
        out.segment(b.cone.offset, b.cone.dim) = svec(MatrixXd(op(b, smat(seg, b.cone.order))));
      }
    }
    return out;
  }

  std::vector<BlockScaling> blocks_;
  int total_ = 0;
};

inline VectorXd cone_identity(const std::vector<EngineCone>& cones, int total) {
  VectorXd e = VectorXd::Zero(total);
  for (const auto& k : cones) {
    if (k.kind == EngineCone::Kind::nonneg)
      e.segment(k.offset, k.dim).setOnes();
    else
      e.segment(k.offset, k.dim) = svec(MatrixXd::Identity(k.order, k.order));
  }
  return e;
}

inline double cone_min_eig(const std::vector<EngineCone>& cones, const VectorXd& v) {
  double m = kInf;
  for (const auto& k : cones) {
    if (k.kind == EngineCone::Kind::nonneg) {
      m = std::min(m, v.segment(k.offset, k.dim).minCoeff());
    } else {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(v.segment(k.offset, k.dim), k.order),
                                                 Eigen::EigenvaluesOnly);
      m = std::min(m, es.eigenvalues().minCoeff());
    }
  }
  return m;
}

class HsdeSolver {
 public:
  HsdeSolver(const EngineProblem& p, const SolverOptions& opts) : p_(p), opts_(opts) {}

  EngineResult solve() {
    const int N = p_.nvars();
    const int pe = p_.neq();
    const int r = p_.ncone();
    EngineResult res;
    if (r == 0 || N == 0) return res;

    const double nb = 1.0 + inf_norm(p_.b);
    const double nh = 1.0 + inf_norm(p_.h);
    const double nc = 1.0 + inf_norm(p_.c);
    const int nu = p_.barrier_degree();
    const VectorXd cone_e = cone_identity(p_.cones, r);

    VectorXd x = VectorXd::Zero(N), y = VectorXd::Zero(pe);
    VectorXd s = cone_e, z = cone_e;
    double tau = 1.0, kappa = 1.0;

    // Initial point: identity-scaling least-squares solves, shifted into
    // the interior of the cone.
    if (!factor(nullptr)) return res;
    {
      VectorXd dx, dy, dz;
      solve3(VectorXd::Zero(N), p_.b, p_.h, dx, dy, dz, nullptr);
      x = dx;
      s = p_.h - p_.G * x;
      double me = cone_min_eig(p_.cones, s);
      if (me <= 1e-8) s += (1.0 - me) * cone_e;

      solve3(-p_.c, VectorXd::Zero(pe), VectorXd::Zero(r), dx, dy, dz, nullptr);
      y = dy;
      z = dz;
      me = cone_min_eig(p_.cones, z);
      if (me <= 1e-8) z += (1.0 - me) * cone_e;
    }

    for (int it = 0; it < opts_.max_iters; ++it) {
      res.iterations = it + 1;
      VectorXd res_x = at_y(y) + p_.G.transpose() * z + p_.c * tau;
      VectorXd res_y = p_.A * x - p_.b * tau;
      VectorXd res_z = s + p_.G * x - p_.h * tau;
      const double res_t = kappa + p_.c.dot(x) + dot_b(y) + p_.h.dot(z);

      const double stz = s.dot(z);
      const double mu = (stz + tau * kappa) / (nu + 1);

      const double pobj = p_.c.dot(x) / tau;
      const double dobj = -(dot_b(y) + p_.h.dot(z)) / tau;
      const double gap_abs = stz / (tau * tau);
      const double pres =
          std::max(pe > 0 ? inf_norm(res_y) / nb : 0.0, inf_norm(res_z) / nh) / tau;
      const double dres = inf_norm(res_x) / nc / tau;
#ifdef QPBC_IPM_TRACE
      std::fprintf(stderr,
                   "it %2d mu %.2e gap %.2e pres %.2e dres %.2e tau %.2e kappa %.2e pobj %.6e\n",
                   it, mu, gap_abs, pres, dres, tau, kappa, pobj);
#endif

      if (pres <= opts_.feas_tol && dres <= opts_.feas_tol &&
          (gap_abs <= opts_.gap_tol * (1.0 + std::abs(pobj)) ||
           std::abs(pobj - dobj) <= opts_.gap_tol * (1.0 + std::abs(pobj)))) {
        res.status = SolveStatus::optimal;
        res.x = x / tau;
        res.y = y / tau;
        res.z = z / tau;
        res.s = s / tau;
        res.pobj = pobj;
        res.gap = gap_abs;
        return res;
      }

      // Certificates of primal infeasibility / unboundedness.
      const double by_hz = dot_b(y) + p_.h.dot(z);
      if (by_hz < -1e-10) {
        VectorXd yc = y / (-by_hz), zc = z / (-by_hz);
        const double viol = inf_norm(VectorXd(at_y(yc) + p_.G.transpose() * zc));
        const double sc = 1.0 + std::max(inf_norm(yc), inf_norm(zc));
        if (viol <= 1e-8 * sc) {
          res.status = SolveStatus::infeasible;
          res.y = yc;
          res.z = zc;
          return res;
        }
      }
      const double ctx = p_.c.dot(x);
      if (ctx < -1e-10) {
        VectorXd xc = x / (-ctx);
        VectorXd sc_v = s / (-ctx);
        const double viol = std::max(pe > 0 ? inf_norm(VectorXd(p_.A * xc)) : 0.0,
                                     inf_norm(VectorXd(p_.G * xc + sc_v)));
        const double sc = 1.0 + std::max(inf_norm(xc), inf_norm(sc_v));
        if (viol <= 1e-8 * sc) {
          res.status = SolveStatus::unbounded;
          res.x = xc;
          res.s = sc_v;
          return res;
        }
      }

      if (!scal_.compute(p_.cones, s, z)) {
        res.note = "scaling";
        return res;
      }
      if (!factor(&scal_)) {
        res.note = "factor";
        return res;
      }
      VectorXd lam = scal_.lambda();
      VectorXd lam_sq = scal_.comp_prod(lam, lam);

      VectorXd x1, y1, z1;
      solve3(-p_.c, p_.b, p_.h, x1, y1, z1, &scal_);
      const double cbh1 = p_.c.dot(x1) + dot_b(y1) + p_.h.dot(z1);
      const double den = cbh1 - kappa / tau;
      if (!std::isfinite(den) || std::abs(den) < 1e-300) {
        res.note = "denominator";
        return res;
      }

      auto direction = [&](double sig, const VectorXd& gamma_s, double gamma_t, VectorXd& dx,
                           VectorXd& dy, VectorXd& dz, VectorXd& dslam, VectorXd& dzlam,
                           VectorXd& ds, double& dtau, double& dkappa) {
        const double os = 1.0 - sig;
        VectorXd dsc = scal_.comp_div(gamma_s);
        VectorXd bz = -os * res_z - scal_.apply_WT(dsc);
        VectorXd x2, y2, z2;
        solve3(-os * res_x, -os * res_y, bz, x2, y2, z2, &scal_);
        const double num =
            -os * res_t - gamma_t / tau - (p_.c.dot(x2) + dot_b(y2) + p_.h.dot(z2));
        dtau = num / den;
        dx = x2 + dtau * x1;
        dy = y2 + dtau * y1;
        dz = z2 + dtau * z1;
        dzlam = scal_.apply_W(dz);
        dslam = dsc - dzlam;
        ds = scal_.apply_WT(dslam);
        dkappa = (gamma_t - kappa * dtau) / tau;
      };

      VectorXd dxa, dya, dza, dsl_a, dzl_a, dsa;
      double dta, dka;
      direction(0.0, VectorXd(-lam_sq), -tau * kappa, dxa, dya, dza, dsl_a, dzl_a, dsa, dta, dka);

      double amax = std::min(scal_.max_step(dsl_a), scal_.max_step(dzl_a));
      if (dta < 0) amax = std::min(amax, -tau / dta);
      if (dka < 0) amax = std::min(amax, -kappa / dka);
      const double a_aff = std::min(1.0, amax);

      const double rho = ((lam + a_aff * dsl_a).dot(lam + a_aff * dzl_a) +
                          (tau + a_aff * dta) * (kappa + a_aff * dka)) /
                         (stz + tau * kappa);
      const double sigma = std::pow(std::clamp(rho, 0.0, 1.0), 3);

      VectorXd gamma_s = sigma * mu * cone_e - lam_sq - scal_.comp_prod(dsl_a, dzl_a);
      const double gamma_t = sigma * mu - tau * kappa - dta * dka;
      VectorXd dx, dy, dz, dsl, dzl, ds;
      double dt, dk;
      direction(sigma, gamma_s, gamma_t, dx, dy, dz, dsl, dzl, ds, dt, dk);

      auto step_to_boundary = [&] {
        double a = std::min(scal_.max_step(dsl), scal_.max_step(dzl));
        if (dt < 0) a = std::min(a, -tau / dt);
        if (dk < 0) a = std::min(a, -kappa / dk);
        return std::min(1.0, 0.99 * a);
      };
      double step = step_to_boundary();
      if (!std::isfinite(step) || step <= 1e-11) {
        // The corrected direction collapsed; take a plain centering step.
        const double sc = 0.9;
        direction(sc, VectorXd(sc * mu * cone_e - lam_sq), sc * mu - tau * kappa, dx, dy, dz,
                  dsl, dzl, ds, dt, dk);
        step = step_to_boundary();
        if (!std::isfinite(step) || step <= 1e-14) {
          res.note = "tiny step";
          return res;
        }
      }

      x += step * dx;
      y += step * dy;
      z += step * dz;
      s += step * ds;
      tau += step * dt;
      kappa += step * dk;
      if (!x.allFinite() || !s.allFinite() || !z.allFinite() || !std::isfinite(tau) || tau <= 0 ||
          kappa < 0) {
        res.note = "nonfinite iterate";
        return res;
      }
    }

    res.status = SolveStatus::iteration_limit;
    res.x = x / tau;
    res.y = y / tau;
    res.z = z / tau;
    res.s = s / tau;
    res.pobj = p_.c.dot(x) / tau;
    res.gap = s.dot(z) / (tau * tau);
    return res;
  }

 private:
  VectorXd at_y(const VectorXd& yv) const {
    if (p_.neq() == 0) return VectorXd::Zero(p_.nvars());
    return p_.A.transpose() * yv;
  }
  double dot_b(const VectorXd& yv) const { return p_.neq() == 0 ? 0.0 : p_.b.dot(yv); }
  static double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

  bool factor(const NtScaling* scal) {
    const int N = p_.nvars();
    const int pe = p_.neq();
    scaled_ = scal;
    MatrixXd MG(p_.ncone(), N);
    if (scal) {
      for (int j = 0; j < N; ++j) MG.col(j) = scal->apply_WtW_inv(p_.G.col(j));
    } else {
      MG = p_.G;
    }
    MatrixXd K = MatrixXd::Zero(N + pe, N + pe);
    K.topLeftCorner(N, N) = p_.G.transpose() * MG;
    if (pe > 0) {
      K.topRightCorner(N, pe) = p_.A.transpose();
      K.bottomLeftCorner(pe, N) = p_.A;
    }
    // Tiny static regularization; refinement in solve3 absorbs the bias.
    for (int i = 0; i < N; ++i) K(i, i) += 1e-12;
    for (int i = N; i < N + pe; ++i) K(i, i) -= 1e-12;
    lu_.compute(K);
    return K.allFinite();
  }

  // Solve  A'dy + G'dz = r1;  A dx = r2;  G dx - W'W dz = r3.
  void solve3(const VectorXd& r1, const VectorXd& r2, const VectorXd& r3, VectorXd& dx,
              VectorXd& dy, VectorXd& dz, const NtScaling* scal) const {
    const int N = p_.nvars();
    const int pe = p_.neq();
    auto wtw_inv = [&](const VectorXd& v) { return scal ? scal->apply_WtW_inv(v) : v; };
    auto wtw = [&](const VectorXd& v) { return scal ? scal->apply_WtW(v) : v; };

    auto raw = [&](const VectorXd& q1, const VectorXd& q2, const VectorXd& q3, VectorXd& ox,
                   VectorXd& oy, VectorXd& oz) {
      VectorXd rhs(N + pe);
      rhs.head(N) = q1 + p_.G.transpose() * wtw_inv(q3);
      if (pe > 0) rhs.tail(pe) = q2;
      VectorXd sol = lu_.solve(rhs);
      ox = sol.head(N);
      oy = pe > 0 ? VectorXd(sol.tail(pe)) : VectorXd(0);
      oz = wtw_inv(VectorXd(p_.G * ox - q3));
    };

    raw(r1, r2, r3, dx, dy, dz);
    for (int pass = 0; pass < 2; ++pass) {
      VectorXd e1 = r1 - (at_y(dy) + p_.G.transpose() * dz);
      VectorXd e2 = pe > 0 ? VectorXd(r2 - p_.A * dx) : VectorXd(0);
      VectorXd e3 = r3 - (p_.G * dx - wtw(dz));
      VectorXd cx, cy, cz;
      raw(e1, e2, e3, cx, cy, cz);
      dx += cx;
      if (pe > 0) dy += cy;
      dz += cz;
    }
  }

  const EngineProblem& p_;
  SolverOptions opts_;
  NtScaling scal_;
  Eigen::PartialPivLU<MatrixXd> lu_;
  const NtScaling* scaled_ = nullptr;
};

// Ruiz equilibration of the stacked [A; G] data.  Column scalings are free
// (the variables carry no cone); row scalings must respect the cones, so
// every PSD block shares one scale.  The objective and right-hand sides get
// one scalar each.
struct Equilibration {
  VectorXd col;      // d_c
  VectorXd row_a;    // d_r for equality rows
  VectorXd row_g;    // d_r for cone rows (constant within psd blocks)
  double sig_c = 1.0;
  double sig_b = 1.0;
};

inline Equilibration equilibrate(EngineProblem& p) {
  const int N = p.nvars();
  const int pe = p.neq();
  const int r = p.ncone();
  Equilibration eq;
  eq.col = VectorXd::Ones(N);
  eq.row_a = VectorXd::Ones(pe);
  eq.row_g = VectorXd::Ones(r);

  auto clip = [](double v) { return std::clamp(v, 1e-6, 1e6); };
  for (int pass = 0; pass < 5; ++pass) {
    for (int i = 0; i < pe; ++i) {
      const double nrm = p.A.row(i).cwiseAbs().maxCoeff();
      if (nrm > 1e-12) {
        const double s = clip(1.0 / std::sqrt(nrm));
        p.A.row(i) *= s;
        p.b[i] *= s;
        eq.row_a[i] *= s;
      }
    }
    for (const auto& k : p.cones) {
      if (k.kind == EngineCone::Kind::nonneg) {
        for (int i = k.offset; i < k.offset + k.dim; ++i) {
          const double nrm = p.G.row(i).cwiseAbs().maxCoeff();
          if (nrm > 1e-12) {
            const double s = clip(1.0 / std::sqrt(nrm));
            p.G.row(i) *= s;
            p.h[i] *= s;
            eq.row_g.segment(i, 1) *= s;
          }
        }
      } else {
        const double nrm =
            p.G.middleRows(k.offset, k.dim).cwiseAbs().maxCoeff();
        if (nrm > 1e-12) {
          const double s = clip(1.0 / std::sqrt(nrm));
          p.G.middleRows(k.offset, k.dim) *= s;
          p.h.segment(k.offset, k.dim) *= s;
          eq.row_g.segment(k.offset, k.dim) *= s;
        }
      }
    }
    for (int j = 0; j < N; ++j) {
      double nrm = p.G.col(j).cwiseAbs().maxCoeff();
      if (pe > 0) nrm = std::max(nrm, p.A.col(j).cwiseAbs().maxCoeff());
      if (nrm > 1e-12) {
        const double s = clip(1.0 / std::sqrt(nrm));
        if (pe > 0) p.A.col(j) *= s;
        p.G.col(j) *= s;
        p.c[j] *= s;
        eq.col[j] *= s;
      }
    }
  }
  const double cn = p.c.cwiseAbs().maxCoeff();
  eq.sig_c = cn > 1e-12 ? 1.0 / cn : 1.0;
  p.c *= eq.sig_c;
  double rn = p.h.cwiseAbs().maxCoeff();
  if (pe > 0) rn = std::max(rn, p.b.cwiseAbs().maxCoeff());
  eq.sig_b = rn > 1e-12 ? 1.0 / rn : 1.0;
  p.b *= eq.sig_b;
  p.h *= eq.sig_b;
  return eq;
}

inline EngineResult solve_engine(const EngineProblem& p, const SolverOptions& opts = {}) {
  EngineProblem scaled = p;
  Equilibration eq = equilibrate(scaled);
  HsdeSolver solver(scaled, opts);
  EngineResult res = solver.solve();
  const double inv_sb = 1.0 / eq.sig_b;
  const double inv_sc = 1.0 / eq.sig_c;
  if (res.x.size()) res.x = eq.col.cwiseProduct(res.x);
  if (res.s.size()) res.s = res.s.cwiseQuotient(eq.row_g);
  if (res.y.size()) res.y = eq.row_a.cwiseProduct(res.y);
  if (res.z.size()) res.z = eq.row_g.cwiseProduct(res.z);
  if (res.status == SolveStatus::optimal || res.status == SolveStatus::iteration_limit) {
    res.x *= inv_sb;
    res.s *= inv_sb;
    res.y *= inv_sc;
    res.z *= inv_sc;
    res.pobj = p.c.size() ? p.c.dot(res.x) : 0.0;
    res.gap *= inv_sb * inv_sc;
  }
  return res;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public backend interface.
// ---------------------------------------------------------------------------

class ConicBackend {
 public:
  virtual ~ConicBackend() = default;
  virtual LpSolution solve_lp(const LpProblem& lp) const = 0;
  virtual QpSolution solve_convex_qp(const QpProblem& qp) const = 0;
  virtual ConicSolution solve_sdp(const ConicProblem& p) const = 0;
};

class DenseIpmBackend final : public ConicBackend {
 public:
  explicit DenseIpmBackend(SolverOptions opts = {}) : opts_(opts) {}

  LpSolution solve_lp(const LpProblem& lp) const override {
    const int n = static_cast<int>(lp.c.size());
    const int m = static_cast<int>(lp.b.size());
    const int me = static_cast<int>(lp.f.size());
    LpSolution out;
    if (m == 0) return out;
    detail::EngineProblem ep;
    ep.c = lp.c;
    ep.G = lp.A;
    ep.h = lp.b;
    ep.A = me > 0 ? lp.E : MatrixXd(0, n);
    ep.b = me > 0 ? lp.f : VectorXd(0);
    ep.cones.push_back({detail::EngineCone::Kind::nonneg, m, 0, 0});
    auto r = detail::solve_engine(ep, opts_);
    out.status = r.status;
    out.iterations = r.iterations;
    if (r.status == SolveStatus::optimal) {
      out.x = r.x;
      out.ineq_dual = r.z;
      out.eq_dual = r.y;
      out.objective_value = r.pobj;
    } else if (r.status == SolveStatus::unbounded) {
      out.x = r.x;  // ray certificate: A x <= 0, c'x = -1
    }
    return out;
  }

  QpSolution solve_convex_qp(const QpProblem& qp) const override;

  ConicSolution solve_sdp(const ConicProblem& p) const override {
    p.validate();
    const int N = p.num_vars();
    detail::EngineProblem ep;
    ep.c = p.maximize ? VectorXd(-p.objective) : p.objective;
    ep.A = p.eq_A.rows() > 0 ? p.eq_A : MatrixXd(0, N);
    ep.b = p.eq_A.rows() > 0 ? p.eq_b : VectorXd(0);
    int cone_rows = 0;
    for (const auto& blk : p.blocks)
      if (blk.kind != ConeBlock::Kind::free) cone_rows += blk.dim;
    ep.G = MatrixXd::Zero(cone_rows, N);
    ep.h = VectorXd::Zero(cone_rows);
    int col = 0, row = 0;
    for (const auto& blk : p.blocks) {
      if (blk.kind != ConeBlock::Kind::free) {
        ep.G.block(row, col, blk.dim, blk.dim) = -MatrixXd::Identity(blk.dim, blk.dim);
        detail::EngineCone ck;
        ck.kind = blk.kind == ConeBlock::Kind::psd ? detail::EngineCone::Kind::psd
                                                   : detail::EngineCone::Kind::nonneg;
        ck.dim = blk.dim;
        ck.order = blk.order;
        ck.offset = row;
        ep.cones.push_back(ck);
        row += blk.dim;
      }
      col += blk.dim;
    }
    ConicSolution out;
    auto r = detail::solve_engine(ep, opts_);
    out.status = r.status;
    out.iterations = r.iterations;
    out.gap = r.gap;
    if (r.status == SolveStatus::optimal || r.status == SolveStatus::iteration_limit) {
      out.primal = r.x;
      out.dual = r.y;
      // Cone duals in block-variable order (zero for free blocks).
      out.cone_dual = VectorXd::Zero(N);
      int c2 = 0, r2 = 0;
      for (const auto& blk : p.blocks) {
        if (blk.kind != ConeBlock::Kind::free) {
          out.cone_dual.segment(c2, blk.dim) = r.z.segment(r2, blk.dim);
          r2 += blk.dim;
        }
        c2 += blk.dim;
      }
      out.objective_value = p.maximize ? -r.pobj : r.pobj;
    }
    return out;
  }

 private:
  SolverOptions opts_;
};

inline const ConicBackend& default_backend() {
  static DenseIpmBackend backend;
  return backend;
}

// ---------------------------------------------------------------------------
// Convex QP: Mehrotra predictor-corrector on the KKT system.
// ---------------------------------------------------------------------------

inline QpSolution DenseIpmBackend::solve_convex_qp(const QpProblem& qp) const {
  const int n = static_cast<int>(qp.g.size());
  const int m = static_cast<int>(qp.b.size());
  QpSolution out;
  if (qp.H.rows() != n || qp.H.cols() != n || qp.A.rows() != m || (m > 0 && qp.A.cols() != n))
    throw std::invalid_argument("qp: dimension mismatch");
  {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(qp.H, Eigen::EigenvaluesOnly);
    const double scale = qp.H.size() ? qp.H.cwiseAbs().maxCoeff() : 0.0;
    if (es.eigenvalues().minCoeff() < -tol::psd(scale))
      throw std::invalid_argument("qp: H is not positive semidefinite");
  }
  if (m == 0) return out;

  VectorXd x = VectorXd::Zero(n);
  VectorXd s = (qp.b - qp.A * x).cwiseMax(1.0);
  VectorXd lam = VectorXd::Ones(m);

  const double nb = 1.0 + qp.b.cwiseAbs().maxCoeff();
  const double ng = 1.0 + qp.g.cwiseAbs().maxCoeff() + qp.H.cwiseAbs().maxCoeff();
  const MatrixXd H2 = 2.0 * qp.H;
  bool failed = false;

  for (int it = 0; it < opts_.max_iters; ++it) {
    out.iterations = it + 1;
    VectorXd rd = H2 * x + 2.0 * qp.g + qp.A.transpose() * lam;
    VectorXd rp = qp.A * x + s - qp.b;
    const double mu = s.dot(lam) / m;
    const double obj = x.dot(qp.H * x) + 2.0 * qp.g.dot(x);

    if (rd.cwiseAbs().maxCoeff() <= opts_.feas_tol * ng &&
        rp.cwiseAbs().maxCoeff() <= opts_.feas_tol * nb &&
        mu * m <= opts_.gap_tol * (1.0 + std::abs(obj))) {
      out.status = SolveStatus::optimal;
      out.x = x;
      out.ineq_dual = lam;
      out.objective_value = obj;
      return out;
    }
    if (x.cwiseAbs().maxCoeff() > 1e13) {
      out.status = SolveStatus::unbounded;
      return out;
    }

    VectorXd d = lam.cwiseQuotient(s);
    MatrixXd M = H2 + qp.A.transpose() * d.asDiagonal() * qp.A;
    for (int i = 0; i < n; ++i) M(i, i) += 1e-13 * (1.0 + M(i, i));
    Eigen::LDLT<MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success) {
      failed = true;
      break;
    }

    auto newton = [&](const VectorXd& comp_target, VectorXd& dx, VectorXd& ds, VectorXd& dl) {
      VectorXd t = (comp_target - lam.cwiseProduct(s)).cwiseQuotient(lam);
      VectorXd rhs = -rd - qp.A.transpose() * d.cwiseProduct(rp + t).eval();
      dx = ldlt.solve(rhs);
      ds = -rp - qp.A * dx;
      dl = d.cwiseProduct(t - ds);
    };

    auto max_step = [&](const VectorXd& v, const VectorXd& dv) {
      double a = 1.0;
      for (int i = 0; i < v.size(); ++i)
        if (dv[i] < 0) a = std::min(a, -v[i] / dv[i]);
      return a;
    };

    VectorXd dxa, dsa, dla;
    newton(VectorXd::Zero(m), dxa, dsa, dla);
    const double ap = max_step(s, dsa);
    const double ad = max_step(lam, dla);
    const double mu_aff = (s + ap * dsa).dot(lam + ad * dla) / m;
    const double sigma = std::pow(std::clamp(mu_aff / std::max(mu, 1e-300), 0.0, 1.0), 3);

    VectorXd target = VectorXd::Constant(m, sigma * mu) - dsa.cwiseProduct(dla);
    VectorXd dx, ds, dl;
    newton(target, dx, ds, dl);
    const double a_p = std::min(1.0, 0.995 * max_step(s, ds));
    const double a_d = std::min(1.0, 0.995 * max_step(lam, dl));
    if (!dx.allFinite() || a_p <= 1e-14 || a_d <= 1e-14) {
      failed = true;
      break;
    }
    x += a_p * dx;
    s += a_p * ds;
    lam += a_d * dl;
  }

  LpProblem feas;
  feas.c = VectorXd::Zero(n);
  feas.A = qp.A;
  feas.b = qp.b;
  auto fr = solve_lp(feas);
  if (fr.status == SolveStatus::infeasible)
    out.status = SolveStatus::infeasible;
  else
    out.status = failed ? SolveStatus::numerical_failure : SolveStatus::iteration_limit;
  return out;
}

}  // namespace qpbc
