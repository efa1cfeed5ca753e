#pragma once

// Concavity cuts at a nondegenerate local-optimal vertex: local edge
// frames, gamma-extensions along the edges, the strengthened extensions
// computed from the cut-region dual LPs, and assembly of the cut row in
// original coordinates.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "qpbc/geometry.hpp"
#include "qpbc/ipm.hpp"
#include "qpbc/model.hpp"

namespace qpbc {

struct LocalFrame {
  Vertex vertex;
  std::vector<int> basis_rows;  // n active rows, invertible
  MatrixXd directions;          // column i: edge direction with A_B d_i = -e_i
};

struct ConcavityCut {
  VectorXd coeffs;  // 1/ext_k per basis row (0 for infinite extensions)
  VectorXd row_a;   // the cut as row_a' x <= row_b
  double row_b = 0.0;
};

struct KonnoResult {
  bool eligible = false;
  VectorXd s;  // extensions, entries in (0, inf]
};

struct KonnoOptions {
  // Eligibility LP objective: per-edge linearization at the gamma-extension
  // point (default), or the single shared objective x̄'Qy + 2c'y.
  bool shared_objective = false;
};

// Build the edge frame at a vertex; nullopt when the vertex is degenerate
// (the cutting step is skipped there).
inline std::optional<LocalFrame> local_frame(const Polytope& P, const Vertex& v) {
  const int n = P.dim();
  if (static_cast<int>(v.active_set.size()) > n) return std::nullopt;
  if (static_cast<int>(v.basis.size()) != n) return std::nullopt;
  MatrixXd AB = detail::rows_of(P.A, v.basis);
  Eigen::PartialPivLU<MatrixXd> lu(AB);
  MatrixXd D = lu.solve(-MatrixXd::Identity(n, n));
  if (!D.allFinite() || (AB * D + MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-7)
    throw std::runtime_error("local_frame: singular basis");
  LocalFrame f;
  f.vertex = v;
  f.basis_rows = v.basis;
  f.directions = D;
  return f;
}

// Largest step t_i >= 0 with q(v + theta d_i) >= level for all theta in
// [0, t_i]; +inf when the objective never drops below the level along the
// ray.  Requires q(v) >= level.
inline VectorXd tuy_extension(const MatrixXd& Q, const VectorXd& c, const LocalFrame& frame,
                              double level) {
  const int n = static_cast<int>(frame.directions.cols());
  const VectorXd& v = frame.vertex.point;
  const double qv = eval_objective(Q, c, v);
  const double gamma0 = qv - level;
  if (gamma0 < -1e-7 * (1.0 + std::abs(level)))
    throw std::invalid_argument("tuy_extension: vertex value below the level");

  VectorXd t(n);
  const VectorXd gv = 2.0 * (Q * v + c);
  for (int i = 0; i < n; ++i) {
    const VectorXd d = frame.directions.col(i);
    const double a = d.dot(Q * d);
    const double b = gv.dot(d);
    const double g0 = std::max(0.0, gamma0);
    const double scale = std::abs(a) + std::abs(b) + g0;
    if (std::abs(a) <= 1e-12 * (1.0 + scale)) {
      t[i] = (b >= 0) ? detail::kInf : g0 / (-b);
      continue;
    }
    const double disc = b * b - 4.0 * a * g0;
    if (a < 0) {
      t[i] = (-b - std::sqrt(std::max(0.0, disc))) / (2.0 * a);
    } else {
      if (disc <= 0) {
        t[i] = detail::kInf;
      } else {
        const double s = std::sqrt(disc);
        const double rlo = (-b - s) / (2.0 * a);
        t[i] = (rlo > 0) ? rlo : detail::kInf;
      }
    }
    if (t[i] < 0) t[i] = 0.0;
  }
  return t;
}

// Cut row sum_k (b_k - A_k x) / ext_k >= 1 over the frame's basis rows,
// rewritten as row_a' x <= row_b.  The generating vertex violates it.
inline ConcavityCut make_concavity_cut(const Polytope& P, const LocalFrame& frame,
                                       const VectorXd& ext) {
  const int n = static_cast<int>(frame.basis_rows.size());
  ConcavityCut cut;
  cut.coeffs = VectorXd::Zero(n);
  cut.row_a = VectorXd::Zero(P.dim());
  cut.row_b = -1.0;
  bool any_finite = false;
  for (int k = 0; k < n; ++k) {
    const double e = ext[k];
    if (!(e > 0)) throw std::invalid_argument("make_concavity_cut: extension must be positive");
    if (std::isinf(e)) continue;
    any_finite = true;
    cut.coeffs[k] = 1.0 / e;
    const int r = frame.basis_rows[k];
    cut.row_a += P.A.row(r).transpose() / e;
    cut.row_b += P.b[r] / e;
  }
  if (!any_finite)
    throw std::invalid_argument("make_concavity_cut: all extensions infinite, cut is vacuous");
  return cut;
}

// Eligibility test and strengthened extensions.  All failures degrade to
// the plain gamma-extensions, which remain valid on their own.
inline KonnoResult konno_step(const MatrixXd& Q, const VectorXd& c, const Polytope& P,
                              const LocalFrame& frame, const VectorXd& t, double u, double eps,
                              const ConicBackend& backend = default_backend(),
                              const KonnoOptions& opts = {}) {
  const int n = static_cast<int>(t.size());
  const int m = P.rows();
  const VectorXd& v = frame.vertex.point;
  const double level = u - eps;
  KonnoResult out;
  out.s = t;

  std::vector<int> finite;
  for (int i = 0; i < n; ++i)
    if (!std::isinf(t[i])) finite.push_back(i);
  if (finite.empty()) return out;

  ConcavityCut tuy = make_concavity_cut(P, frame, t);
  Polytope region = P.with_row(tuy.row_a, tuy.row_b);

  // Eligibility: minimize the objective linearization over the cut region
  // and test the true objective at the minimizers.
  bool region_empty = false;
  double worst = detail::kInf;
  auto run_lp = [&](const VectorXd& obj) -> std::optional<VectorXd> {
    LpProblem lp;
    lp.c = obj;
    lp.A = region.A;
    lp.b = region.b;
    auto r = backend.solve_lp(lp);
    if (r.status == SolveStatus::infeasible) {
      region_empty = true;
      return std::nullopt;
    }
    if (!r.ok()) return std::nullopt;
    return r.x;
  };
  if (opts.shared_objective) {
    auto y = run_lp(VectorXd(Q * v + 2.0 * c));
    if (y) worst = eval_objective(Q, c, *y);
  } else {
    worst = detail::kInf;
    for (int i : finite) {
      VectorXd z = v + t[i] * frame.directions.col(i);
      auto y = run_lp(VectorXd(Q * z + c));
      if (region_empty) break;
      if (!y) return out;  // solver hiccup: keep the plain extensions
      worst = std::min(worst, eval_objective(Q, c, *y));
    }
  }
  if (region_empty) {
    // The gamma-extension cut already removes the whole node.
    out.eligible = true;
    return out;
  }
  if (!(worst >= level - 1e-9 * (1.0 + std::abs(level)))) return out;
  out.eligible = true;

  // Strengthened extension per edge, from the dual LP of minimizing the
  // linearization at theta*e_i over the cut region, in frame coordinates.
  const MatrixXd& D = frame.directions;
  const MatrixXd Qf = D.transpose() * Q * D;
  const VectorXd cf = D.transpose() * (Q * v + c);
  const MatrixXd Af = P.A * D;
  const VectorXd bf = P.b - P.A * v;
  const double qv = eval_objective(Q, c, v);
  VectorXd tinv = VectorXd::Zero(n);
  for (int i : finite) tinv[i] = 1.0 / t[i];

  for (int i : finite) {
    // Variables (lambda in R^m_+, mu >= 0, theta free); maximize theta s.t.
    //   -Af' lambda + tinv mu - Qf_i' theta = cf
    //   -bf' lambda + mu + cf_i theta >= level - q(v)
    LpProblem lp;
    const int nv = m + 2;
    lp.c = VectorXd::Zero(nv);
    lp.c[m + 1] = -1.0;  // maximize theta
    lp.A = MatrixXd::Zero(m + 2, nv);
    lp.b = VectorXd::Zero(m + 2);
    lp.A.topLeftCorner(m, m) = -MatrixXd::Identity(m, m);  // lambda >= 0
    lp.A(m, m) = -1.0;                                     // mu >= 0
    lp.A.row(m + 1).head(m) = bf.transpose();              // value condition
    lp.A(m + 1, m) = -1.0;
    lp.A(m + 1, m + 1) = -cf[i];
    lp.b[m + 1] = qv - level;
    lp.E = MatrixXd::Zero(n, nv);
    lp.E.topLeftCorner(n, m) = -Af.transpose();
    lp.E.col(m).head(n) = tinv;
    lp.E.col(m + 1).head(n) = -Qf.row(i).transpose();
    lp.f = cf;
    auto r = backend.solve_lp(lp);
    if (r.ok()) {
      const double theta = r.x[m + 1];
      if (theta > t[i]) out.s[i] = theta;
    }
  }
  return out;
}

}  // namespace qpbc
