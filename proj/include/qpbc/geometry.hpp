#pragma once

// Polytope preprocessing and vertex machinery: boundedness and implicit
// equality detection, affine-hull reduction, Chebyshev centers, vertex
// purification, adjacency pivots, descent to a local optimal vertex, and
// brute-force vertex enumeration.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qpbc/ipm.hpp"
#include "qpbc/model.hpp"

namespace qpbc {

struct EmptyPolytopeError : std::runtime_error {
  EmptyPolytopeError() : std::runtime_error("polytope is empty") {}
};
struct UnboundedPolytopeError : std::runtime_error {
  UnboundedPolytopeError() : std::runtime_error("polytope is unbounded") {}
};

struct Vertex {
  VectorXd point;
  std::vector<int> active_set;  // sorted rows with A_i x = b_i
  std::vector<int> basis;       // n independent active rows
  bool degenerate = false;      // |active_set| > n
};

// Affine map from reduced coordinates xi to original x = origin + basis*xi.
struct AffineEmbedding {
  VectorXd origin;
  MatrixXd basis;  // n x k, orthonormal columns

  bool is_identity() const { return basis.rows() == basis.cols() && basis.isIdentity(1e-14) &&
                                     origin.isZero(0.0); }
  int reduced_dim() const { return static_cast<int>(basis.cols()); }
  VectorXd to_original(const VectorXd& xi) const { return origin + basis * xi; }
  VectorXd to_reduced(const VectorXd& x) const { return basis.transpose() * (x - origin); }

  static AffineEmbedding identity(int n) {
    AffineEmbedding e;
    e.origin = VectorXd::Zero(n);
    e.basis = MatrixXd::Identity(n, n);
    return e;
  }
};

struct ReducedPolytope {
  Polytope inner;
  AffineEmbedding embed;
  std::vector<int> implicit_equalities;
};

struct BoundedCheck {
  bool bounded = false;
  VectorXd coord_min, coord_max;  // valid when bounded
  ReducedPolytope reduced;
};

struct ChebyshevBall {
  VectorXd center;
  double radius = 0.0;
};

namespace detail {

inline double active_tol(double bi) { return 1e-7 * (1.0 + std::abs(bi)); }

// Greedy selection of n independent rows out of `rows` (ascending order).
inline std::vector<int> independent_subset(const MatrixXd& A, const std::vector<int>& rows,
                                           int want) {
  std::vector<int> chosen;
  MatrixXd M(0, A.cols());
  for (int r : rows) {
    MatrixXd T(M.rows() + 1, A.cols());
    if (M.rows() > 0) T.topRows(M.rows()) = M;
    T.bottomRows(1) = A.row(r);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(T);
    qr.setThreshold(1e-9);
    if (qr.rank() == T.rows()) {
      chosen.push_back(r);
      M = T;
      if (static_cast<int>(chosen.size()) == want) break;
    }
  }
  return chosen;
}

inline MatrixXd rows_of(const MatrixXd& A, const std::vector<int>& idx) {
  MatrixXd M(idx.size(), A.cols());
  for (size_t k = 0; k < idx.size(); ++k) M.row(k) = A.row(idx[k]);
  return M;
}

inline VectorXd entries_of(const VectorXd& b, const std::vector<int>& idx) {
  VectorXd v(idx.size());
  for (size_t k = 0; k < idx.size(); ++k) v[k] = b[idx[k]];
  return v;
}

}  // namespace detail

inline std::vector<int> active_rows(const Polytope& P, const VectorXd& x) {
  std::vector<int> act;
  VectorXd slack = P.b - P.A * x;
  for (int i = 0; i < P.rows(); ++i)
    if (slack[i] <= detail::active_tol(P.b[i])) act.push_back(i);
  return act;
}

inline Vertex vertex_at(const Polytope& P, const VectorXd& x) {
  Vertex v;
  v.point = x;
  v.active_set = active_rows(P, x);
  v.basis = detail::independent_subset(P.A, v.active_set, P.dim());
  if (static_cast<int>(v.basis.size()) != P.dim())
    throw std::runtime_error("vertex_at: point is not a vertex");
  v.degenerate = static_cast<int>(v.active_set.size()) > P.dim();
  return v;
}

// Move a feasible point to a vertex without increasing w'x.
inline Vertex purify_to_vertex(const Polytope& P, VectorXd x, const VectorXd& w) {
  const int n = P.dim();
  for (int round = 0; round <= P.rows() + n + 2; ++round) {
    std::vector<int> act = active_rows(P, x);
    MatrixXd M = detail::rows_of(P.A, act);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(M);
    qr.setThreshold(1e-9);
    const int rank = act.empty() ? 0 : static_cast<int>(qr.rank());
    if (rank == n) {
      // Snap onto the basis rows for a crisp vertex.
      std::vector<int> basis = detail::independent_subset(P.A, act, n);
      if (static_cast<int>(basis.size()) == n) {
        MatrixXd AB = detail::rows_of(P.A, basis);
        VectorXd bb = detail::entries_of(P.b, basis);
        VectorXd xs = AB.partialPivLu().solve(bb);
        if (P.contains(xs, 1e-6)) x = xs;
      }
      return vertex_at(P, x);
    }
    // Direction in the nullspace of the active rows.
    MatrixXd K;
    if (act.empty()) {
      K = MatrixXd::Identity(n, n);
    } else {
      Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullV);
      int r = 0;
      const double thresh = 1e-9 * (svd.singularValues().size() ? svd.singularValues()[0] : 1.0);
      for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > thresh) ++r;
      K = svd.matrixV().rightCols(n - r);
    }
    VectorXd d = -K * (K.transpose() * w);
    if (d.cwiseAbs().maxCoeff() < 1e-12) d = K.col(0);
    d.normalize();

    auto ratio = [&](const VectorXd& dir) {
      double theta = detail::kInf;
      VectorXd Ad = P.A * dir;
      VectorXd slack = P.b - P.A * x;
      for (int i = 0; i < P.rows(); ++i) {
        if (std::binary_search(act.begin(), act.end(), i)) continue;
        if (Ad[i] > 1e-11) theta = std::min(theta, std::max(0.0, slack[i]) / Ad[i]);
      }
      return theta;
    };
    double theta = ratio(d);
    if (theta == detail::kInf) {
      d = -d;
      theta = ratio(d);
      if (theta == detail::kInf) throw UnboundedPolytopeError();
    }
    x += theta * d;
  }
  throw std::runtime_error("purify_to_vertex: did not converge");
}

// Chebyshev center: maximize the inradius r with A_i x + r ||A_i|| <= b_i.
inline ChebyshevBall chebyshev_center(const Polytope& P,
                                      const ConicBackend& backend = default_backend()) {
  const int n = P.dim();
  const int m = P.rows();
  LpProblem lp;
  lp.c = VectorXd::Zero(n + 1);
  lp.c[n] = -1.0;  // maximize r
  lp.A = MatrixXd(m + 1, n + 1);
  lp.A.topLeftCorner(m, n) = P.A;
  for (int i = 0; i < m; ++i) lp.A(i, n) = P.A.row(i).norm();
  lp.A.row(m).setZero();
  lp.A(m, n) = -1.0;  // r >= 0
  lp.b = VectorXd(m + 1);
  lp.b.head(m) = P.b;
  lp.b[m] = 0.0;
  auto r = backend.solve_lp(lp);
  if (r.status == SolveStatus::infeasible) throw EmptyPolytopeError();
  if (r.status == SolveStatus::unbounded) throw UnboundedPolytopeError();
  if (!r.ok()) throw std::runtime_error("chebyshev_center: solver failure");
  ChebyshevBall ball;
  ball.center = r.x.head(n);
  ball.radius = r.x[n];
  return ball;
}

// Boundedness plus affine-hull reduction.
inline BoundedCheck check_bounded_fulldim(const Polytope& P,
                                          const ConicBackend& backend = default_backend()) {
  P.validate();
  const int n = P.dim();
  const int m = P.rows();
  BoundedCheck out;

  {
    LpProblem lp;
    lp.c = VectorXd::Zero(n);
    lp.A = P.A;
    lp.b = P.b;
    auto r = backend.solve_lp(lp);
    if (r.status == SolveStatus::infeasible) throw EmptyPolytopeError();
  }

  out.coord_min = VectorXd::Zero(n);
  out.coord_max = VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    for (int sgn : {1, -1}) {
      LpProblem lp;
      lp.c = VectorXd::Zero(n);
      lp.c[j] = sgn;  // sgn=1: min x_j; sgn=-1: max x_j
      lp.A = P.A;
      lp.b = P.b;
      auto r = backend.solve_lp(lp);
      if (r.status == SolveStatus::unbounded) {
        out.bounded = false;
        out.reduced.inner = P;
        out.reduced.embed = AffineEmbedding::identity(n);
        return out;
      }
      if (!r.ok()) throw std::runtime_error("check_bounded_fulldim: solver failure");
      if (sgn == 1)
        out.coord_min[j] = r.objective_value;
      else
        out.coord_max[j] = -r.objective_value;
    }
  }
  out.bounded = true;

  // Row i is an implicit equality iff min A_i x over P equals b_i.
  std::vector<int> implicit;
  for (int i = 0; i < m; ++i) {
    LpProblem lp;
    lp.c = P.A.row(i).transpose();
    lp.A = P.A;
    lp.b = P.b;
    auto r = backend.solve_lp(lp);
    if (!r.ok()) throw std::runtime_error("check_bounded_fulldim: solver failure");
    if (r.objective_value >= P.b[i] - detail::active_tol(P.b[i])) implicit.push_back(i);
  }

  if (implicit.empty()) {
    out.reduced.inner = P;
    out.reduced.embed = AffineEmbedding::identity(n);
    return out;
  }

  MatrixXd AI = detail::rows_of(P.A, implicit);
  VectorXd bI = detail::entries_of(P.b, implicit);
  Eigen::JacobiSVD<MatrixXd> svd(AI, Eigen::ComputeFullV | Eigen::ComputeThinU);
  const double smax = svd.singularValues().size() ? svd.singularValues()[0] : 1.0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > 1e-10 * smax) ++rank;
  const int k = n - rank;
  VectorXd x0 = svd.solve(bI);
  MatrixXd N = svd.matrixV().rightCols(k);

  out.reduced.implicit_equalities = implicit;
  out.reduced.embed.origin = x0;
  out.reduced.embed.basis = N;
  if (k == 0) {
    out.reduced.inner.A = MatrixXd(0, 0);
    out.reduced.inner.b = VectorXd(0);
    return out;
  }
  std::vector<int> keep;
  for (int i = 0; i < m; ++i) {
    VectorXd row = N.transpose() * P.A.row(i).transpose();
    if (row.cwiseAbs().maxCoeff() > 1e-10) keep.push_back(i);
  }
  if (keep.empty()) {
    // Hull equals the polytope; represent with one vacuous row.
    out.reduced.inner.A = MatrixXd::Zero(1, k);
    out.reduced.inner.b = VectorXd::Ones(1);
    return out;
  }
  out.reduced.inner.A = MatrixXd(keep.size(), k);
  out.reduced.inner.b = VectorXd(keep.size());
  for (size_t t = 0; t < keep.size(); ++t) {
    out.reduced.inner.A.row(t) = (N.transpose() * P.A.row(keep[t]).transpose()).transpose();
    out.reduced.inner.b[t] = P.b[keep[t]] - P.A.row(keep[t]).dot(x0);
  }
  return out;
}

// Adjacent vertices via simplex-style pivots.  Degenerate vertices pivot
// from every invertible basis drawn from the active set.
inline std::vector<Vertex> adjacent_vertices(const Polytope& P, const Vertex& v,
                                             std::int64_t basis_guard = 20000) {
  const int n = P.dim();
  std::vector<std::vector<int>> bases;
  if (!v.degenerate) {
    bases.push_back(v.basis);
  } else {
    const auto& act = v.active_set;
    const int a = static_cast<int>(act.size());
    std::vector<int> comb(n);
    for (int i = 0; i < n; ++i) comb[i] = i;
    std::int64_t count = 0;
    while (true) {
      if (++count > basis_guard) break;
      std::vector<int> rows(n);
      for (int i = 0; i < n; ++i) rows[i] = act[comb[i]];
      MatrixXd AB = detail::rows_of(P.A, rows);
      if (std::abs(AB.partialPivLu().determinant()) > 1e-10) bases.push_back(rows);
      int i = n - 1;
      while (i >= 0 && comb[i] == a - n + i) --i;
      if (i < 0) break;
      ++comb[i];
      for (int j = i + 1; j < n; ++j) comb[j] = comb[j - 1] + 1;
    }
  }

  std::vector<Vertex> out;
  auto push_unique = [&](const VectorXd& p) {
    if ((p - v.point).cwiseAbs().maxCoeff() <= tol::vertex_dedup) return;
    for (const auto& w : out)
      if ((w.point - p).cwiseAbs().maxCoeff() <= tol::vertex_dedup) return;
    out.push_back(vertex_at(P, p));
  };

  for (const auto& basis : bases) {
    MatrixXd AB = detail::rows_of(P.A, basis);
    Eigen::PartialPivLU<MatrixXd> lu(AB);
    for (int r = 0; r < n; ++r) {
      VectorXd e = VectorXd::Zero(n);
      e[r] = -1.0;
      VectorXd d = lu.solve(e);
      VectorXd Ad = P.A * d;
      VectorXd slack = P.b - P.A * v.point;
      double theta = detail::kInf;
      for (int i = 0; i < P.rows(); ++i) {
        if (std::find(basis.begin(), basis.end(), i) != basis.end()) continue;
        if (Ad[i] > 1e-11) theta = std::min(theta, std::max(0.0, slack[i]) / Ad[i]);
      }
      if (theta == detail::kInf || theta <= tol::vertex_dedup) continue;
      push_unique(v.point + theta * d);
    }
  }
  return out;
}

struct DescentResult {
  Vertex vertex;
  bool degenerate_stall = false;
  bool descended_below_start = true;
};

// Land on a vertex by minimizing the objective linearization, then
// first-improvement pivoting until no adjacent vertex is strictly better.
inline DescentResult local_vertex_descent(const MatrixXd& Q, const VectorXd& c, const Polytope& P,
                                          const VectorXd& start,
                                          const ConicBackend& backend = default_backend()) {
  const int n = P.dim();
  if (start.size() != n) throw std::invalid_argument("descent: start dimension mismatch");
  VectorXd g = 2.0 * (Q * start + c);
  if (g.cwiseAbs().maxCoeff() < 1e-14) g = VectorXd::Ones(n);
  LpProblem lp;
  lp.c = g;
  lp.A = P.A;
  lp.b = P.b;
  auto r = backend.solve_lp(lp);
  if (r.status == SolveStatus::unbounded) throw UnboundedPolytopeError();
  if (r.status == SolveStatus::infeasible) throw EmptyPolytopeError();
  VectorXd x = r.ok() ? r.x : start;

  DescentResult out;
  out.vertex = purify_to_vertex(P, x, g);
  double best = eval_objective(Q, c, out.vertex.point);

  const int max_moves = 200 + 20 * P.rows();
  int moves = 0;
  while (true) {
    if (++moves > max_moves) {
      out.degenerate_stall = true;
      break;
    }
    bool improved = false;
    for (const auto& w : adjacent_vertices(P, out.vertex)) {
      const double val = eval_objective(Q, c, w.point);
      if (val < best - tol::improve) {
        out.vertex = w;
        best = val;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  out.descended_below_start = best <= eval_objective(Q, c, start) + 1e-7;
  return out;
}

inline DescentResult local_vertex_descent(const QpInstance& inst, const VectorXd& start,
                                          const ConicBackend& backend = default_backend()) {
  return local_vertex_descent(inst.Q.dense(), inst.c, inst.polytope, start, backend);
}

// Split P along the hyperplane d'x = d'point.
inline std::pair<Polytope, Polytope> partition_at(const Polytope& P, const VectorXd& point,
                                                  const VectorXd& direction) {
  if (direction.size() != P.dim() || direction.cwiseAbs().maxCoeff() == 0.0)
    throw std::invalid_argument("partition_at: zero direction");
  const double rhs = direction.dot(point);
  return {P.with_row(direction, rhs), P.with_row(-direction, -rhs)};
}

// Exact vertex list by basis enumeration.  The guard bounds C(m, n).
inline std::vector<Vertex> enumerate_vertices(const Polytope& P,
                                              std::int64_t guard = 2'000'000) {
  const int n = P.dim();
  const int m = P.rows();
  if (m < n) return {};
  std::int64_t combos = 1;
  for (int i = 0; i < n; ++i) {
    combos = combos * (m - i) / (i + 1);
    if (combos > guard) throw std::runtime_error("enumerate_vertices: guard exceeded");
  }

  std::vector<Vertex> out;
  std::vector<VectorXd> points;
  std::vector<int> comb(n);
  for (int i = 0; i < n; ++i) comb[i] = i;
  while (true) {
    MatrixXd AB(n, n);
    VectorXd bb(n);
    for (int i = 0; i < n; ++i) {
      AB.row(i) = P.A.row(comb[i]);
      bb[i] = P.b[comb[i]];
    }
    Eigen::PartialPivLU<MatrixXd> lu(AB);
    VectorXd x = lu.solve(bb);
    if (x.allFinite() && (AB * x - bb).cwiseAbs().maxCoeff() <= 1e-7 * (1.0 + bb.cwiseAbs().maxCoeff()) &&
        P.contains(x, 1e-7)) {
      bool dup = false;
      for (const auto& p : points)
        if ((p - x).cwiseAbs().maxCoeff() <= tol::vertex_dedup) {
          dup = true;
          break;
        }
      if (!dup) {
        points.push_back(x);
        out.push_back(vertex_at(P, x));
      }
    }
    int i = n - 1;
    while (i >= 0 && comb[i] == m - n + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int j = i + 1; j < n; ++j) comb[j] = comb[j - 1] + 1;
  }
  return out;
}

}  // namespace qpbc
