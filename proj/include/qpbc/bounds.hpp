#pragma once

// Bound and relaxation programs.
//
// Everything is assembled through one identity: writing u_i = (-A_i', b_i)
// for the homogenized row functional rho_i(x) = b_i - A_i x = u_i' (x,1),
// a multiplier term alpha_i(x)(A_i x - b_i) contributes
//   - sum_j Y_ij sym(u_i u_j') - y_i sym(u_i e')
// to the Gram matrix of the certificate quadratic, where
// alpha_i = sum_j Y_ij rho_j + y_i, e is the homogenizing basis vector and
// sym(M) = (M + M')/2.  The linearized row products of the dual relaxation
// use the same outer products: (A_i x - b_i)(A_j x - b_j) lifts to
// <sym(u_i u_j'), M>.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "qpbc/conic.hpp"
#include "qpbc/geometry.hpp"
#include "qpbc/ipm.hpp"
#include "qpbc/model.hpp"

namespace qpbc {

enum class BoundVariant { L, L1, BOX };

inline const char* to_string(BoundVariant v) {
  switch (v) {
    case BoundVariant::L: return "L";
    case BoundVariant::L1: return "L1";
    case BoundVariant::BOX: return "BOX";
  }
  return "?";
}

struct BoundResult {
  SolveStatus status = SolveStatus::numerical_failure;
  double value = 0.0;  // lower bound in original objective units
  SymMatrix Y;         // Farkas weights on the rows of solve_polytope
  VectorXd y;
  BoundVariant variant = BoundVariant::L;
  std::vector<AffineFunc> alphas;  // multipliers, one per solve_polytope row

  // Context of the actual SDP solve (reduced coordinates when the input
  // polytope was not full-dimensional).
  Polytope solve_polytope;
  MatrixXd solve_Q;
  VectorXd solve_c;
  double solve_const = 0.0;
  AffineEmbedding embed;
  bool reduced = false;
  bool singleton = false;

  bool ok() const { return status == SolveStatus::optimal; }
};

struct RelaxationResult {
  SolveStatus status = SolveStatus::numerical_failure;
  double value = 0.0;
  SymMatrix Xmat;  // second moments in original coordinates
  VectorXd xvec;
  bool ok() const { return status == SolveStatus::optimal; }
};

struct Underestimator {
  SymMatrix H;
  VectorXd g;
  double constant = 0.0;
  double eval(const VectorXd& x) const {
    return x.dot(H.dense() * x) + 2.0 * g.dot(x) + constant;
  }
};

struct ExactnessCertificate {
  std::vector<AffineFunc> alphas;  // d_i' x + f_i
  MatrixXd farkas;                 // m x (m+1) nonnegative weights, column 0 = constant
};

struct ExactRepresentation {
  bool rank_deficient = false;
  std::vector<AffineFunc> alphas;
  double residual = 0.0;
};

namespace detail {

inline VectorXd homog_row(const MatrixXd& A, const VectorXd& b, int i) {
  VectorXd u(A.cols() + 1);
  u << -A.row(i).transpose(), b[i];
  return u;
}

inline MatrixXd sym_outer(const VectorXd& u, const VectorXd& v) {
  return 0.5 * (u * v.transpose() + v * u.transpose());
}

// Incremental builder for block-structured conic programs.
class ConicAssembler {
 public:
  int add_free(int k) { return push(ConeBlock::make_free(k)); }
  int add_nonneg(int k) { return push(ConeBlock::make_nonneg(k)); }
  int add_psd(int order) { return push(ConeBlock::make_psd(order)); }

  int flat(int block, int i) const { return offsets_[block] + i; }

  int add_eq(double rhs) {
    rows_.emplace_back();
    rhs_.push_back(rhs);
    return static_cast<int>(rows_.size()) - 1;
  }
  void coeff(int row, int block, int i, double v) { rows_[row].push_back({flat(block, i), v}); }
  // Coefficient vector <svec(C), svec-block> for a psd block.
  void sym_coeff(int row, int block, const MatrixXd& C) {
    VectorXd sc = svec(C);
    for (int i = 0; i < sc.size(); ++i)
      if (sc[i] != 0.0) rows_[row].push_back({flat(block, i), sc[i]});
  }

  void obj(int block, int i, double v) { obj_.push_back({flat(block, i), v}); }
  void sym_obj(int block, const MatrixXd& C) {
    VectorXd sc = svec(C);
    for (int i = 0; i < sc.size(); ++i)
      if (sc[i] != 0.0) obj_.push_back({flat(block, i), sc[i]});
  }

  ConicProblem build(bool maximize) const {
    ConicProblem p;
    p.blocks = blocks_;
    const int N = p.num_vars();
    p.objective = VectorXd::Zero(N);
    for (auto [j, v] : obj_) p.objective[j] += v;
    p.eq_A = MatrixXd::Zero(rows_.size(), N);
    p.eq_b = VectorXd::Zero(rows_.size());
    for (size_t r = 0; r < rows_.size(); ++r) {
      for (auto [j, v] : rows_[r]) p.eq_A(r, j) += v;
      p.eq_b[r] = rhs_[r];
    }
    p.maximize = maximize;
    return p;
  }

 private:
  int push(ConeBlock b) {
    offsets_.push_back(next_);
    next_ += b.dim;
    blocks_.push_back(b);
    return static_cast<int>(blocks_.size()) - 1;
  }
  std::vector<ConeBlock> blocks_;
  std::vector<int> offsets_;
  int next_ = 0;
  std::vector<std::vector<std::pair<int, double>>> rows_;
  std::vector<double> rhs_;
  std::vector<std::pair<int, double>> obj_;
};

struct BoundCore {
  SolveStatus status = SolveStatus::numerical_failure;
  double ell = 0.0;  // bound for x'Qx + 2c'x on the given polytope
  MatrixXd Y;        // symmetrized Farkas weights
  VectorXd y;
  std::vector<AffineFunc> alphas;
  VectorXd moment_dual;  // svec of the dual moment matrix (order n+1)
};

// Identify rows touching exactly one coordinate, and per-coordinate tight
// box bounds, for the separable-multiplier variant.
struct BoxStructure {
  bool pure_box = false;               // every row is single-coordinate
  std::vector<int> row_coord;          // coordinate per row, -1 if general
  VectorXd lo, hi;                     // tight bounds per coordinate
  std::vector<int> lo_row, hi_row;     // rows realizing them
};

inline BoxStructure analyze_box(const Polytope& P) {
  const int n = P.dim();
  const int m = P.rows();
  BoxStructure bs;
  bs.row_coord.assign(m, -1);
  bs.lo = VectorXd::Constant(n, -kInf);
  bs.hi = VectorXd::Constant(n, kInf);
  bs.lo_row.assign(n, -1);
  bs.hi_row.assign(n, -1);
  bs.pure_box = true;
  for (int i = 0; i < m; ++i) {
    int nz = -1;
    bool single = true;
    for (int j = 0; j < n; ++j) {
      if (P.A(i, j) != 0.0) {
        if (nz >= 0) {
          single = false;
          break;
        }
        nz = j;
      }
    }
    if (!single || nz < 0) {
      bs.pure_box = false;
      continue;
    }
    bs.row_coord[i] = nz;
    const double a = P.A(i, nz);
    const double bound = P.b[i] / a;
    if (a > 0) {
      if (bound < bs.hi[nz]) {
        bs.hi[nz] = bound;
        bs.hi_row[nz] = i;
      }
    } else {
      if (bound > bs.lo[nz]) {
        bs.lo[nz] = bound;
        bs.lo_row[nz] = i;
      }
    }
  }
  for (int j = 0; j < n; ++j)
    if (bs.lo_row[j] < 0 || bs.hi_row[j] < 0 || bs.hi[j] - bs.lo[j] < 1e-9) bs.pure_box = false;
  return bs;
}

// Row equilibration: the bound and relaxation values are representation
// independent, so each row is rescaled to unit magnitude before assembly
// and the Farkas weights are scaled back afterwards.
inline VectorXd row_scales(const Polytope& P) {
  VectorXd s(P.rows());
  for (int i = 0; i < P.rows(); ++i) {
    const double mag = std::max(P.A.row(i).cwiseAbs().maxCoeff(), std::abs(P.b[i]));
    s[i] = mag > 1e-12 ? 1.0 / mag : 1.0;
  }
  return s;
}

inline Polytope scale_rows(const Polytope& P, const VectorXd& s) {
  Polytope out = P;
  for (int i = 0; i < P.rows(); ++i) {
    out.A.row(i) *= s[i];
    out.b[i] *= s[i];
  }
  return out;
}

inline BoundCore solve_bound_core_raw(const MatrixXd& Q, const VectorXd& c, const Polytope& P,
                                      BoundVariant variant, std::optional<double> cap,
                                      const ConicBackend& backend);

// Assemble and solve the bound SDP on a polytope assumed bounded (and used
// as-is; callers handle reduction).  cap, when finite, adds ell <= cap.
// coord_scale is a magnitude estimate for the feasible coordinates; the
// substitution x = R xi plus an objective rescale keeps the SDP variables
// near unit size, and the certificate is scaled back on return.
inline BoundCore solve_bound_core(const MatrixXd& Q, const VectorXd& c, const Polytope& P,
                                  BoundVariant variant, std::optional<double> cap,
                                  const ConicBackend& backend = default_backend(),
                                  double coord_scale = 1.0) {
  const double R = std::max(coord_scale, 1e-9);
  Polytope Pc = P;
  Pc.A *= R;
  MatrixXd Qx = R * R * Q;
  VectorXd cx = R * c;
  const double sig =
      std::max({Qx.cwiseAbs().maxCoeff(), cx.size() ? cx.cwiseAbs().maxCoeff() : 0.0, 1e-12});
  Qx /= sig;
  cx /= sig;
  std::optional<double> cap_s = cap ? std::optional<double>(*cap / sig) : std::nullopt;
  VectorXd s = row_scales(Pc);
  BoundCore core = solve_bound_core_raw(Qx, cx, scale_rows(Pc, s), variant, cap_s, backend);
  if (core.status == SolveStatus::optimal) {
    core.ell *= sig;
    core.Y = sig * (s.asDiagonal() * core.Y * s.asDiagonal()).eval();
    core.y = sig * s.cwiseProduct(core.y);
    for (int i = 0; i < P.rows(); ++i) {
      core.alphas[i].grad *= sig * s[i] / R;
      core.alphas[i].offset *= sig * s[i];
    }
    if (core.moment_dual.size()) {
      // Renormalize the moment matrix to unit corner and undo x = R xi.
      const int n1 = P.dim() + 1;
      MatrixXd M = smat(core.moment_dual, n1);
      if (M(n1 - 1, n1 - 1) > 1e-12) {
        M /= M(n1 - 1, n1 - 1);
        M.topLeftCorner(n1 - 1, n1 - 1) *= R * R;
        M.topRightCorner(n1 - 1, 1) *= R;
        M.bottomLeftCorner(1, n1 - 1) *= R;
        core.moment_dual = svec(M);
      }
    }
  }
  return core;
}

inline BoundCore solve_bound_core_raw(const MatrixXd& Q, const VectorXd& c, const Polytope& P,
                                      BoundVariant variant, std::optional<double> cap,
                                      const ConicBackend& backend) {
  const int n = P.dim();
  const int m = P.rows();
  BoundCore out;

  std::vector<VectorXd> u(m);
  for (int i = 0; i < m; ++i) u[i] = homog_row(P.A, P.b, i);
  VectorXd e_h = VectorXd::Zero(n + 1);
  e_h[n] = 1.0;

  MatrixXd C0 = MatrixXd::Zero(n + 1, n + 1);
  C0.topLeftCorner(n, n) = Q;
  C0.topRightCorner(n, 1) = c;
  C0.bottomLeftCorner(1, n) = c.transpose();

  ConicAssembler as;
  const int blk_ell = as.add_free(1);

  // Multiplier parametrization per variant.
  const bool sym_Y = variant == BoundVariant::L;
  BoxStructure bs;
  std::vector<int> box_rows, gen_rows;
  if (variant == BoundVariant::BOX) {
    bs = analyze_box(P);
    for (int i = 0; i < m; ++i) {
      const int k = bs.row_coord[i];
      if (k >= 0 && bs.lo_row[k] >= 0 && bs.hi_row[k] >= 0 && bs.hi[k] - bs.lo[k] >= 1e-9)
        box_rows.push_back(i);
      else
        gen_rows.push_back(i);
    }
  } else {
    for (int i = 0; i < m; ++i) gen_rows.push_back(i);
  }
  const int mg = static_cast<int>(gen_rows.size());
  const int mb = static_cast<int>(box_rows.size());

  const int y_dofs = sym_Y ? packed_size(m) : mg * m;
  int blk_Y = -1, blk_y = -1, blk_df = -1, blk_ep = -1;
  if (y_dofs > 0) blk_Y = as.add_nonneg(y_dofs);
  if (mg > 0) blk_y = as.add_nonneg(mg);
  if (mb > 0) {
    blk_df = as.add_free(2 * mb);    // (d_r, f_r) per box row
    blk_ep = as.add_nonneg(2 * mb);  // endpoint values of alpha_r
  }
  const int blk_S = as.add_psd(n + 1);
  int blk_cap = -1;
  if (cap) blk_cap = as.add_nonneg(1);

  // Gram equalities: svec(S) + sum contributions = svec(C0).
  std::vector<int> gram_rows(packed_size(n + 1));
  {
    VectorXd rhs = svec(C0);
    for (int k = 0; k < rhs.size(); ++k) {
      gram_rows[k] = as.add_eq(rhs[k]);
      as.coeff(gram_rows[k], blk_S, k, 1.0);
    }
    auto add_contrib = [&](int block, int dof, const MatrixXd& M) {
      VectorXd sc = svec(M);
      for (int k = 0; k < sc.size(); ++k)
        if (sc[k] != 0.0) as.coeff(gram_rows[k], block, dof, sc[k]);
    };
    // ell enters as +ell * e e'.
    add_contrib(blk_ell, 0, MatrixXd(e_h * e_h.transpose()));
    if (sym_Y) {
      for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
          MatrixXd M = sym_outer(u[i], u[j]);
          if (i != j) M *= 2.0;
          add_contrib(blk_Y, packed_index(i, j), M);
        }
      for (int gi = 0; gi < mg; ++gi)
        add_contrib(blk_y, gi, sym_outer(u[gen_rows[gi]], e_h));
    } else {
      for (int gi = 0; gi < mg; ++gi) {
        const int i = gen_rows[gi];
        for (int j = 0; j < m; ++j) add_contrib(blk_Y, gi * m + j, sym_outer(u[i], u[j]));
        add_contrib(blk_y, gi, sym_outer(u[i], e_h));
      }
    }
    for (int bi = 0; bi < mb; ++bi) {
      const int r = box_rows[bi];
      VectorXd ek = VectorXd::Zero(n + 1);
      ek[bs.row_coord[r]] = 1.0;
      add_contrib(blk_df, 2 * bi, sym_outer(ek, u[r]));       // d_r
      add_contrib(blk_df, 2 * bi + 1, sym_outer(e_h, u[r]));  // f_r
    }
  }

  // Box multipliers must be nonnegative at both interval endpoints.
  for (int bi = 0; bi < mb; ++bi) {
    const int k = bs.row_coord[box_rows[bi]];
    for (int side = 0; side < 2; ++side) {
      const double point = side == 0 ? bs.lo[k] : bs.hi[k];
      const int row = as.add_eq(0.0);
      as.coeff(row, blk_df, 2 * bi, point);
      as.coeff(row, blk_df, 2 * bi + 1, 1.0);
      as.coeff(row, blk_ep, 2 * bi + side, -1.0);
    }
  }

  // Reduced-gradient variant: multiplier gradients lie in the span of the
  // eigenvectors of Q with negative eigenvalues.
  if (variant == BoundVariant::L1) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Q);
    const double cut = -tol::eig_rel * std::max(std::abs(es.eigenvalues().minCoeff()),
                                                std::abs(es.eigenvalues().maxCoeff()));
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
      if (es.eigenvalues()[i] >= cut) keep.push_back(i);
    if (!keep.empty() && static_cast<int>(keep.size()) < n) {
      MatrixXd Vp(n, keep.size());
      for (size_t t = 0; t < keep.size(); ++t) Vp.col(t) = es.eigenvectors().col(keep[t]);
      // d_i = -sum_j Y_ij A_j'; require Vp' d_i = 0.
      MatrixXd W = Vp.transpose() * P.A.transpose();  // (n - k) x m
      for (int gi = 0; gi < mg; ++gi)
        for (int t = 0; t < W.rows(); ++t) {
          const int row = as.add_eq(0.0);
          for (int j = 0; j < m; ++j)
            if (W(t, j) != 0.0) as.coeff(row, blk_Y, gi * m + j, -W(t, j));
        }
    } else if (keep.size() == static_cast<size_t>(n)) {
      // No negative eigenspace: all gradients vanish.
      for (int gi = 0; gi < mg; ++gi)
        for (int t = 0; t < n; ++t) {
          const int row = as.add_eq(0.0);
          for (int j = 0; j < m; ++j)
            if (P.A(j, t) != 0.0) as.coeff(row, blk_Y, gi * m + j, -P.A(j, t));
        }
    }
  }

  if (cap) {
    const int row = as.add_eq(*cap);
    as.coeff(row, blk_ell, 0, 1.0);
    as.coeff(row, blk_cap, 0, 1.0);
  }

  as.obj(blk_ell, 0, 1.0);
  ConicProblem prob = as.build(/*maximize=*/true);
  auto sol = backend.solve_sdp(prob);
  out.status = sol.status;
  if (sol.status != SolveStatus::optimal) return out;

  out.ell = sol.objective_value;
  // Recover multipliers.
  MatrixXd Yfull = MatrixXd::Zero(m, m);
  VectorXd yfull = VectorXd::Zero(m);
  int off_Y = 0;
  {
    // Flat offsets of the blocks, mirroring the assembler layout.
    int off = 1;  // ell
    if (y_dofs > 0) {
      off_Y = off;
      off += y_dofs;
    }
    int off_y = off;
    if (mg > 0) off += mg;
    int off_df = off;
    if (mb > 0) off += 4 * mb;  // df free + endpoint slacks
    if (sym_Y) {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) Yfull(i, j) = sol.primal[off_Y + packed_index(i, j)];
      for (int gi = 0; gi < mg; ++gi) yfull[gen_rows[gi]] = sol.primal[off_y + gi];
    } else {
      for (int gi = 0; gi < mg; ++gi)
        for (int j = 0; j < m; ++j) Yfull(gen_rows[gi], j) = sol.primal[off_Y + gi * m + j];
      for (int gi = 0; gi < mg; ++gi) yfull[gen_rows[gi]] = sol.primal[off_y + gi];
    }
    // Box rows: express alpha_r = d_r x_k + f_r over the tight bound rows.
    for (int bi = 0; bi < mb; ++bi) {
      const int r = box_rows[bi];
      const int k = bs.row_coord[r];
      const double d = sol.primal[off_df + 2 * bi];
      const double f = sol.primal[off_df + 2 * bi + 1];
      const double lo = bs.lo[k], hi = bs.hi[k];
      const double p_lo = std::max(0.0, d * lo + f);
      const double p_hi = std::max(0.0, d * hi + f);
      const int r_hi = bs.hi_row[k], r_lo = bs.lo_row[k];
      const double a_hi = P.A(r_hi, k), a_lo = -P.A(r_lo, k);
      Yfull(r, r_hi) += p_lo / (a_hi * (hi - lo));
      Yfull(r, r_lo) += p_hi / (a_lo * (hi - lo));
    }
  }
  // Multipliers as affine functions: alpha_i = sum_j Yfull_ij rho_j + y_i.
  out.alphas.resize(m);
  for (int i = 0; i < m; ++i) {
    VectorXd grad = -P.A.transpose() * Yfull.row(i).transpose();
    const double offv = Yfull.row(i).dot(P.b) + yfull[i];
    out.alphas[i] = AffineFunc(grad, offv);
  }
  out.Y = 0.5 * (Yfull + Yfull.transpose());
  out.y = yfull;
  // Dual moment matrix: cone dual of the PSD block.
  {
    int off = 1 + y_dofs + (mg > 0 ? mg : 0) + (mb > 0 ? 4 * mb : 0);
    out.moment_dual = sol.cone_dual.segment(off, packed_size(n + 1));
  }
  return out;
}

inline MatrixXd bound_gram(const MatrixXd& Q, const VectorXd& c, const Polytope& P,
                           const MatrixXd& Y, const VectorXd& y, double ell) {
  const int n = P.dim();
  MatrixXd G = MatrixXd::Zero(n + 1, n + 1);
  G.topLeftCorner(n, n) = Q - P.A.transpose() * Y * P.A;
  VectorXd t = c + P.A.transpose() * (Y * P.b + 0.5 * y);
  G.topRightCorner(n, 1) = t;
  G.bottomLeftCorner(1, n) = t.transpose();
  G(n, n) = -ell - y.dot(P.b) - P.b.dot(Y * P.b);
  return G;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// solve_bound: the affine-multiplier bound, variants L / L1 / BOX.
// ---------------------------------------------------------------------------

inline BoundResult solve_bound(const QpInstance& inst, BoundVariant variant,
                               std::optional<double> cap = std::nullopt,
                               const ConicBackend& backend = default_backend()) {
  inst.validate();
  auto chk = check_bounded_fulldim(inst.polytope, backend);
  if (!chk.bounded) throw UnboundedPolytopeError();

  BoundResult out;
  out.variant = variant;
  out.embed = chk.reduced.embed;
  out.reduced = !chk.reduced.implicit_equalities.empty();

  const MatrixXd Qd = inst.Q.dense();
  if (out.reduced && chk.reduced.embed.reduced_dim() == 0) {
    // Singleton feasible set: the bound is the objective value itself.
    const VectorXd x0 = chk.reduced.embed.origin;
    out.status = SolveStatus::optimal;
    out.value = eval_objective(Qd, inst.c, x0);
    out.singleton = true;
    out.solve_polytope = inst.polytope;
    out.solve_Q = Qd;
    out.solve_c = inst.c;
    out.Y = SymMatrix(inst.polytope.rows());
    out.y = VectorXd::Zero(inst.polytope.rows());
    out.alphas.assign(inst.polytope.rows(), AffineFunc::zero(inst.n()));
    return out;
  }

  Polytope P = chk.reduced.inner;
  MatrixXd Qs = Qd;
  VectorXd cs = inst.c;
  double con = 0.0;
  if (out.reduced) {
    const MatrixXd& N = chk.reduced.embed.basis;
    const VectorXd& x0 = chk.reduced.embed.origin;
    Qs = N.transpose() * Qd * N;
    cs = N.transpose() * (Qd * x0 + inst.c);
    con = eval_objective(Qd, inst.c, x0);
  }
  if (variant == BoundVariant::BOX && !detail::analyze_box(P).pure_box)
    throw std::invalid_argument("solve_bound: BOX variant requires an axis-aligned box");
  std::optional<double> cap_s = cap ? std::optional<double>(*cap - con) : std::nullopt;

  double coord_scale = 1.0;
  for (int j = 0; j < inst.n(); ++j)
    coord_scale =
        std::max({coord_scale, std::abs(chk.coord_min[j]), std::abs(chk.coord_max[j])});
  if (out.reduced) coord_scale *= std::sqrt(static_cast<double>(inst.n()));

  auto core = detail::solve_bound_core(Qs, cs, P, variant, cap_s, backend, coord_scale);
  out.status = core.status;
  out.solve_polytope = P;
  out.solve_Q = Qs;
  out.solve_c = cs;
  out.solve_const = con;
  if (!core.alphas.empty()) out.alphas = core.alphas;
  if (core.status == SolveStatus::optimal) {
    out.value = core.ell + con;
    out.Y = SymMatrix::from_dense(core.Y);
    out.y = core.y;
  }
  return out;
}

// ---------------------------------------------------------------------------
// solve_relaxation: the dual moment relaxation with pairwise row products.
// ---------------------------------------------------------------------------

inline RelaxationResult solve_relaxation(const QpInstance& inst, bool include_Ax_leq_b = false,
                                         const ConicBackend& backend = default_backend()) {
  inst.validate();
  auto chk = check_bounded_fulldim(inst.polytope, backend);
  if (!chk.bounded) throw UnboundedPolytopeError();

  RelaxationResult out;
  const MatrixXd Qd = inst.Q.dense();
  const int n_orig = inst.n();

  if (!chk.reduced.implicit_equalities.empty() && chk.reduced.embed.reduced_dim() == 0) {
    const VectorXd x0 = chk.reduced.embed.origin;
    out.status = SolveStatus::optimal;
    out.value = eval_objective(Qd, inst.c, x0);
    out.Xmat = SymMatrix::from_dense(MatrixXd(x0 * x0.transpose()));
    out.xvec = x0;
    return out;
  }

  const bool reduced = !chk.reduced.implicit_equalities.empty();
  Polytope P = chk.reduced.inner;
  MatrixXd Qs = Qd;
  VectorXd cs = inst.c;
  double con = 0.0;
  if (reduced) {
    const MatrixXd& N = chk.reduced.embed.basis;
    const VectorXd& x0 = chk.reduced.embed.origin;
    Qs = N.transpose() * Qd * N;
    cs = N.transpose() * (Qd * x0 + inst.c);
    con = eval_objective(Qd, inst.c, x0);
  }

  double R = 1.0;
  for (int j = 0; j < inst.n(); ++j)
    R = std::max({R, std::abs(chk.coord_min[j]), std::abs(chk.coord_max[j])});
  if (reduced) R *= std::sqrt(static_cast<double>(inst.n()));
  P.A *= R;
  Qs = (R * R * Qs).eval();
  cs = (R * cs).eval();
  const double sig =
      std::max({Qs.cwiseAbs().maxCoeff(), cs.size() ? cs.cwiseAbs().maxCoeff() : 0.0, 1e-12});
  Qs /= sig;
  cs /= sig;
  P = detail::scale_rows(P, detail::row_scales(P));
  const int n = P.dim();
  const int m = P.rows();
  std::vector<VectorXd> u(m);
  for (int i = 0; i < m; ++i) u[i] = detail::homog_row(P.A, P.b, i);
  VectorXd e_h = VectorXd::Zero(n + 1);
  e_h[n] = 1.0;

  detail::ConicAssembler as;
  const int blk_M = as.add_psd(n + 1);
  const int n_pairs = packed_size(m);
  const int blk_t = as.add_nonneg(n_pairs);
  int blk_u = include_Ax_leq_b ? as.add_nonneg(m) : -1;

  // Corner normalization.
  {
    const int row = as.add_eq(1.0);
    as.sym_coeff(row, blk_M, MatrixXd(e_h * e_h.transpose()));
  }
  // Row products (A_i x - b_i)(A_j x - b_j) >= 0, linearized.
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      const int row = as.add_eq(0.0);
      as.sym_coeff(row, blk_M, detail::sym_outer(u[i], u[j]));
      as.coeff(row, blk_t, packed_index(i, j), -1.0);
    }
  if (include_Ax_leq_b)
    for (int i = 0; i < m; ++i) {
      const int row = as.add_eq(0.0);
      as.sym_coeff(row, blk_M, detail::sym_outer(u[i], e_h));
      as.coeff(row, blk_u, i, -1.0);
    }

  MatrixXd C0 = MatrixXd::Zero(n + 1, n + 1);
  C0.topLeftCorner(n, n) = Qs;
  C0.topRightCorner(n, 1) = cs;
  C0.bottomLeftCorner(1, n) = cs.transpose();
  as.sym_obj(blk_M, C0);

  auto sol = backend.solve_sdp(as.build(/*maximize=*/false));
  out.status = sol.status;
  if (sol.status != SolveStatus::optimal) return out;
  out.value = sig * sol.objective_value + con;

  MatrixXd M = smat(sol.primal.head(packed_size(n + 1)), n + 1);
  {
    // Strip solver noise: project onto the PSD cone and re-pin the corner.
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
    M = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
        es.eigenvectors().transpose();
    if (M(n, n) > 1e-12) M /= M(n, n);
  }
  MatrixXd Xr = R * R * M.topLeftCorner(n, n);
  VectorXd xr = R * M.topRightCorner(n, 1);
  if (reduced) {
    const MatrixXd& N = chk.reduced.embed.basis;
    const VectorXd& x0 = chk.reduced.embed.origin;
    VectorXd xo = x0 + N * xr;
    MatrixXd Xo = x0 * x0.transpose() + x0 * (N * xr).transpose() + (N * xr) * x0.transpose() +
                  N * Xr * N.transpose();
    out.Xmat = SymMatrix::from_dense(Xo);
    out.xvec = xo;
  } else {
    out.Xmat = SymMatrix::from_dense(Xr);
    out.xvec = xr;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Underestimator extraction from an optimal bound.
// ---------------------------------------------------------------------------

inline Underestimator extract_underestimator(const QpInstance& inst, const BoundResult& br) {
  if (!br.ok()) throw std::invalid_argument("extract_underestimator: bound not optimal");
  const int n = inst.n();
  if (br.singleton) {
    // U(x) == bound value (constant certificate).
    Underestimator u;
    u.H = SymMatrix(n);
    u.g = VectorXd::Zero(n);
    u.constant = br.value;
    return u;
  }
  const Polytope& P = br.solve_polytope;
  const MatrixXd Yd = br.Y.dense();
  MatrixXd Hr = br.solve_Q - P.A.transpose() * Yd * P.A;
  VectorXd gr = br.solve_c + P.A.transpose() * (Yd * P.b + 0.5 * br.y);
  double kr = -br.y.dot(P.b) - P.b.dot(Yd * P.b);

  // Clip small negative eigenvalues so downstream QP solves see a PSD matrix.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Hr);
  VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  Hr = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();

  Underestimator u;
  if (!br.reduced) {
    u.H = SymMatrix::from_dense(Hr);
    u.g = gr;
    u.constant = kr;
    return u;
  }
  const MatrixXd& N = br.embed.basis;
  const VectorXd& x0 = br.embed.origin;
  MatrixXd Ho = N * Hr * N.transpose();
  VectorXd Ngr = N * gr;
  u.H = SymMatrix::from_dense(Ho);
  u.g = Ngr - Ho * x0;
  u.constant = x0.dot(Ho * x0) - 2.0 * Ngr.dot(x0) + kr + br.solve_const;
  return u;
}

// ---------------------------------------------------------------------------
// Exact multiplier representation of q + c0 over the row functionals
// (least squares on the symmetrized linear system).
// ---------------------------------------------------------------------------

inline ExactRepresentation exact_representation(const QpInstance& inst, double c0) {
  const int n = inst.n();
  const int m = inst.polytope.rows();
  ExactRepresentation out;

  MatrixXd rowspan(m, n + 1);
  rowspan << inst.polytope.A, -inst.polytope.b;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(rowspan);
  qr.setThreshold(1e-10);
  if (qr.rank() < n + 1) {
    out.rank_deficient = true;
    return out;
  }

  // alpha_i = d_i'x + f_i;  sum_i sym((d_i,f_i) (A_i,-b_i)') = [[Q,c],[c',c0]].
  const int rows = packed_size(n + 1);
  MatrixXd E(rows, m * (n + 1));
  for (int i = 0; i < m; ++i) {
    VectorXd v(n + 1);
    v << inst.polytope.A.row(i).transpose(), -inst.polytope.b[i];
    for (int t = 0; t < n + 1; ++t) {
      VectorXd et = VectorXd::Zero(n + 1);
      et[t] = 1.0;
      E.col(i * (n + 1) + t) = svec(detail::sym_outer(et, v));
    }
  }
  MatrixXd C(n + 1, n + 1);
  C.topLeftCorner(n, n) = inst.Q.dense();
  C.topRightCorner(n, 1) = inst.c;
  C.bottomLeftCorner(1, n) = inst.c.transpose();
  C(n, n) = c0;
  VectorXd rhs = svec(C);

  VectorXd sol = E.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
  out.residual = (E * sol - rhs).norm();
  out.alphas.resize(m);
  for (int i = 0; i < m; ++i) {
    VectorXd df = sol.segment(i * (n + 1), n + 1);
    out.alphas[i] = AffineFunc(df.head(n), df[n]);
  }
  if (out.residual > 1e-8 * (1.0 + rhs.norm())) out.rank_deficient = true;
  return out;
}

// ---------------------------------------------------------------------------
// Sufficient exactness conditions at a candidate minimizer: one SDP
// feasibility problem over Farkas-parametrized multipliers.
// ---------------------------------------------------------------------------

inline std::optional<ExactnessCertificate> hgg_exactness_check(
    const QpInstance& inst, const VectorXd& xbar,
    const ConicBackend& backend = default_backend()) {
  inst.validate();
  const int n = inst.n();
  const int m = inst.polytope.rows();
  if (!inst.polytope.contains(xbar, 1e-6))
    throw std::invalid_argument("hgg_exactness_check: point is infeasible");
  const MatrixXd& A = inst.polytope.A;
  const VectorXd& b = inst.polytope.b;
  const MatrixXd Qd = inst.Q.dense();
  VectorXd slack = b - A * xbar;
  std::vector<bool> active(m);
  for (int i = 0; i < m; ++i) active[i] = slack[i] <= detail::active_tol(b[i]);

  // w_{i0} >= 0 constant part, w_{ij} >= 0 weights: alpha_i = w_{i0} +
  // sum_j w_{ij} (b_j - A_j x),  d_i = -A' w_i,  alpha_i(xbar) = w_{i0} + w_i's.
  detail::ConicAssembler as;
  const int blk_w = as.add_nonneg(m * (m + 1));
  const int blk_S = as.add_psd(n);
  auto wi = [&](int i, int j) { return i * (m + 1) + j; };  // j=0 constant

  // PSD condition: S = Q + (1/2) sum_i (d_i A_i + A_i' d_i').
  {
    MatrixXd Qm = Qd;
    VectorXd rhsv = svec(Qm);
    for (int k = 0; k < rhsv.size(); ++k) {
      const int row = as.add_eq(rhsv[k]);
      as.coeff(row, blk_S, k, 1.0);
      // subtract the multiplier part: coefficient of w_{ij} is
      // -(1/2)(-A_j' A_i - A_i' A_j) = sym(A_j' A_i).
      for (int i = 0; i < m; ++i)
        for (int j = 1; j <= m; ++j) {
          MatrixXd M = detail::sym_outer(A.row(j - 1).transpose(), A.row(i).transpose());
          const double cf = svec(M)[k];
          if (cf != 0.0) as.coeff(row, blk_w, wi(i, j), cf);
        }
    }
  }
  // Gradient condition:
  //   Q xbar + c + (1/2) sum_{active} alpha_i(xbar) A_i'
  //             + (1/2) sum_{inactive} (A_i xbar - b_i) d_i = 0.
  {
    VectorXd rhsv = -(Qd * xbar + inst.c);
    for (int t = 0; t < n; ++t) {
      const int row = as.add_eq(rhsv[t]);
      for (int i = 0; i < m; ++i) {
        if (active[i]) {
          // (1/2) A_i'_t * (w_{i0} + sum_j w_{ij} slack_j)
          as.coeff(row, blk_w, wi(i, 0), 0.5 * A(i, t));
          for (int j = 1; j <= m; ++j) {
            const double cf = 0.5 * A(i, t) * slack[j - 1];
            if (cf != 0.0) as.coeff(row, blk_w, wi(i, j), cf);
          }
        } else {
          // (1/2)(-slack_i) * d_i = (1/2) slack_i sum_j w_{ij} A_j'
          for (int j = 1; j <= m; ++j) {
            const double cf = 0.5 * slack[i] * A(j - 1, t);
            if (cf != 0.0) as.coeff(row, blk_w, wi(i, j), cf);
          }
        }
      }
    }
  }
  // Complementarity off the active set: alpha_i(xbar) = 0.
  for (int i = 0; i < m; ++i) {
    if (active[i]) continue;
    const int row = as.add_eq(0.0);
    as.coeff(row, blk_w, wi(i, 0), 1.0);
    for (int j = 1; j <= m; ++j)
      if (slack[j - 1] != 0.0) as.coeff(row, blk_w, wi(i, j), slack[j - 1]);
  }

  auto sol = backend.solve_sdp(as.build(/*maximize=*/false));
  if (sol.status == SolveStatus::infeasible) return std::nullopt;
  if (sol.status != SolveStatus::optimal) return std::nullopt;

  ExactnessCertificate cert;
  cert.farkas = MatrixXd::Zero(m, m + 1);
  cert.alphas.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= m; ++j) cert.farkas(i, j) = std::max(0.0, sol.primal[wi(i, j)]);
    VectorXd w = cert.farkas.row(i).tail(m);
    cert.alphas[i] = AffineFunc(-A.transpose() * w, cert.farkas(i, 0) + w.dot(b));
  }

  // Verify all three conditions before reporting success.
  MatrixXd Sv = Qd;
  for (int i = 0; i < m; ++i)
    Sv += detail::sym_outer(cert.alphas[i].grad, A.row(i).transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Sv, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol::psd(Sv.cwiseAbs().maxCoeff())) return std::nullopt;
  VectorXd grad = Qd * xbar + inst.c;
  for (int i = 0; i < m; ++i) {
    if (active[i])
      grad += 0.5 * cert.alphas[i].eval(xbar) * A.row(i).transpose();
    else
      grad += 0.5 * (-slack[i]) * cert.alphas[i].grad;
  }
  if (grad.cwiseAbs().maxCoeff() > 1e-5 * (1.0 + inst.c.cwiseAbs().maxCoeff())) return std::nullopt;
  for (int i = 0; i < m; ++i)
    if (!active[i] && std::abs(cert.alphas[i].eval(xbar)) > 1e-6) return std::nullopt;
  return cert;
}

// ---------------------------------------------------------------------------
// Standard-simplex bound: max ell with Q - ell ee' - N PSD, N >= 0.
// ---------------------------------------------------------------------------

inline double stqp_conv_bound(const SymMatrix& Q, bool apply_shift = true,
                              const ConicBackend& backend = default_backend()) {
  const int n = Q.order();
  MatrixXd Qd = Q.dense();
  double t = 0.0;
  if (apply_shift) {
    const double mn = Qd.minCoeff();
    if (mn < 0) t = -mn;
    Qd.array() += t;
  }
  detail::ConicAssembler as;
  const int blk_ell = as.add_free(1);
  const int blk_N = as.add_nonneg(packed_size(n));
  const int blk_S = as.add_psd(n);
  // svec(S) + svec(N-entries) + ell*svec(ee') = svec(Q'); N is stored in
  // isometric coordinates so componentwise nonnegativity carries over.
  MatrixXd ee = MatrixXd::Ones(n, n);
  VectorXd rhs = svec(Qd);
  VectorXd eev = svec(ee);
  for (int k = 0; k < rhs.size(); ++k) {
    const int row = as.add_eq(rhs[k]);
    as.coeff(row, blk_S, k, 1.0);
    as.coeff(row, blk_N, k, 1.0);
    if (eev[k] != 0.0) as.coeff(row, blk_ell, 0, eev[k]);
  }
  as.obj(blk_ell, 0, 1.0);
  auto sol = backend.solve_sdp(as.build(/*maximize=*/true));
  if (sol.status != SolveStatus::optimal)
    throw std::runtime_error("stqp_conv_bound: SDP solve failed");
  return sol.objective_value - t;
}

// ---------------------------------------------------------------------------
// Shor relaxation with partial first-level products for box QPs.
// ---------------------------------------------------------------------------

struct BoxQp {
  MatrixXd Aeq;  // may have zero rows
  VectorXd deq;
  MatrixXd Q0;
  VectorXd c0;
  VectorXd lo, hi;
};

inline double srlt_bound(const BoxQp& in, const ConicBackend& backend = default_backend()) {
  const int n = static_cast<int>(in.c0.size());
  const int me = static_cast<int>(in.deq.size());
  // Rescale to the unit box.
  VectorXd d = in.hi - in.lo;
  if ((d.array() <= 0).any()) throw std::invalid_argument("srlt_bound: empty box");
  MatrixXd D = d.asDiagonal();
  MatrixXd Q = D * in.Q0 * D;
  VectorXd c = D * (in.Q0 * in.lo + in.c0);
  const double con = in.lo.dot(in.Q0 * in.lo) + 2.0 * in.c0.dot(in.lo);
  MatrixXd Ae = me > 0 ? MatrixXd(in.Aeq * D) : MatrixXd(0, n);
  VectorXd de = me > 0 ? VectorXd(in.deq - in.Aeq * in.lo) : VectorXd(0);

  auto pick = [&](int p) {
    VectorXd e = VectorXd::Zero(n + 1);
    e[p] = 1.0;
    return e;
  };
  VectorXd eh = pick(n);

  detail::ConicAssembler as;
  const int blk_M = as.add_psd(n + 1);
  const int blk_x0 = as.add_nonneg(packed_size(n));           // X >= 0
  const int blk_f4 = as.add_nonneg(n * n);                    // e x' - X >= 0
  const int blk_f5 = as.add_nonneg(packed_size(n));           // X - ex' - xe' + ee' >= 0
  {
    const int row = as.add_eq(1.0);  // corner
    as.sym_coeff(row, blk_M, MatrixXd(eh * eh.transpose()));
  }
  for (int i = 0; i < me; ++i) {
    VectorXd a = VectorXd::Zero(n + 1);
    a.head(n) = Ae.row(i).transpose();
    for (int p = 0; p < n; ++p) {  // X a_i = d_i x, row p
      const int row = as.add_eq(0.0);
      as.sym_coeff(row, blk_M, detail::sym_outer(pick(p), a));
      as.sym_coeff(row, blk_M, MatrixXd(-de[i] * detail::sym_outer(pick(p), eh)));
    }
    const int row = as.add_eq(de[i]);  // a_i'x = d_i
    as.sym_coeff(row, blk_M, detail::sym_outer(a, eh));
  }
  for (int p = 0; p < n; ++p)
    for (int q = p; q < n; ++q) {
      const int row = as.add_eq(0.0);  // X_pq >= 0
      as.sym_coeff(row, blk_M, detail::sym_outer(pick(p), pick(q)));
      as.coeff(row, blk_x0, packed_index(p, q), -1.0);
    }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      const int row = as.add_eq(0.0);  // x_q - X_pq >= 0
      as.sym_coeff(row, blk_M, detail::sym_outer(pick(q), eh));
      as.sym_coeff(row, blk_M, MatrixXd(-detail::sym_outer(pick(p), pick(q))));
      as.coeff(row, blk_f4, p * n + q, -1.0);
    }
  for (int p = 0; p < n; ++p)
    for (int q = p; q < n; ++q) {
      const int row = as.add_eq(0.0);  // X_pq - x_p - x_q + 1 >= 0
      as.sym_coeff(row, blk_M, detail::sym_outer(pick(p), pick(q)));
      as.sym_coeff(row, blk_M, MatrixXd(-detail::sym_outer(pick(p), eh)));
      as.sym_coeff(row, blk_M, MatrixXd(-detail::sym_outer(pick(q), eh)));
      as.sym_coeff(row, blk_M, MatrixXd(detail::sym_outer(eh, eh)));
      as.coeff(row, blk_f5, packed_index(p, q), -1.0);
    }
  MatrixXd C0 = MatrixXd::Zero(n + 1, n + 1);
  C0.topLeftCorner(n, n) = Q;
  C0.topRightCorner(n, 1) = c;
  C0.bottomLeftCorner(1, n) = c.transpose();
  as.sym_obj(blk_M, C0);

  auto sol = backend.solve_sdp(as.build(/*maximize=*/false));
  if (sol.status != SolveStatus::optimal) throw std::runtime_error("srlt_bound: SDP solve failed");
  return sol.objective_value + con;
}

}  // namespace qpbc
