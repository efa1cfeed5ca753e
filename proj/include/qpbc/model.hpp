#pragma once

// Problem data model: symmetric objective matrix, polytope in Ax <= b form,
// affine multipliers, and the Gram-matrix certificate machinery for
// quadratic nonnegativity.

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpbc/conic.hpp"
#include "qpbc/ipm.hpp"
#include "qpbc/tolerances.hpp"

namespace qpbc {

// Symmetric matrix stored as a packed upper triangle (column-major,
// no scaling).  Symmetric by construction.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(int order) : order_(order), packed_(VectorXd::Zero(packed_size(order))) {
    if (order < 1) throw std::invalid_argument("SymMatrix: order must be >= 1");
  }

  static SymMatrix from_dense(const MatrixXd& M) {
    if (M.rows() != M.cols() || M.rows() < 1)
      throw std::invalid_argument("SymMatrix: dense input must be square");
    if (!M.allFinite()) throw std::invalid_argument("SymMatrix: non-finite entries");
    SymMatrix out(static_cast<int>(M.rows()));
    int k = 0;
    for (int j = 0; j < out.order_; ++j)
      for (int i = 0; i <= j; ++i) out.packed_[k++] = 0.5 * (M(i, j) + M(j, i));
    return out;
  }

  static SymMatrix identity(int order) {
    SymMatrix out(order);
    for (int i = 0; i < order; ++i) out.set(i, i, 1.0);
    return out;
  }

  int order() const { return order_; }
  double operator()(int i, int j) const { return packed_[packed_index(i, j)]; }
  void set(int i, int j, double v) { packed_[packed_index(i, j)] = v; }
  const VectorXd& packed() const { return packed_; }

  MatrixXd dense() const {
    MatrixXd M(order_, order_);
    for (int j = 0; j < order_; ++j)
      for (int i = 0; i <= j; ++i) M(i, j) = M(j, i) = (*this)(i, j);
    return M;
  }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(dense(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  double inf_norm() const { return packed_.size() ? packed_.cwiseAbs().maxCoeff() : 0.0; }

 private:
  int order_ = 0;
  VectorXd packed_;
};

struct Polytope {
  MatrixXd A;
  VectorXd b;

  int rows() const { return static_cast<int>(A.rows()); }
  int dim() const { return static_cast<int>(A.cols()); }

  void validate() const {
    if (rows() < 1 || dim() < 1) throw std::invalid_argument("polytope: empty data");
    if (b.size() != rows()) throw std::invalid_argument("polytope: rhs size mismatch");
    if (!A.allFinite() || !b.allFinite())
      throw std::invalid_argument("polytope: non-finite entries");
  }

  bool contains(const VectorXd& x, double eps = tol::feas) const {
    return ((A * x - b).array() <= eps).all();
  }

  Polytope with_row(const VectorXd& row, double rhs) const {
    Polytope out;
    out.A = MatrixXd(rows() + 1, dim());
    out.A << A, row.transpose();
    out.b = VectorXd(rows() + 1);
    out.b << b, rhs;
    return out;
  }
};

struct AffineFunc {
  VectorXd grad;
  double offset = 0.0;

  AffineFunc() = default;
  AffineFunc(VectorXd g, double f) : grad(std::move(g)), offset(f) {}
  static AffineFunc zero(int n) { return AffineFunc(VectorXd::Zero(n), 0.0); }

  double eval(const VectorXd& x) const { return grad.dot(x) + offset; }
  double norm() const {
    const double g = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    return std::max(std::abs(offset), g);
  }
};

struct QpInstance {
  SymMatrix Q;
  VectorXd c;
  Polytope polytope;
  std::string name;
  std::optional<double> known_optimum;

  int n() const { return Q.order(); }

  void validate() const {
    polytope.validate();
    if (c.size() != n()) throw std::invalid_argument("instance: c length mismatch");
    if (polytope.dim() != n()) throw std::invalid_argument("instance: polytope dim mismatch");
    if (!c.allFinite()) throw std::invalid_argument("instance: non-finite c");
  }
};

struct MultiplierCertificate {
  std::vector<AffineFunc> alphas;
  double level = 0.0;
};

inline double eval_objective(const MatrixXd& Q, const VectorXd& c, const VectorXd& x) {
  return x.dot(Q * x) + 2.0 * c.dot(x);
}

inline double eval_objective(const QpInstance& inst, const VectorXd& x) {
  if (x.size() != inst.n()) throw std::invalid_argument("eval_objective: dimension mismatch");
  return eval_objective(inst.Q.dense(), inst.c, x);
}

// Gram matrix of q(x) - level + sum_i alpha_i(x) (A_i x - b_i) in homogenized
// coordinates (x, 1).  The certificate is valid iff this matrix is PSD.
inline SymMatrix certificate_gram(const QpInstance& inst, const MultiplierCertificate& cert) {
  const int n = inst.n();
  const int m = inst.polytope.rows();
  if (static_cast<int>(cert.alphas.size()) != m)
    throw std::invalid_argument("certificate_gram: multiplier count mismatch");
  MatrixXd G = MatrixXd::Zero(n + 1, n + 1);
  G.topLeftCorner(n, n) = inst.Q.dense();
  G.topRightCorner(n, 1) = inst.c;
  G.bottomLeftCorner(1, n) = inst.c.transpose();
  G(n, n) = -cert.level;
  for (int i = 0; i < m; ++i) {
    const AffineFunc& a = cert.alphas[i];
    if (a.grad.size() != n) throw std::invalid_argument("certificate_gram: alpha dim mismatch");
    VectorXd u(n + 1), v(n + 1);
    u << a.grad, a.offset;
    v << inst.polytope.A.row(i).transpose(), -inst.polytope.b[i];
    G += 0.5 * (u * v.transpose() + v * u.transpose());
  }
  return SymMatrix::from_dense(G);
}

inline bool gram_is_psd(const SymMatrix& G) {
  return G.min_eigenvalue() >= -tol::psd(G.inf_norm());
}

enum class NonnegStatus { ok, empty_polytope, unbounded_below };

struct NonnegResult {
  bool nonneg = false;
  NonnegStatus status = NonnegStatus::ok;
  double min_value = 0.0;
};

// Is alpha(x) >= 0 on all of P?  One LP: minimize alpha over P.
inline NonnegResult is_nonnegative_on(const AffineFunc& alpha, const Polytope& P,
                                      const ConicBackend& backend = default_backend()) {
  if (alpha.grad.size() != P.dim())
    throw std::invalid_argument("is_nonnegative_on: dimension mismatch");
  LpProblem lp;
  lp.c = alpha.grad;
  lp.A = P.A;
  lp.b = P.b;
  auto r = backend.solve_lp(lp);
  NonnegResult out;
  if (r.status == SolveStatus::infeasible) {
    out.status = NonnegStatus::empty_polytope;
    return out;
  }
  if (r.status == SolveStatus::unbounded) {
    out.status = NonnegStatus::unbounded_below;
    out.nonneg = false;
    return out;
  }
  if (!r.ok()) {
    out.status = NonnegStatus::empty_polytope;
    return out;
  }
  out.min_value = r.objective_value + alpha.offset;
  out.nonneg = out.min_value >= -tol::feas;
  return out;
}

}  // namespace qpbc
