#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpbc/tolerances.hpp"

namespace qpbc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Symmetric vectorization.
//
// Symmetric matrices of order s are stored as packed upper triangles of
// length s(s+1)/2, column-major: (0,0), (0,1), (1,1), (0,2), ...  The
// isometric variant scales off-diagonal entries by sqrt(2) so that
// <svec(A), svec(B)> = <A, B>_F.
// ---------------------------------------------------------------------------

inline int packed_size(int order) { return order * (order + 1) / 2; }

inline int packed_index(int i, int j) {
  if (i > j) std::swap(i, j);
  return j * (j + 1) / 2 + i;
}

inline VectorXd svec(const MatrixXd& S, bool isometric = true) {
  const int s = static_cast<int>(S.rows());
  const double r2 = isometric ? std::sqrt(2.0) : 1.0;
  VectorXd v(packed_size(s));
  int k = 0;
  for (int j = 0; j < s; ++j)
    for (int i = 0; i <= j; ++i) v[k++] = (i == j) ? S(i, j) : r2 * 0.5 * (S(i, j) + S(j, i));
  return v;
}

inline MatrixXd smat(const VectorXd& v, int order, bool isometric = true) {
  const double inv_r2 = isometric ? 1.0 / std::sqrt(2.0) : 1.0;
  MatrixXd S(order, order);
  int k = 0;
  for (int j = 0; j < order; ++j)
    for (int i = 0; i <= j; ++i) {
      const double x = (i == j) ? v[k] : inv_r2 * v[k];
      S(i, j) = x;
      S(j, i) = x;
      ++k;
    }
  return S;
}

// ---------------------------------------------------------------------------
// Problem and solution types for the dense conic backend.
// ---------------------------------------------------------------------------

enum class SolveStatus {
  optimal,
  infeasible,
  unbounded,
  numerical_failure,
  iteration_limit,
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_failure: return "numerical_failure";
    case SolveStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

struct ConeBlock {
  enum class Kind { free, nonneg, psd };
  Kind kind = Kind::free;
  int dim = 0;    // scalar variables in the block (psd: order*(order+1)/2)
  int order = 0;  // psd only

  static ConeBlock make_free(int n) { return {Kind::free, n, 0}; }
  static ConeBlock make_nonneg(int n) { return {Kind::nonneg, n, 0}; }
  static ConeBlock make_psd(int order) { return {Kind::psd, packed_size(order), order}; }
};

// Standard-form conic program over block-structured scalar variables:
//
//   min / max  objective . x
//   s.t.       eq_A x = eq_b
//              x_block in cone(block)   for every block
//
// PSD blocks hold isometric svec coordinates.
struct ConicProblem {
  VectorXd objective;
  MatrixXd eq_A;
  VectorXd eq_b;
  std::vector<ConeBlock> blocks;
  bool maximize = false;

  int num_vars() const {
    int n = 0;
    for (const auto& b : blocks) n += b.dim;
    return n;
  }

  void validate() const {
    const int n = num_vars();
    if (objective.size() != n) throw std::invalid_argument("conic: objective size mismatch");
    if (eq_A.rows() != eq_b.size()) throw std::invalid_argument("conic: equality rhs mismatch");
    if (eq_A.rows() > 0 && eq_A.cols() != n)
      throw std::invalid_argument("conic: equality map width mismatch");
    if (!objective.allFinite() || (eq_A.size() > 0 && !eq_A.allFinite()) ||
        (eq_b.size() > 0 && !eq_b.allFinite()))
      throw std::invalid_argument("conic: non-finite data");
  }
};

struct ConicSolution {
  SolveStatus status = SolveStatus::numerical_failure;
  VectorXd primal;     // block-structured variable values
  VectorXd dual;       // multipliers for the equality rows
  VectorXd cone_dual;  // dual slack per cone row (nonneg/psd blocks)
  double objective_value = 0.0;
  double gap = 0.0;
  int iterations = 0;

  bool ok() const { return status == SolveStatus::optimal; }
};

// min c'x  s.t.  A x <= b,  E x = f   (E may be empty)
struct LpProblem {
  VectorXd c;
  MatrixXd A;
  VectorXd b;
  MatrixXd E;
  VectorXd f;
};

struct LpSolution {
  SolveStatus status = SolveStatus::numerical_failure;
  VectorXd x;
  VectorXd ineq_dual;  // one multiplier per row of A, >= 0
  VectorXd eq_dual;    // one multiplier per row of E
  double objective_value = 0.0;
  int iterations = 0;

  bool ok() const { return status == SolveStatus::optimal; }
};

// min x'Hx + 2g'x  s.t.  A x <= b,  with H PSD.
struct QpProblem {
  MatrixXd H;
  VectorXd g;
  MatrixXd A;
  VectorXd b;
};

struct QpSolution {
  SolveStatus status = SolveStatus::numerical_failure;
  VectorXd x;
  VectorXd ineq_dual;
  double objective_value = 0.0;
  int iterations = 0;

  bool ok() const { return status == SolveStatus::optimal; }
};

} // namespace qpbc
