#pragma once

// Instance generators, the brute-force optimum oracle, and the benchmark
// runner.  Generation is a pure function of the spec: every random draw
// comes from the counter generator in a documented order.

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "qpbc/bnc.hpp"
#include "qpbc/bounds.hpp"
#include "qpbc/geometry.hpp"
#include "qpbc/instance_io.hpp"
#include "qpbc/model.hpp"
#include "qpbc/rng.hpp"

namespace qpbc {

enum class GenKind { dense_concave, norm_max, stqp, box_qp };

inline const char* to_string(GenKind k) {
  switch (k) {
    case GenKind::dense_concave: return "dense_concave";
    case GenKind::norm_max: return "norm_max";
    case GenKind::stqp: return "stqp";
    case GenKind::box_qp: return "box_qp";
  }
  return "?";
}

struct GenSpec {
  GenKind kind = GenKind::dense_concave;
  int n = 5;
  std::uint64_t seed = 1;
  int equalities = 0;     // box_qp
  bool box = false;       // norm_max: axis-aligned box instead of a dense polytope
  bool indefinite = false;  // dense_concave: mixed-sign spectrum
};

namespace detail {

inline MatrixXd gaussian_matrix(CounterRng& rng, int rows, int cols) {
  MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = rng.next_gaussian();
  return M;
}

// Dense polytope recipe: Ax <= 10b with A gaussian and b uniform(0,1),
// plus sum x <= 100 and x >= 0.  Always nonempty and bounded.
inline void dense_polytope(CounterRng& rng, int n, MatrixXd& A, VectorXd& b) {
  MatrixXd A0 = gaussian_matrix(rng, n, n);
  VectorXd b0(n);
  for (int i = 0; i < n; ++i) b0[i] = rng.next_uniform();
  A = MatrixXd(2 * n + 1, n);
  b = VectorXd(2 * n + 1);
  A.topRows(n) = A0;
  b.head(n) = 10.0 * b0;
  A.row(n).setOnes();
  b[n] = 100.0;
  A.bottomRows(n) = -MatrixXd::Identity(n, n);
  b.tail(n).setZero();
}

inline MatrixXd random_concave_objective(CounterRng& rng, int n, bool indefinite) {
  MatrixXd G = gaussian_matrix(rng, n, n);
  Eigen::JacobiSVD<MatrixXd> svd(G, Eigen::ComputeFullU);
  MatrixXd U = svd.matrixU();
  VectorXd D(n);
  for (int i = 0; i < n; ++i)
    D[i] = indefinite ? rng.next_uniform(-1.0, 1.0) : rng.next_uniform();
  return -U.transpose() * D.asDiagonal() * U;
}

}  // namespace detail

inline InstanceFile generate_instance(const GenSpec& spec) {
  if (spec.n < 2) throw std::invalid_argument("generate_instance: n must be >= 2");
  for (int attempt = 0; attempt < 100; ++attempt) {
    CounterRng rng(spec.seed + attempt, static_cast<std::uint64_t>(spec.kind));
    InstanceFile f;
    std::ostringstream nm;
    nm << to_string(spec.kind) << "-n" << spec.n << "-s" << spec.seed;
    f.name = nm.str();
    const int n = spec.n;
    switch (spec.kind) {
      case GenKind::dense_concave: {
        detail::dense_polytope(rng, n, f.A, f.b);
        f.Q = detail::random_concave_objective(rng, n, spec.indefinite);
        f.c = detail::gaussian_matrix(rng, n, 1);
        break;
      }
      case GenKind::norm_max: {
        if (spec.box) {
          VectorXd lo(n), hi(n);
          for (int i = 0; i < n; ++i) lo[i] = -rng.next_uniform(0.5, 3.0);
          for (int i = 0; i < n; ++i) hi[i] = rng.next_uniform(0.5, 3.0);
          f.A = MatrixXd(2 * n, n);
          f.b = VectorXd(2 * n);
          f.A.topRows(n) = MatrixXd::Identity(n, n);
          f.b.head(n) = hi;
          f.A.bottomRows(n) = -MatrixXd::Identity(n, n);
          f.b.tail(n) = -lo;
        } else {
          detail::dense_polytope(rng, n, f.A, f.b);
        }
        f.Q = -MatrixXd::Identity(n, n);
        f.c = VectorXd::Zero(n);
        break;
      }
      case GenKind::stqp: {
        MatrixXd G = detail::gaussian_matrix(rng, n, n);
        f.Q = 0.5 * (G + G.transpose());
        f.c = VectorXd::Zero(n);
        f.A = -MatrixXd::Identity(n, n);
        f.b = VectorXd::Zero(n);
        f.E = MatrixXd::Ones(1, n);
        f.f = VectorXd::Ones(1);
        break;
      }
      case GenKind::box_qp: {
        f.A = MatrixXd(2 * n, n);
        f.b = VectorXd(2 * n);
        f.A.topRows(n) = MatrixXd::Identity(n, n);
        f.b.head(n).setOnes();
        f.A.bottomRows(n) = -MatrixXd::Identity(n, n);
        f.b.tail(n).setZero();
        f.Q = detail::random_concave_objective(rng, n, false);
        f.c = detail::gaussian_matrix(rng, n, 1);
        if (spec.equalities > 0) {
          MatrixXd E = detail::gaussian_matrix(rng, spec.equalities, n);
          VectorXd x0(n);
          for (int i = 0; i < n; ++i) x0[i] = rng.next_uniform(0.2, 0.8);
          f.E = E;
          f.f = E * x0;
        }
        break;
      }
    }
    try {
      QpInstance inst = f.to_instance();
      auto chk = check_bounded_fulldim(inst.polytope);
      if (chk.bounded) return f;
    } catch (const std::exception&) {
    }
  }
  throw std::runtime_error("generate_instance: could not produce a bounded instance");
}

struct OracleResult {
  double value = 0.0;
  VectorXd argmin;
  bool exact = false;  // true when Q is NSD and vertex enumeration applies
};

// Global optimum by vertex enumeration for concave objectives; otherwise a
// sampled approximation (vertices, feasible samples, local descents).
inline OracleResult brute_force_optimum(const QpInstance& inst,
                                        std::int64_t guard = 2'000'000,
                                        const ConicBackend& backend = default_backend()) {
  inst.validate();
  const MatrixXd Qd = inst.Q.dense();
  OracleResult out;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Qd, Eigen::EigenvaluesOnly);
  const bool concave = es.eigenvalues().maxCoeff() <= tol::psd(Qd.cwiseAbs().maxCoeff());

  auto chk = check_bounded_fulldim(inst.polytope, backend);
  if (!chk.bounded) throw UnboundedPolytopeError();

  const bool reduced = !chk.reduced.implicit_equalities.empty();
  if (reduced && chk.reduced.embed.reduced_dim() == 0) {
    out.value = eval_objective(inst, chk.reduced.embed.origin);
    out.argmin = chk.reduced.embed.origin;
    out.exact = true;
    return out;
  }
  // Work on the full-dimensional inner polytope so active sets are crisp.
  Polytope P = chk.reduced.inner;
  MatrixXd Qs = Qd;
  VectorXd cs = inst.c;
  double con = 0.0;
  const AffineEmbedding& em = chk.reduced.embed;
  if (reduced) {
    Qs = em.basis.transpose() * Qd * em.basis;
    cs = em.basis.transpose() * (Qd * em.origin + inst.c);
    con = eval_objective(Qd, inst.c, em.origin);
  }

  auto vertices = enumerate_vertices(P, guard);
  double best = detail::kInf;
  VectorXd arg;
  for (const auto& v : vertices) {
    const double val = eval_objective(Qs, cs, v.point);
    if (val < best) {
      best = val;
      arg = v.point;
    }
  }
  if (concave) {
    out.value = best + con;
    out.argmin = reduced ? em.to_original(arg) : arg;
    out.exact = true;
    return out;
  }

  // Approximate path: random feasible samples inside the coordinate box
  // hull plus vertex descents from the best candidates.
  CounterRng rng(0xb0c5u, 0);
  BoundedCheck inner_chk = check_bounded_fulldim(P, backend);
  const int n = P.dim();
  std::vector<VectorXd> starts;
  if (arg.size()) starts.push_back(arg);
  for (int tries = 0, kept = 0; tries < 20000 && kept < 1000; ++tries) {
    VectorXd x(n);
    for (int j = 0; j < n; ++j)
      x[j] = rng.next_uniform(inner_chk.coord_min[j], inner_chk.coord_max[j]);
    if (!P.contains(x, 0.0)) continue;
    ++kept;
    const double val = eval_objective(Qs, cs, x);
    if (val < best) {
      best = val;
      arg = x;
    }
    if (kept % 100 == 0) starts.push_back(x);
  }
  for (const auto& s : starts) {
    try {
      auto d = local_vertex_descent(Qs, cs, P, s, backend);
      const double val = eval_objective(Qs, cs, d.vertex.point);
      if (val < best) {
        best = val;
        arg = d.vertex.point;
      }
    } catch (const std::exception&) {
    }
  }
  out.value = best + con;
  out.argmin = reduced ? em.to_original(arg) : arg;
  out.exact = false;
  return out;
}

struct BenchRow {
  std::string instance;
  bool has_oracle = false;
  bool oracle_exact = false;
  double q_star = 0.0;
  double lb = 0.0, ub = 0.0;
  long nodes = 0, cuts = 0;
  double time_sec = 0.0;
  std::string status;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  std::string to_csv() const {
    std::ostringstream os;
    os << "instance,q_star,lb,ub,nodes,cuts,time_sec,status\n";
    os.precision(12);
    for (const auto& r : rows) {
      os << r.instance << ",";
      if (r.has_oracle)
        os << r.q_star;
      os << "," << r.lb << "," << r.ub << "," << r.nodes << "," << r.cuts << "," << r.time_sec
         << "," << r.status << "\n";
    }
    return os.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json rows_j = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json j;
      j["instance"] = r.instance;
      if (r.has_oracle) {
        j["q_star"] = r.q_star;
        j["oracle_exact"] = r.oracle_exact;
      }
      j["lb"] = r.lb;
      j["ub"] = r.ub;
      j["nodes"] = r.nodes;
      j["cuts"] = r.cuts;
      j["time_sec"] = r.time_sec;
      j["status"] = r.status;
      rows_j.push_back(std::move(j));
    }
    return rows_j;
  }
};

inline BenchReport run_benchmark(const std::vector<InstanceFile>& suite, const BnCConfig& cfg,
                                 bool with_oracle = true,
                                 const ConicBackend& backend = default_backend()) {
  BenchReport report;
  for (const auto& file : suite) {
    BenchRow row;
    row.instance = file.name;
    try {
      QpInstance inst = file.to_instance();
      if (with_oracle) {
        try {
          auto oracle = brute_force_optimum(inst, 2'000'000, backend);
          row.has_oracle = true;
          row.oracle_exact = oracle.exact;
          row.q_star = oracle.value;
        } catch (const std::exception&) {
        }
      }
      if (!row.has_oracle && inst.known_optimum) {
        row.has_oracle = true;
        row.oracle_exact = true;
        row.q_star = *inst.known_optimum;
      }
      auto r = solve_bnc(inst, cfg, backend);
      row.lb = r.lower;
      row.ub = r.upper;
      row.nodes = r.nodes_processed;
      row.cuts = r.cuts_added;
      row.time_sec = r.wall_time_sec;
      row.status = to_string(r.status);
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace qpbc
