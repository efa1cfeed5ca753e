#pragma once

// Branch-and-cut driver for concave QPs: level-synchronous two-queue
// search with per-node SDP bounds capped at the incumbent, convex-QP
// incumbent extraction plus vertex descent, concavity cuts at eligible
// nondegenerate vertices, and Chebyshev-center branching along random
// directions keyed by (seed, node id).

#include <Eigen/Dense>
#include <atomic>
#include <chrono>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "qpbc/bounds.hpp"
#include "qpbc/cuts.hpp"
#include "qpbc/geometry.hpp"
#include "qpbc/ipm.hpp"
#include "qpbc/model.hpp"
#include "qpbc/rng.hpp"

namespace qpbc {

enum class BnCStatus { optimal_within_eps, time_limit, node_limit };

inline const char* to_string(BnCStatus s) {
  switch (s) {
    case BnCStatus::optimal_within_eps: return "optimal_within_eps";
    case BnCStatus::time_limit: return "time_limit";
    case BnCStatus::node_limit: return "node_limit";
  }
  return "?";
}

struct BnCConfig {
  double eps = 1e-4;
  double time_limit_sec = 100.0;
  long max_nodes = 200000;
  std::uint64_t seed = 0;
  BoundVariant bound_variant = BoundVariant::L;
  bool parallel = false;
};

struct NodeEvent {
  long id = 0;
  long parent = -1;
  double lower = 0.0;  // node bound l_k
  double upper = 0.0;  // incumbent value after processing the node
  std::string action;  // fathomed_gap | fathomed_empty | cut_added | branched
};

struct BnCResult {
  BnCStatus status = BnCStatus::optimal_within_eps;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  VectorXd incumbent;
  long nodes_processed = 0;
  long cuts_added = 0;
  double wall_time_sec = 0.0;
  std::vector<NodeEvent> events;
  std::vector<double> lower_history;  // global lower bound per outer iteration
};

// l = min over fathomed and open node bounds; -inf when both are empty.
inline double update_lower_bound(const std::vector<double>& fathomed,
                                 const std::vector<double>& open) {
  if (fathomed.empty() && open.empty()) return -std::numeric_limits<double>::infinity();
  double l = std::numeric_limits<double>::infinity();
  for (double v : fathomed) l = std::min(l, v);
  for (double v : open) l = std::min(l, v);
  return l;
}

namespace detail {

struct BnCNodeState {
  long id = 0;
  long parent = -1;
  Polytope poly;
  double lower = -kInf;
  int depth = 0;
};

struct NodeWork {
  bool empty = false;
  bool sdp_failed = false;
  double bound = -kInf;
  bool has_vertex = false;
  Vertex vertex;
  double vertex_value = kInf;
};

}  // namespace detail

inline BnCResult solve_bnc(const QpInstance& inst, const BnCConfig& cfg,
                           const ConicBackend& backend = default_backend()) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  inst.validate();
  if (cfg.eps <= 0) throw std::invalid_argument("solve_bnc: eps must be positive");

  const MatrixXd Qd = inst.Q.dense();
  {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Qd, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().maxCoeff() > tol::psd(Qd.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("solve_bnc: Q must be negative semidefinite");
  }

  auto chk = check_bounded_fulldim(inst.polytope, backend);
  if (!chk.bounded) throw UnboundedPolytopeError();
  const bool reduced = !chk.reduced.implicit_equalities.empty();
  const AffineEmbedding embed =
      reduced ? chk.reduced.embed : AffineEmbedding::identity(inst.n());

  BnCResult res;
  if (reduced && chk.reduced.embed.reduced_dim() == 0) {
    res.status = BnCStatus::optimal_within_eps;
    res.incumbent = chk.reduced.embed.origin;
    res.upper = res.lower = eval_objective(Qd, inst.c, res.incumbent);
    res.nodes_processed = 1;
    res.wall_time_sec = std::chrono::duration<double>(clock::now() - t_start).count();
    return res;
  }

  Polytope P0 = chk.reduced.inner;
  MatrixXd Qs = Qd;
  VectorXd cs = inst.c;
  double con = 0.0;
  if (reduced) {
    const MatrixXd& N = embed.basis;
    const VectorXd& x0 = embed.origin;
    Qs = N.transpose() * Qd * N;
    cs = N.transpose() * (Qd * x0 + inst.c);
    con = eval_objective(Qd, inst.c, x0);
  }
  auto qval = [&](const VectorXd& x) { return eval_objective(Qs, cs, x); };

  // Coordinate magnitude of the root, shared by every node's bound solve.
  double coord_scale = 1.0;
  for (int j = 0; j < inst.n(); ++j)
    coord_scale =
        std::max({coord_scale, std::abs(chk.coord_min[j]), std::abs(chk.coord_max[j])});
  if (reduced) coord_scale *= std::sqrt(static_cast<double>(inst.n()));

  double u = detail::kInf;
  VectorXd incumbent;
  std::vector<double> fathomed_bounds;
  double global_l = -detail::kInf;

  std::vector<detail::BnCNodeState> level;
  {
    detail::BnCNodeState root;
    root.id = 1;
    root.poly = P0;
    level.push_back(std::move(root));
  }
  long next_id = 1;
  bool out_of_time = false, out_of_nodes = false;

  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t_start).count(); };

  auto process_a = [&](const detail::BnCNodeState& node, double u_level) {
    detail::NodeWork w;
    {
      LpProblem lp;
      lp.c = VectorXd::Zero(node.poly.dim());
      lp.A = node.poly.A;
      lp.b = node.poly.b;
      auto fr = backend.solve_lp(lp);
      if (fr.status == SolveStatus::infeasible) {
        w.empty = true;
        return w;
      }
    }
    std::optional<double> cap;
    if (std::isfinite(u_level)) cap = u_level;
    auto core = detail::solve_bound_core(Qs, cs, node.poly, cfg.bound_variant, cap, backend,
                                         coord_scale);
    VectorXd start;
    if (core.status == SolveStatus::optimal) {
      w.bound = core.ell;
      // Convex underestimator QP over the node polytope.
      MatrixXd H = Qs - node.poly.A.transpose() * core.Y * node.poly.A;
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
      H = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
          es.eigenvectors().transpose();
      QpProblem qp;
      qp.H = H;
      qp.g = cs + node.poly.A.transpose() * (core.Y * node.poly.b + 0.5 * core.y);
      qp.A = node.poly.A;
      qp.b = node.poly.b;
      try {
        auto qr = backend.solve_convex_qp(qp);
        if (qr.ok()) start = qr.x;
      } catch (const std::exception&) {
      }
    } else {
      w.sdp_failed = true;
    }
    try {
      if (start.size() == 0) start = chebyshev_center(node.poly, backend).center;
      auto desc = local_vertex_descent(Qs, cs, node.poly, start, backend);
      w.vertex = desc.vertex;
      w.vertex_value = qval(desc.vertex.point);
      w.has_vertex = true;
    } catch (const std::exception&) {
    }
    return w;
  };

  while (!level.empty()) {
    const double u_level = u;
    std::vector<detail::NodeWork> works(level.size());
    const bool run_parallel = cfg.parallel && level.size() > 1;
    if (run_parallel) {
      std::atomic<size_t> next{0};
      const unsigned nt = static_cast<unsigned>(
          std::min<size_t>(std::thread::hardware_concurrency(), level.size()));
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < std::max(1u, nt); ++t)
        pool.emplace_back([&] {
          size_t i;
          while ((i = next.fetch_add(1)) < level.size()) works[i] = process_a(level[i], u_level);
        });
      for (auto& th : pool) th.join();
    } else {
      for (size_t i = 0; i < level.size(); ++i) works[i] = process_a(level[i], u_level);
    }

    std::vector<detail::BnCNodeState> next_level;
    for (size_t i = 0; i < level.size(); ++i) {
      auto& node = level[i];
      auto& w = works[i];
      ++res.nodes_processed;
      if (res.nodes_processed > cfg.max_nodes) out_of_nodes = true;

      auto log = [&](const char* action, double lk) {
        res.events.push_back({node.id, node.parent, lk + con, u + con, action});
      };
      if (w.empty) {
        log("fathomed_empty", node.lower);
        continue;
      }
      if (!w.sdp_failed) node.lower = std::max(node.lower, w.bound);
      if (w.has_vertex && w.vertex_value < u) {
        u = w.vertex_value;
        incumbent = w.vertex.point;
      }
      if (!(node.lower + cfg.eps < u)) {
        fathomed_bounds.push_back(node.lower);
        log("fathomed_gap", node.lower);
        continue;
      }
      if (out_of_time || out_of_nodes) {
        // Keep the node open so the reported lower bound stays valid.
        next_level.push_back(node);
        continue;
      }

      Polytope poly = node.poly;
      bool fathomed_by_cut = false;
      if (!w.sdp_failed && w.has_vertex && !w.vertex.degenerate) {
        try {
          auto frame = local_frame(poly, w.vertex);
          if (frame && qval(w.vertex.point) >= u - cfg.eps) {
            VectorXd t = tuy_extension(Qs, cs, *frame, u - cfg.eps);
            bool any_finite = false;
            for (int k = 0; k < t.size(); ++k) any_finite |= !std::isinf(t[k]);
            if (any_finite) {
              auto kon = konno_step(Qs, cs, poly, *frame, t, u, cfg.eps, backend);
              if (kon.eligible) {
                auto cut = make_concavity_cut(poly, *frame, kon.s);
                poly = poly.with_row(cut.row_a, cut.row_b);
                ++res.cuts_added;
                log("cut_added", node.lower);
                LpProblem lp;
                lp.c = VectorXd::Zero(poly.dim());
                lp.A = poly.A;
                lp.b = poly.b;
                auto fr = backend.solve_lp(lp);
                if (fr.status == SolveStatus::infeasible) {
                  fathomed_bounds.push_back(std::max(node.lower, u - cfg.eps));
                  log("fathomed_empty", std::max(node.lower, u - cfg.eps));
                  fathomed_by_cut = true;
                }
              }
            }
          }
        } catch (const std::exception&) {
          // Any cut failure degrades to plain branching.
        }
      }
      if (fathomed_by_cut) continue;

      try {
        auto ball = chebyshev_center(poly, backend);
        CounterRng rng(cfg.seed, static_cast<std::uint64_t>(node.id));
        VectorXd d(poly.dim());
        for (int k = 0; k < d.size(); ++k) d[k] = rng.next_gaussian();
        if (d.norm() < 1e-12) d = VectorXd::Unit(poly.dim(), 0);
        d.normalize();
        auto [p1, p2] = partition_at(poly, ball.center, d);
        detail::BnCNodeState c1, c2;
        c1.id = ++next_id;
        c1.parent = node.id;
        c1.poly = std::move(p1);
        c1.lower = node.lower;
        c1.depth = node.depth + 1;
        c2.id = ++next_id;
        c2.parent = node.id;
        c2.poly = std::move(p2);
        c2.lower = node.lower;
        c2.depth = node.depth + 1;
        next_level.push_back(std::move(c1));
        next_level.push_back(std::move(c2));
        log("branched", node.lower);
      } catch (const std::exception&) {
        // Could not branch (degenerate geometry): fathom conservatively.
        fathomed_bounds.push_back(node.lower);
        log("fathomed_gap", node.lower);
      }
    }

    std::vector<double> open;
    open.reserve(next_level.size());
    for (const auto& n : next_level) open.push_back(n.lower);
    global_l = update_lower_bound(fathomed_bounds, open);
    res.lower_history.push_back(global_l + con);

    if (elapsed() > cfg.time_limit_sec) out_of_time = true;
    if (std::isfinite(u) && u - global_l <= cfg.eps) {
      level.clear();
      break;
    }
    if (next_level.empty()) {
      level.clear();
      break;
    }
    if (out_of_time || out_of_nodes) {
      level = std::move(next_level);
      break;
    }
    level = std::move(next_level);
  }

  const bool gap_closed =
      std::isfinite(u) && u - global_l <= cfg.eps + 1e-9 * (1.0 + std::abs(u));
  if (gap_closed || (!out_of_time && !out_of_nodes))
    res.status = BnCStatus::optimal_within_eps;
  else if (out_of_time)
    res.status = BnCStatus::time_limit;
  else
    res.status = BnCStatus::node_limit;

  if (std::isfinite(u)) {
    res.upper = u + con;
    res.incumbent = embed.to_original(incumbent);
    global_l = std::min(global_l, u);
  }
  res.lower = std::isfinite(global_l) ? global_l + con : global_l;
  res.wall_time_sec = elapsed();
  return res;
}

}  // namespace qpbc
