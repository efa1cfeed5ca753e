// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qpbc/bench.hpp"
#include "qpbc/bnc.hpp"
#include "qpbc/bounds.hpp"
#include "qpbc/cuts.hpp"

using namespace qpbc;

namespace {

struct CheckError {
  std::string msg;
};

void req(bool cond, const std::string& msg) {
  if (!cond) throw CheckError{msg};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// Moderate-scale random concave/indefinite instance: values stay O(1)-O(10)
// so absolute tolerances in the 1e-5 range are meaningful.
QpInstance tame_instance(int n, std::uint64_t seed, bool indefinite) {
  CounterRng rng(seed, 0xacce);
  QpInstance inst;
  MatrixXd A0(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A0(i, j) = rng.next_gaussian();
  VectorXd b0(n);
  for (int i = 0; i < n; ++i) b0[i] = rng.next_uniform(0.5, 1.5);
  inst.polytope.A = MatrixXd(2 * n + 1, n);
  inst.polytope.b = VectorXd(2 * n + 1);
  inst.polytope.A.topRows(n) = A0;
  inst.polytope.b.head(n) = b0;
  inst.polytope.A.row(n).setOnes();
  inst.polytope.b[n] = 3.0;
  inst.polytope.A.bottomRows(n) = -MatrixXd::Identity(n, n);
  inst.polytope.b.tail(n).setZero();
  MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = rng.next_gaussian();
  Eigen::JacobiSVD<MatrixXd> svd(G, Eigen::ComputeFullU);
  VectorXd D(n);
  for (int i = 0; i < n; ++i)
    D[i] = indefinite ? rng.next_uniform(-1.0, 1.0) : rng.next_uniform(0.05, 1.0);
  inst.Q = SymMatrix::from_dense(
      MatrixXd(-svd.matrixU().transpose() * D.asDiagonal() * svd.matrixU()));
  VectorXd c(n);
  for (int i = 0; i < n; ++i) c[i] = 0.5 * rng.next_gaussian();
  inst.c = c;
  std::ostringstream nm;
  nm << "tame-n" << n << "-s" << seed;
  inst.name = nm.str();
  return inst;
}

QpInstance bilinear_unit_box() {
  QpInstance inst;
  MatrixXd Q(2, 2);
  Q << 0, 1, 1, 0;
  inst.Q = SymMatrix::from_dense(Q);
  inst.c = VectorXd::Zero(2);
  inst.polytope.A = MatrixXd(4, 2);
  inst.polytope.A << 1, 0, 0, 1, -1, 0, 0, -1;
  inst.polytope.b = (VectorXd(4) << 1, 1, 0, 0).finished();
  return inst;
}

double vertex_oracle(const QpInstance& inst) {
  double best = qpbc::detail::kInf;
  for (const auto& v : enumerate_vertices(inst.polytope))
    best = std::min(best, eval_objective(inst, v.point));
  return best;
}

// ---------------------------------------------------------------------------

void criterion_1() {
  auto inst = bilinear_unit_box();
  auto L = solve_bound(inst, BoundVariant::L);
  req(L.ok(), "bound L did not solve");
  req(std::abs(L.value) <= 1e-6, "bound L on 2x1x2 = " + fmt(L.value) + ", expected 0");
  auto L1 = solve_bound(inst, BoundVariant::L1);
  req(L1.ok(), "bound L1 did not solve");
  req(L1.value <= -0.125 + 1e-6, "bound L1 = " + fmt(L1.value) + ", expected <= -1/8");
}

void criterion_2() {
  int done = 0;
  for (std::uint64_t seed = 1; done < 20; ++seed) {
    const int n = 3 + static_cast<int>(seed % 4);  // m = 2n+1 <= 14 for n <= 6
    QpInstance inst = tame_instance(n, seed, /*indefinite=*/seed % 2 == 0);
    auto L = solve_bound(inst, BoundVariant::L);
    auto R = solve_relaxation(inst);
    req(L.ok() && R.ok(), "solver failure on " + inst.name);
    req(std::abs(L.value - R.value) <= 1e-5,
        "strong duality gap " + fmt(std::abs(L.value - R.value)) + " on " + inst.name);
    ++done;
  }
}

void criterion_3() {
  int done = 0;
  for (std::uint64_t seed = 100; done < 35; ++seed) {
    const int n = 3 + static_cast<int>(seed % 6);
    QpInstance inst = tame_instance(n, seed, false);
    const double oracle = vertex_oracle(inst);
    auto L = solve_bound(inst, BoundVariant::L);
    req(L.ok(), "bound L failed on " + inst.name);
    req(L.value <= oracle + 1e-6, "L " + fmt(L.value) + " above oracle " + fmt(oracle));
    auto L1 = solve_bound(inst, BoundVariant::L1);
    req(L1.ok(), "bound L1 failed on " + inst.name);
    req(L1.value <= oracle + 1e-6, "L1 " + fmt(L1.value) + " above oracle " + fmt(oracle));
    ++done;
  }
  for (std::uint64_t seed = 1; done < 50; ++seed) {
    GenSpec spec;
    spec.kind = GenKind::box_qp;
    spec.n = 3 + static_cast<int>(seed % 6);
    spec.seed = seed;
    QpInstance inst = generate_instance(spec).to_instance();
    const double oracle = vertex_oracle(inst);
    for (auto variant : {BoundVariant::L, BoundVariant::L1, BoundVariant::BOX}) {
      auto br = solve_bound(inst, variant);
      req(br.ok(), "bound failed on box instance");
      req(br.value <= oracle + 1e-6,
          std::string(to_string(variant)) + " " + fmt(br.value) + " above oracle " + fmt(oracle));
    }
    ++done;
  }
}

void criterion_4() {
  // Convex instances with a planted interior optimum.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const int n = 3 + static_cast<int>(seed % 3);
    QpInstance inst = tame_instance(n, 500 + seed, false);
    MatrixXd Qd = -inst.Q.dense() + 0.1 * MatrixXd::Identity(n, n);  // PD
    inst.Q = SymMatrix::from_dense(Qd);
    auto ball = chebyshev_center(inst.polytope);
    inst.c = -Qd * ball.center;  // unconstrained optimum at the center
    const double opt = eval_objective(inst, ball.center);
    auto br = solve_bound(inst, BoundVariant::L);
    req(br.ok(), "bound failed on convex instance");
    req(std::abs(br.value - opt) <= 1e-5,
        "convex bound " + fmt(br.value) + " vs optimum " + fmt(opt));
  }
  // Convex boxes against a projected-gradient oracle.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const int n = 3;
    CounterRng rng(700 + seed, 0);
    MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = rng.next_gaussian();
    MatrixXd H = G * G.transpose() / n + 0.05 * MatrixXd::Identity(n, n);
    VectorXd g(n);
    for (int j = 0; j < n; ++j) g[j] = rng.next_gaussian();
    QpInstance inst;
    inst.Q = SymMatrix::from_dense(H);
    inst.c = g;
    inst.polytope.A = MatrixXd(2 * n, n);
    inst.polytope.A.topRows(n) = MatrixXd::Identity(n, n);
    inst.polytope.A.bottomRows(n) = -MatrixXd::Identity(n, n);
    inst.polytope.b = VectorXd::Ones(2 * n);
    const double opt =
        testing::projected_gradient_box_qp(H, g, -VectorXd::Ones(n), VectorXd::Ones(n));
    auto br = solve_bound(inst, BoundVariant::L);
    req(br.ok(), "bound failed on convex box");
    req(std::abs(br.value - opt) <= 1e-5,
        "convex box bound " + fmt(br.value) + " vs oracle " + fmt(opt));
  }
  // Singletons.
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const int n = 2 + static_cast<int>(seed);
    CounterRng rng(900 + seed, 0);
    VectorXd pt(n);
    for (int j = 0; j < n; ++j) pt[j] = rng.next_gaussian();
    MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = rng.next_gaussian();
    QpInstance inst;
    inst.Q = SymMatrix::from_dense(MatrixXd(0.5 * (G + G.transpose())));
    inst.c = VectorXd::Zero(n);
    inst.polytope.A = MatrixXd(2 * n, n);
    inst.polytope.A.topRows(n) = MatrixXd::Identity(n, n);
    inst.polytope.A.bottomRows(n) = -MatrixXd::Identity(n, n);
    inst.polytope.b = VectorXd(2 * n);
    inst.polytope.b.head(n) = pt;
    inst.polytope.b.tail(n) = -pt;
    auto br = solve_bound(inst, BoundVariant::L);
    req(br.ok(), "singleton bound failed");
    req(std::abs(br.value - eval_objective(inst, pt)) <= 1e-8,
        "singleton bound " + fmt(br.value) + " vs q(x) " + fmt(eval_objective(inst, pt)));
  }
  // Exactness certificate for -x^2 on [0,1] at xbar = 1.
  QpInstance ns;
  ns.Q = SymMatrix::from_dense(MatrixXd::Constant(1, 1, -1.0));
  ns.c = VectorXd::Zero(1);
  ns.polytope.A = (MatrixXd(2, 1) << 1, -1).finished();
  ns.polytope.b = (VectorXd(2) << 1, 0).finished();
  req(hgg_exactness_check(ns, VectorXd::Ones(1)).has_value(),
      "no exactness certificate at xbar=1 for -x^2 on [0,1]");
}

void criterion_5() {
  CounterRng rng(5150, 0);
  // Representation independence under redundant-row augmentation.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    QpInstance inst = tame_instance(4, 200 + seed, seed % 2 == 0);
    auto base = solve_bound(inst, BoundVariant::L);
    req(base.ok(), "base bound failed");
    QpInstance aug = inst;
    const int m = inst.polytope.rows();
    aug.polytope.A = MatrixXd(m + 2, inst.n());
    aug.polytope.b = VectorXd(m + 2);
    aug.polytope.A.topRows(m) = inst.polytope.A;
    aug.polytope.b.head(m) = inst.polytope.b;
    const int r1 = static_cast<int>(rng.next_u64() % m);
    const int r2 = static_cast<int>(rng.next_u64() % m);
    const double sc = rng.next_uniform(0.5, 2.0);
    aug.polytope.A.row(m) = sc * inst.polytope.A.row(r1);  // duplicate, rescaled
    aug.polytope.b[m] = sc * inst.polytope.b[r1];
    const double lam = rng.next_uniform(0.1, 0.9);
    aug.polytope.A.row(m + 1) =
        lam * inst.polytope.A.row(r1) + (1.0 - lam) * inst.polytope.A.row(r2);
    aug.polytope.b[m + 1] =
        lam * inst.polytope.b[r1] + (1.0 - lam) * inst.polytope.b[r2] + rng.next_uniform(0.0, 0.5);
    auto ab = solve_bound(aug, BoundVariant::L);
    req(ab.ok(), "augmented bound failed");
    req(std::abs(ab.value - base.value) <= 1e-5,
        "representation dependence " + fmt(std::abs(ab.value - base.value)));
  }
  // Affine invariance.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    QpInstance inst = tame_instance(3, 300 + seed, false);
    auto base = solve_bound(inst, BoundVariant::L);
    MatrixXd H(3, 3);
    do {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) H(i, j) = rng.next_gaussian();
    } while (std::abs(H.determinant()) < 0.3);
    VectorXd h(3);
    for (int j = 0; j < 3; ++j) h[j] = rng.next_gaussian();
    const MatrixXd Qd = inst.Q.dense();
    QpInstance tr;
    tr.Q = SymMatrix::from_dense(MatrixXd(H.transpose() * Qd * H));
    tr.c = H.transpose() * (Qd * h + inst.c);
    tr.polytope.A = inst.polytope.A * H;
    tr.polytope.b = inst.polytope.b - inst.polytope.A * h;
    const double c0 = h.dot(Qd * h) + 2.0 * inst.c.dot(h);
    auto tb = solve_bound(tr, BoundVariant::L);
    req(tb.ok(), "transformed bound failed");
    req(std::abs(base.value - (tb.value + c0)) <= 1e-5,
        "affine variance " + fmt(std::abs(base.value - (tb.value + c0))));
  }
  // Inclusion monotonicity on nested pairs.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    QpInstance outer = tame_instance(4, 400 + seed, seed % 3 == 0);
    auto ob = solve_bound(outer, BoundVariant::L);
    auto ball = chebyshev_center(outer.polytope);
    VectorXd d(4);
    for (int j = 0; j < 4; ++j) d[j] = rng.next_gaussian();
    d.normalize();
    QpInstance inner = outer;
    inner.polytope = outer.polytope.with_row(d, d.dot(ball.center));
    auto ib = solve_bound(inner, BoundVariant::L);
    req(ob.ok() && ib.ok(), "inclusion bounds failed");
    // Shrinking the feasible set can only raise the bound.
    req(ib.value >= ob.value - 1e-5,
        "inclusion violated: inner " + fmt(ib.value) + " outer " + fmt(ob.value));
  }
}

void criterion_6() {
  // StQP equivalence.
  CounterRng rng(6001, 0);
  for (int t = 0; t < 10; ++t) {
    const int n = 3 + t % 6;
    MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = rng.next_gaussian();
    MatrixXd Q = 0.5 * (G + G.transpose());
    const double conv = stqp_conv_bound(SymMatrix::from_dense(Q));
    QpInstance simplex;
    simplex.Q = SymMatrix::from_dense(Q);
    simplex.c = VectorXd::Zero(n);
    simplex.polytope.A = MatrixXd(n + 2, n);
    simplex.polytope.A.topRows(n) = -MatrixXd::Identity(n, n);
    simplex.polytope.A.row(n).setOnes();
    simplex.polytope.A.row(n + 1).setConstant(-1.0);
    simplex.polytope.b = VectorXd::Zero(n + 2);
    simplex.polytope.b[n] = 1.0;
    simplex.polytope.b[n + 1] = -1.0;
    auto L = solve_bound(simplex, BoundVariant::L);
    req(L.ok(), "L on the simplex failed");
    req(std::abs(conv - L.value) <= 1e-5,
        "stqp mismatch " + fmt(std::abs(conv - L.value)) + " (n=" + std::to_string(n) + ")");
  }
  // Box-QP SRLT equivalence with 0-2 equalities.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GenSpec spec;
    spec.kind = GenKind::box_qp;
    spec.n = 3 + static_cast<int>(seed % 5);
    spec.seed = seed;
    spec.equalities = static_cast<int>(seed % 3);
    auto file = generate_instance(spec);
    BoxQp bq;
    bq.Aeq = file.E ? *file.E : MatrixXd(0, spec.n);
    bq.deq = file.f ? *file.f : VectorXd(0);
    bq.Q0 = file.Q;
    bq.c0 = file.c;
    bq.lo = VectorXd::Zero(spec.n);
    bq.hi = VectorXd::Ones(spec.n);
    const double srlt = srlt_bound(bq);
    auto inst = file.to_instance();
    auto L = solve_bound(inst, BoundVariant::L);
    req(L.ok(), "L on box instance failed");
    req(std::abs(srlt - L.value) <= 1e-5,
        "srlt mismatch " + fmt(std::abs(srlt - L.value)) + " on " + file.name);
  }
}

void criterion_7() {
  int cases = 0;
  for (std::uint64_t seed = 1; cases < 20 && seed < 200; ++seed) {
    const int n = 3 + static_cast<int>(seed % 3);
    QpInstance inst = tame_instance(n, 7000 + seed, false);
    const MatrixXd Q = inst.Q.dense();
    DescentResult desc;
    try {
      desc = local_vertex_descent(Q, inst.c, inst.polytope,
                                  chebyshev_center(inst.polytope).center);
    } catch (const std::exception&) {
      continue;
    }
    if (desc.vertex.degenerate) continue;
    auto frame = local_frame(inst.polytope, desc.vertex);
    if (!frame) continue;
    CounterRng rng(seed, 0xc7);
    const double u = eval_objective(inst, desc.vertex.point);
    const double eps = rng.next_uniform(0.1, 1.0);
    const double level = u - eps;
    VectorXd t = tuy_extension(Q, inst.c, *frame, level);
    bool any = false;
    for (int i = 0; i < n; ++i) any |= !std::isinf(t[i]);
    if (!any) continue;
    ++cases;
    // Analytic root check: q(v + t_i d_i) = level, and q >= level before it.
    for (int i = 0; i < n; ++i) {
      if (std::isinf(t[i])) continue;
      VectorXd z = desc.vertex.point + t[i] * frame->directions.col(i);
      req(std::abs(eval_objective(inst, z) - level) <= 1e-8 * (1.0 + std::abs(level)),
          "t_i misses the root by " + fmt(std::abs(eval_objective(inst, z) - level)));
      for (double frac : {0.25, 0.5, 0.75}) {
        VectorXd w = desc.vertex.point + frac * t[i] * frame->directions.col(i);
        req(eval_objective(inst, w) >= level - 1e-9,
            "objective dips below the level inside the extension");
      }
    }
    auto kon = konno_step(Q, inst.c, inst.polytope, *frame, t, u, eps);
    for (int i = 0; i < n; ++i)
      req(kon.s[i] >= t[i] - 1e-9, "Konno extension below the gamma-extension");
    auto verts = enumerate_vertices(inst.polytope);
    for (const VectorXd& ext : {VectorXd(t), kon.s}) {
      ConcavityCut cut;
      try {
        cut = make_concavity_cut(inst.polytope, *frame, ext);
      } catch (const std::invalid_argument&) {
        continue;
      }
      req(cut.row_a.dot(desc.vertex.point) > cut.row_b + 1e-9,
          "the generating vertex does not violate its cut");
      for (const auto& w : verts) {
        if (eval_objective(inst, w.point) < level - 1e-7)
          req(cut.row_a.dot(w.point) <= cut.row_b + 1e-7,
              "cut removes a vertex with q < u - eps");
      }
      if (!kon.eligible) break;
    }
  }
  req(cases == 20, "only generated " + std::to_string(cases) + " cut cases");
}

std::vector<QpInstance> criterion_8_suite() {
  std::vector<QpInstance> suite;
  for (std::uint64_t seed = 1; suite.size() < 20; ++seed) {
    GenSpec spec;
    spec.kind = GenKind::dense_concave;
    spec.n = 4 + static_cast<int>(seed % 5);
    spec.seed = seed;
    suite.push_back(generate_instance(spec).to_instance());
  }
  for (std::uint64_t seed = 1; suite.size() < 25; ++seed) {
    GenSpec spec;
    spec.kind = GenKind::norm_max;
    spec.n = 4 + static_cast<int>(seed % 3);
    spec.seed = seed;
    spec.box = true;
    suite.push_back(generate_instance(spec).to_instance());
  }
  return suite;
}

std::vector<BnCResult> criterion_8_impl(bool parallel) {
  auto suite = criterion_8_suite();
  std::vector<BnCResult> results;
  int idx = 0;
  for (const auto& inst : suite) {
    const auto t0 = std::chrono::steady_clock::now();
    BnCConfig cfg;
    cfg.eps = 1e-4;
    cfg.seed = 1000 + idx;
    cfg.parallel = parallel;
    auto r = solve_bnc(inst, cfg);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    req(dt < 60.0, inst.name + " exceeded 60 s (" + fmt(dt) + ")");
    req(r.status == BnCStatus::optimal_within_eps, inst.name + " not solved to eps");
    const double oracle = vertex_oracle(inst);
    req(std::abs(r.upper - oracle) <= 1e-4 * (1.0 + std::abs(oracle)),
        inst.name + ": incumbent " + fmt(r.upper) + " vs oracle " + fmt(oracle));
    for (size_t k = 1; k < r.lower_history.size(); ++k)
      req(r.lower_history[k] >=
              r.lower_history[k - 1] - 1e-5 * (1.0 + std::abs(r.lower_history[k])),
          inst.name + ": lower bound decreased across outer iterations");
    results.push_back(std::move(r));
    ++idx;
  }
  return results;
}

std::vector<BnCResult> g_crit8_results;

void criterion_8() { g_crit8_results = criterion_8_impl(false); }

void criterion_9() {
  auto par = criterion_8_impl(true);
  req(par.size() == g_crit8_results.size(), "suite size mismatch");
  for (size_t i = 0; i < par.size(); ++i) {
    req(par[i].nodes_processed == g_crit8_results[i].nodes_processed,
        "node count differs at instance " + std::to_string(i));
    req(par[i].upper == g_crit8_results[i].upper,
        "upper bound differs at instance " + std::to_string(i));
    req(par[i].lower == g_crit8_results[i].lower,
        "lower bound differs at instance " + std::to_string(i));
    req(par[i].cuts_added == g_crit8_results[i].cuts_added,
        "cut count differs at instance " + std::to_string(i));
    req(par[i].incumbent.size() == g_crit8_results[i].incumbent.size() &&
            par[i].incumbent.isApprox(g_crit8_results[i].incumbent, 0.0),
        "incumbent differs at instance " + std::to_string(i));
  }
}

void criterion_10() {
  QpInstance inst;
  MatrixXd Q(2, 2);
  Q << 0, 0.5, 0.5, 0;  // objective x1 x2
  inst.Q = SymMatrix::from_dense(Q);
  inst.c = VectorXd::Zero(2);
  inst.polytope.A = (MatrixXd(2, 2) << 1, 0, -1, 0).finished();  // x1 = 0
  inst.polytope.b = VectorXd::Zero(2);
  bool rejected = false;
  try {
    solve_bound(inst, BoundVariant::L);
  } catch (const UnboundedPolytopeError&) {
    rejected = true;
  }
  req(rejected, "the unbounded line instance was not rejected");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_sec;
    std::function<void()> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "paper example values (L = 0, L1 <= -1/8)", 1.0, criterion_1},
      {2, "strong duality on 20 random instances", 30.0, criterion_2},
      {3, "bound validity on 50 concave instances", 60.0, criterion_3},
      {4, "exactness: convex, singleton, certificate", 60.0, criterion_4},
      {5, "representation / affine / inclusion invariance", 60.0, criterion_5},
      {6, "stqp and srlt equivalences", 60.0, criterion_6},
      {7, "cut correctness on 20 generated cases", 120.0, criterion_7},
      {8, "global solve on 25 instances at eps=1e-4", 1500.0, criterion_8},
      {9, "determinism across repeat and parallel runs", 1500.0, criterion_9},
      {10, "unbounded-polytope rejection", 5.0, criterion_10},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string error;
    try {
      c.body();
    } catch (const CheckError& e) {
      error = e.msg;
    } catch (const std::exception& e) {
      error = std::string("exception: ") + e.what();
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (error.empty() && dt > c.limit_sec) {
      std::ostringstream os;
      os << "runtime " << dt << " s exceeded the " << c.limit_sec << " s budget";
      error = os.str();
    }
    if (error.empty()) {
      std::printf("PASS  criterion %2d: %s (%.2f s)\n", c.id, c.name, dt);
    } else {
      std::printf("FAIL  criterion %2d: %s (%.2f s) -- %s\n", c.id, c.name, dt, error.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
