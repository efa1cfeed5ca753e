#include <catch_amalgamated.hpp>

#include "qpbc/model.hpp"
#include "qpbc/rng.hpp"

using namespace qpbc;

namespace {

QpInstance make_instance(const MatrixXd& Q, const VectorXd& c, const MatrixXd& A,
                         const VectorXd& b) {
  QpInstance inst;
  inst.Q = SymMatrix::from_dense(Q);
  inst.c = c;
  inst.polytope.A = A;
  inst.polytope.b = b;
  return inst;
}

Polytope unit_box(int n) {
  Polytope P;
  P.A = MatrixXd(2 * n, n);
  P.A.topRows(n) = MatrixXd::Identity(n, n);
  P.A.bottomRows(n) = -MatrixXd::Identity(n, n);
  P.b = VectorXd::Zero(2 * n);
  P.b.head(n).setOnes();
  return P;
}

}  // namespace

TEST_CASE("eval_objective matches direct substitution") {
  auto i1 = make_instance(MatrixXd::Constant(1, 1, -1.0), VectorXd::Zero(1),
                          MatrixXd::Identity(1, 1), VectorXd::Ones(1));
  REQUIRE(eval_objective(i1, VectorXd::Ones(1)) == Catch::Approx(-1.0));

  MatrixXd Q(2, 2);
  Q << 0, 1, 1, 0;
  auto i2 = make_instance(Q, VectorXd::Zero(2), MatrixXd::Identity(2, 2), VectorXd::Ones(2));
  REQUIRE(eval_objective(i2, VectorXd::Ones(2)) == Catch::Approx(2.0));

  auto i3 = make_instance(MatrixXd(-MatrixXd::Identity(3, 3)), VectorXd::Zero(3),
                          MatrixXd::Identity(3, 3), VectorXd::Ones(3));
  VectorXd x(3);
  x << 1, 2, 2;
  REQUIRE(eval_objective(i3, x) == Catch::Approx(-9.0));

  REQUIRE_THROWS_AS(eval_objective(i3, VectorXd::Ones(2)), std::invalid_argument);
}

TEST_CASE("SymMatrix is symmetric by construction") {
  MatrixXd M(2, 2);
  M << 1, 2, 0, 3;
  auto S = SymMatrix::from_dense(M);
  REQUIRE(S(0, 1) == Catch::Approx(1.0));
  REQUIRE(S(1, 0) == Catch::Approx(1.0));
  REQUIRE_THROWS_AS(SymMatrix::from_dense(MatrixXd::Zero(2, 3)), std::invalid_argument);
  REQUIRE_THROWS_AS(SymMatrix(0), std::invalid_argument);
}

TEST_CASE("AffineFunc norm is the max of offset and gradient entries") {
  VectorXd g(3);
  g << 0.5, -2.0, 1.0;
  AffineFunc a(g, -1.5);
  REQUIRE(a.norm() == Catch::Approx(2.0));
  REQUIRE(AffineFunc::zero(3).norm() == 0.0);
}

TEST_CASE("certificate_gram reproduces the worked certificates") {
  // -x^2 + 1 + (x+1)(x-1) == 0: zero Gram matrix.
  QpInstance inst = make_instance(MatrixXd::Constant(1, 1, -1.0), VectorXd::Zero(1),
                                  (MatrixXd(2, 1) << 1, -1).finished(),
                                  (VectorXd(2) << 1, 0).finished());
  MultiplierCertificate cert;
  cert.level = -1.0;
  cert.alphas = {AffineFunc(VectorXd::Ones(1), 1.0), AffineFunc::zero(1)};
  auto G = certificate_gram(inst, cert);
  REQUIRE(G.dense().cwiseAbs().maxCoeff() == Catch::Approx(0.0).margin(1e-14));
  REQUIRE(gram_is_psd(G));

  // All-zero certificate on q = x^2: Gram [[1,0],[0,0]], min eig 0.
  QpInstance conv = make_instance(MatrixXd::Constant(1, 1, 1.0), VectorXd::Zero(1),
                                  (MatrixXd(2, 1) << 1, -1).finished(),
                                  (VectorXd(2) << 1, 0).finished());
  MultiplierCertificate zc;
  zc.level = 0.0;
  zc.alphas = {AffineFunc::zero(1), AffineFunc::zero(1)};
  auto G2 = certificate_gram(conv, zc);
  REQUIRE(G2(0, 0) == Catch::Approx(1.0));
  REQUIRE(G2(0, 1) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(G2(1, 1) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(G2.min_eigenvalue() == Catch::Approx(0.0).margin(1e-12));

  REQUIRE_THROWS_AS(certificate_gram(inst, MultiplierCertificate{}), std::invalid_argument);
}

TEST_CASE("certificate_gram agrees with pointwise evaluation on integer data") {
  // With integer-valued data the quadratic and its Gram form evaluate
  // exactly, so the comparison is an independent expansion check.
  CounterRng rng(7, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 3;
    const int m = 3 + trial % 2;
    auto ri = [&](int lo, int hi) {
      return static_cast<double>(lo + static_cast<int>(rng.next_u64() % (hi - lo + 1)));
    };
    MatrixXd Q(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) Q(i, j) = Q(j, i) = ri(-3, 3);
    VectorXd c(n), b(m);
    MatrixXd A(m, n);
    for (int i = 0; i < n; ++i) c[i] = ri(-3, 3);
    for (int i = 0; i < m; ++i) b[i] = ri(-3, 3);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = ri(-2, 2);
    QpInstance inst = make_instance(Q, c, A, b);
    MultiplierCertificate cert;
    cert.level = ri(-4, 4);
    for (int i = 0; i < m; ++i) {
      VectorXd g(n);
      for (int j = 0; j < n; ++j) g[j] = ri(-2, 2);
      cert.alphas.push_back(AffineFunc(g, ri(-2, 2)));
    }
    MatrixXd G = certificate_gram(inst, cert).dense();
    for (int s = 0; s < 20; ++s) {
      VectorXd x(n);
      for (int j = 0; j < n; ++j) x[j] = ri(-3, 3);
      double direct = eval_objective(inst, x) - cert.level;
      for (int i = 0; i < m; ++i)
        direct += cert.alphas[i].eval(x) * (A.row(i).dot(x) - b[i]);
      VectorXd xh(n + 1);
      xh << x, 1.0;
      REQUIRE(xh.dot(G * xh) == Catch::Approx(direct).margin(1e-9));
    }
  }
}

TEST_CASE("certificate_gram is linear in the multipliers and level") {
  QpInstance inst = make_instance((MatrixXd(2, 2) << 1, 2, 2, -1).finished(),
                                  (VectorXd(2) << 3, -1).finished(), unit_box(2).A,
                                  unit_box(2).b);
  CounterRng rng(9, 0);
  auto random_cert = [&] {
    MultiplierCertificate c;
    c.level = rng.next_gaussian();
    for (int i = 0; i < 4; ++i) {
      VectorXd g(2);
      g << rng.next_gaussian(), rng.next_gaussian();
      c.alphas.push_back(AffineFunc(g, rng.next_gaussian()));
    }
    return c;
  };
  MultiplierCertificate zero;
  zero.level = 0.0;
  zero.alphas.assign(4, AffineFunc::zero(2));
  for (int t = 0; t < 5; ++t) {
    auto c1 = random_cert();
    auto c2 = random_cert();
    MultiplierCertificate sum;
    sum.level = c1.level + c2.level;
    for (int i = 0; i < 4; ++i)
      sum.alphas.push_back(
          AffineFunc(c1.alphas[i].grad + c2.alphas[i].grad, c1.alphas[i].offset + c2.alphas[i].offset));
    MatrixXd lhs = certificate_gram(inst, c1).dense() + certificate_gram(inst, c2).dense() -
                   certificate_gram(inst, zero).dense();
    MatrixXd rhs = certificate_gram(inst, sum).dense();
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("valid certificates bound the objective from below on samples") {
  // q = -x^2 on [0,1] with alpha_1 = x+1, level -1: PSD Gram and feasible
  // multipliers, so q >= -1 on the polytope.
  QpInstance inst = make_instance(MatrixXd::Constant(1, 1, -1.0), VectorXd::Zero(1),
                                  (MatrixXd(2, 1) << 1, -1).finished(),
                                  (VectorXd(2) << 1, 0).finished());
  MultiplierCertificate cert;
  cert.level = -1.0;
  cert.alphas = {AffineFunc(VectorXd::Ones(1), 1.0), AffineFunc::zero(1)};
  REQUIRE(gram_is_psd(certificate_gram(inst, cert)));
  for (const auto& a : cert.alphas) REQUIRE(is_nonnegative_on(a, inst.polytope).nonneg);
  for (int k = 0; k <= 20; ++k) {
    VectorXd x = VectorXd::Constant(1, k / 20.0);
    REQUIRE(eval_objective(inst, x) >= cert.level - 1e-12);
  }
}

TEST_CASE("is_nonnegative_on decides membership by one LP") {
  Polytope seg;
  seg.A = (MatrixXd(2, 1) << 1, -1).finished();
  seg.b = (VectorXd(2) << 1, 0).finished();
  REQUIRE(is_nonnegative_on(AffineFunc(VectorXd::Ones(1), 1.0), seg).nonneg);
  REQUIRE_FALSE(is_nonnegative_on(AffineFunc(VectorXd::Ones(1), -0.5), seg).nonneg);

  // x1 - x2 + 1 on the unit box.
  VectorXd g(2);
  g << 1, -1;
  REQUIRE(is_nonnegative_on(AffineFunc(g, 1.0), unit_box(2)).nonneg);

  // Unbounded below direction: alpha = x on { -x <= 0 } ... use x >= 0 and
  // alpha = -x, unbounded below.
  Polytope ray;
  ray.A = MatrixXd::Constant(1, 1, -1.0);
  ray.b = VectorXd::Zero(1);
  auto r = is_nonnegative_on(AffineFunc(VectorXd::Constant(1, -1.0), 0.0), ray);
  REQUIRE_FALSE(r.nonneg);
  REQUIRE(r.status == NonnegStatus::unbounded_below);

  // Empty polytope reported as such.
  Polytope empty;
  empty.A = (MatrixXd(2, 1) << 1, -1).finished();
  empty.b = (VectorXd(2) << -1, 0).finished();
  REQUIRE(is_nonnegative_on(AffineFunc(VectorXd::Ones(1), 0.0), empty).status ==
          NonnegStatus::empty_polytope);
}

TEST_CASE("nonnegative functions on a polytope form a convex cone") {
  Polytope box = unit_box(2);
  CounterRng rng(21, 3);
  int verified = 0;
  while (verified < 8) {
    VectorXd g1(2), g2(2);
    g1 << rng.next_gaussian(), rng.next_gaussian();
    g2 << rng.next_gaussian(), rng.next_gaussian();
    AffineFunc a(g1, rng.next_uniform(0.0, 2.0));
    AffineFunc b(g2, rng.next_uniform(0.0, 2.0));
    if (!is_nonnegative_on(a, box).nonneg || !is_nonnegative_on(b, box).nonneg) continue;
    const double lam = rng.next_uniform(0.0, 3.0);
    const double mu = rng.next_uniform(0.0, 3.0);
    AffineFunc comb(lam * a.grad + mu * b.grad, lam * a.offset + mu * b.offset);
    REQUIRE(is_nonnegative_on(comb, box).nonneg);
    ++verified;
  }
}
