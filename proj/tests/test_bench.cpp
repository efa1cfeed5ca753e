#include <catch_amalgamated.hpp>

#include "qpbc/bench.hpp"
#include "qpbc/instance_io.hpp"

using namespace qpbc;

TEST_CASE("generation is a pure function of the spec") {
  GenSpec spec;
  spec.kind = GenKind::dense_concave;
  spec.n = 5;
  spec.seed = 1;
  auto a = to_json(generate_instance(spec)).dump();
  auto b = to_json(generate_instance(spec)).dump();
  REQUIRE(a == b);
  spec.seed = 2;
  REQUIRE(a != to_json(generate_instance(spec)).dump());
}

TEST_CASE("dense concave instances have nonpositive spectra and bounded sets") {
  for (std::uint64_t seed : {1ull, 7ull, 9ull}) {
    GenSpec spec;
    spec.kind = GenKind::dense_concave;
    spec.n = 5;
    spec.seed = seed;
    auto file = generate_instance(spec);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(file.Q, Eigen::EigenvaluesOnly);
    REQUIRE(es.eigenvalues().maxCoeff() <= 1e-9);
    auto inst = file.to_instance();
    REQUIRE(check_bounded_fulldim(inst.polytope).bounded);
  }
}

TEST_CASE("norm-max boxes have the closed-form oracle") {
  // The spec example: [-1, 2]^3 gives optimum -12 = -sum max(1, 4).
  InstanceFile f;
  f.name = "normmax-cube";
  f.Q = -MatrixXd::Identity(3, 3);
  f.c = VectorXd::Zero(3);
  f.A = MatrixXd(6, 3);
  f.A.topRows(3) = MatrixXd::Identity(3, 3);
  f.A.bottomRows(3) = -MatrixXd::Identity(3, 3);
  f.b = (VectorXd(6) << 2, 2, 2, 1, 1, 1).finished();
  auto oracle = brute_force_optimum(f.to_instance());
  REQUIRE(oracle.exact);
  REQUIRE(oracle.value == Catch::Approx(-12.0).margin(1e-9));
}

TEST_CASE("brute force oracle on elementary objectives") {
  InstanceFile f;
  f.name = "box";
  f.Q = -MatrixXd::Identity(2, 2);
  f.c = VectorXd::Zero(2);
  f.A = MatrixXd(4, 2);
  f.A << 1, 0, 0, 1, -1, 0, 0, -1;
  f.b = (VectorXd(4) << 1, 1, 0, 0).finished();
  auto o = brute_force_optimum(f.to_instance());
  REQUIRE(o.exact);
  REQUIRE(o.value == Catch::Approx(-2.0).margin(1e-9));
  REQUIRE(o.argmin.isApprox(VectorXd::Ones(2), 1e-7));

  // The bilinear objective is indefinite: flagged approximate, optimum 0.
  MatrixXd Qb(2, 2);
  Qb << 0, 1, 1, 0;
  f.Q = Qb;
  auto ob = brute_force_optimum(f.to_instance());
  REQUIRE_FALSE(ob.exact);
  REQUIRE(ob.value == Catch::Approx(0.0).margin(1e-7));
}

TEST_CASE("instance files round-trip and expand equalities into pairs") {
  GenSpec spec;
  spec.kind = GenKind::box_qp;
  spec.n = 3;
  spec.seed = 4;
  spec.equalities = 1;
  auto file = generate_instance(spec);
  auto j = to_json(file);
  auto parsed = instance_from_json(j);
  REQUIRE(to_json(parsed).dump() == j.dump());
  auto inst = parsed.to_instance();
  REQUIRE(inst.polytope.rows() == file.A.rows() + 2);

  // Asymmetric Q is rejected.
  auto bad = j;
  bad["Q"][0][1] = bad["Q"][0][1].get<double>() + 1e-6;
  REQUIRE_THROWS_AS(instance_from_json(bad), std::invalid_argument);
}

TEST_CASE("stqp and box_qp generators produce well-formed instances") {
  GenSpec s1;
  s1.kind = GenKind::stqp;
  s1.n = 4;
  s1.seed = 3;
  auto f1 = generate_instance(s1);
  REQUIRE(f1.E.has_value());
  auto i1 = f1.to_instance();
  auto chk = check_bounded_fulldim(i1.polytope);
  REQUIRE(chk.bounded);
  REQUIRE(chk.reduced.embed.reduced_dim() == 3);

  GenSpec s2;
  s2.kind = GenKind::box_qp;
  s2.n = 4;
  s2.seed = 3;
  s2.equalities = 2;
  auto f2 = generate_instance(s2);
  REQUIRE(f2.E->rows() == 2);
  REQUIRE(check_bounded_fulldim(f2.to_instance().polytope).bounded);
}

TEST_CASE("run_benchmark produces one verified row per instance") {
  std::vector<InstanceFile> suite;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    GenSpec spec;
    spec.kind = GenKind::dense_concave;
    spec.n = 4;
    spec.seed = seed;
    suite.push_back(generate_instance(spec));
  }
  BnCConfig cfg;
  cfg.seed = 1;
  auto report = run_benchmark(suite, cfg);
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) {
    REQUIRE(row.status == "optimal_within_eps");
    REQUIRE(row.lb <= row.ub + 1e-9);
    REQUIRE(row.has_oracle);
    REQUIRE(row.lb <= row.q_star + 1e-6 * (1.0 + std::abs(row.q_star)));
    REQUIRE(row.ub >= row.q_star - cfg.eps * (1.0 + std::abs(row.q_star)));
  }
  const std::string csv = report.to_csv();
  REQUIRE(csv.find("instance,q_star,lb,ub,nodes,cuts,time_sec,status") == 0);
  REQUIRE(report.to_json().size() == 3);

  // Tiny time limit: rows report the limit status with lb <= ub.
  BnCConfig fast = cfg;
  fast.eps = 1e-12;
  fast.time_limit_sec = 0.0;
  auto limited = run_benchmark(suite, fast, /*with_oracle=*/false);
  for (const auto& row : limited.rows) {
    REQUIRE((row.status == "time_limit" || row.status == "optimal_within_eps"));
    REQUIRE(row.lb <= row.ub + 1e-9);
  }

  // Empty suite: empty report.
  REQUIRE(run_benchmark({}, cfg).rows.empty());
}

TEST_CASE("counter rng: determinism and distribution sanity") {
  CounterRng a(5, 1), b(5, 1), c(6, 1);
  REQUIRE(a.next_u64() == b.next_u64());
  REQUIRE(a.next_u64() != c.next_u64());

  REQUIRE(CounterRng::inverse_normal_cdf(0.5) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(CounterRng::inverse_normal_cdf(0.975) == Catch::Approx(1.959964).margin(1e-4));
  REQUIRE(CounterRng::inverse_normal_cdf(0.025) == Catch::Approx(-1.959964).margin(1e-4));

  CounterRng g(12345, 0);
  double sum = 0.0, sum2 = 0.0;
  const int N = 100000;
  for (int i = 0; i < N; ++i) {
    const double x = g.next_gaussian();
    sum += x;
    sum2 += x * x;
  }
  REQUIRE(sum / N == Catch::Approx(0.0).margin(0.02));
  REQUIRE(sum2 / N == Catch::Approx(1.0).margin(0.02));
}
