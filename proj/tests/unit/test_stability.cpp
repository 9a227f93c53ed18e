#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "selfnet/stability.hpp"

using namespace selfnet;

namespace {

Matrix random_spd(int m, RandomStream& rng) {
  Matrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + 0.1 * Matrix::Identity(m, m);
}

IterationRecord record(std::vector<double> werr) {
  IterationRecord r;
  r.werr = std::move(werr);
  return r;
}

Scenario ring(Mode mode, double c, int n = 6) {
  RandomStream rng(3);
  std::vector<Matrix> covs;
  std::vector<double> noise;
  for (int k = 0; k < n; ++k) {
    Vector d(2);
    d << 1.0 + rng.uniform01(), 2.0 + rng.uniform01();
    covs.push_back(d.asDiagonal());
    noise.push_back(0.1);
  }
  std::vector<std::pair<int, int>> edges;
  for (int k = 0; k < n; ++k) edges.emplace_back(k, (k + 1) % n);
  AgentParams p;
  p.mu = 0.02;
  p.comm_cost = c;
  Vector wo(2);
  wo << 1.0, -1.0;
  return Scenario(DataModel(wo, covs, noise), PairingEngine(PairingKind::distributed, Topology::from_edges(n, edges)),
                  std::vector<AgentParams>(static_cast<std::size_t>(n), p), mode);
}

}  // namespace

TEST_CASE("bounds for identity covariances") {
  const DataModel m(Vector::Zero(3), {Matrix::Identity(3, 3), Matrix::Identity(3, 3)}, {0.1, 0.2});
  const StabilityBounds b = compute_bounds(m, 0.01);
  CHECK(b.mu_max == doctest::Approx(2.0));
  CHECK(b.rho_max == doctest::Approx(0.99));
  CHECK(b.rho_min == doctest::Approx(0.99));
  CHECK(b.beta == doctest::Approx(1.0));
  CHECK(b.kappa == doctest::Approx(3.0 * 0.2));
  CHECK(b.steady_state_bound() == doctest::Approx(1e-4 * 0.6 / (1 - 0.99 * 0.99)));
}

TEST_CASE("bounds examples") {
  Vector d(2);
  d << 100.0, 3.0;
  const DataModel big(Vector::Zero(2), {Matrix(d.asDiagonal()), Matrix::Identity(2, 2)}, {0.1, 0.1});
  CHECK(compute_bounds(big, 0.001).mu_max == doctest::Approx(0.02));

  Vector e(2);
  e << 1.0, 2.0;
  const DataModel span(Vector::Zero(2), {Matrix(e.asDiagonal())}, {0.1});
  const StabilityBounds b = compute_bounds(span, 0.01);
  CHECK(b.rho_max == doctest::Approx(0.99));
  CHECK(b.rho_min == doctest::Approx(0.98));
}

TEST_CASE("rho bounds are ordered and detect the step-size limit") {
  RandomStream rng(1);
  for (int i = 0; i < 500; ++i) {
    const int m = 1 + i % 5;
    const DataModel model(Vector::Zero(m), {random_spd(m, rng), random_spd(m, rng)}, {0.1, 0.1});
    const double limit = compute_bounds(model, 1.0).mu_max;
    const double mu = 2.0 * limit * rng.uniform01();
    const StabilityBounds b = compute_bounds(model, mu);
    REQUIRE(b.rho_min <= b.rho_max);
    REQUIRE((b.rho_max < 1.0) == (mu < b.mu_max));
    if (mu < b.mu_max) {
      REQUIRE(std::isfinite(b.steady_state_bound()));
      REQUIRE(b.steady_state_bound() > 0.0);
    }
  }
}

TEST_CASE("regime classification") {
  StabilityBounds b;
  b.rho_max = 0.99;
  b.rho_min = 0.9;
  const double c = 1e-3, x = 1.2, eps = 0.1;
  const double far = c * x / (0.81 * eps), near = c * x / (0.99 * 0.99);
  CHECK(classify_regime(std::vector<double>(100, 2 * far), c, x, b, eps).regime == Regime::far_field);
  CHECK(classify_regime(std::vector<double>(100, 0.5 * near), c, x, b, eps).regime == Regime::near_field);
  std::vector<double> mixed(50, 2 * far);
  mixed.resize(100, 0.5 * near);
  const RegimeVerdict v = classify_regime(mixed, c, x, b, eps);
  CHECK(v.regime == Regime::middle_field);
  CHECK(v.far_prob == doctest::Approx(0.5));
  CHECK(v.near_prob == doctest::Approx(0.5));
  CHECK_THROWS_AS(classify_regime({}, c, x, b, eps), std::invalid_argument);
  CHECK_THROWS_AS(classify_regime(mixed, c, x, b, eps, 0.0), std::invalid_argument);
}

TEST_CASE("cooperation-rate bound") {
  std::vector<IterationRecord> recs;
  for (int i = 0; i < 100; ++i) recs.push_back(record({i < 50 ? 5.0 : 0.02, 0.01}));
  StabilityBounds b;
  b.rho_max = 0.9;
  const CoopRateBound cb = cooperation_bound(recs, 50, b, 1.2, 0.01);
  CHECK(cb.eta == doctest::Approx(2.0));
  CHECK(cb.c_o == doctest::Approx(2.0 * 0.01 * 0.81 / 1.2));
  CHECK(cb.bound(cb.c_o / 2) == 1.0);
  CHECK(cb.bound(cb.c_o) == 1.0);
  CHECK(cb.bound(4 * cb.c_o) == doctest::Approx(0.25));
  CHECK(cb.bound(8 * cb.c_o) == doctest::Approx(0.5 * cb.bound(4 * cb.c_o)));
  CHECK_THROWS_AS(cooperation_bound(recs, 95, b, 1.2, 0.01), std::invalid_argument);
}

TEST_CASE("cooperation rates respect the bound on finished runs") {
  for (double c : {1e-4, 1e-3, 1e-2, 1e-1}) {
    const Scenario sc = ring(Mode::reputation, c);
    RunOptions opt;
    opt.n_iters = 2000;
    opt.n_monte_carlo = 8;
    const RunResult res = run(sc, opt);
    const StabilityBounds b = compute_bounds(sc.model(), 0.02);
    const CoopRateBound cb = cooperation_bound(res.records, res.window_begin, b, sc.chi(0), 0.02);
    for (int k = 0; k < sc.n_agents(); ++k) {
      double shares = 0.0, paired = 0.0;
      for (const auto& rep : res.per_rep) {
        shares += rep[static_cast<std::size_t>(k)].shares;
        paired += rep[static_cast<std::size_t>(k)].paired;
      }
      CHECK(shares / paired <= cb.bound(c));
    }
  }
}

TEST_CASE("public cost bounds") {
  RunOptions opt;
  opt.n_iters = 2000;
  opt.n_monte_carlo = 8;
  const Scenario rep0 = ring(Mode::reputation, 1e-3);
  const StabilityBounds b = compute_bounds(rep0.model(), 0.02);
  RandomStream rng(4);
  const PairingStats stats = estimate_pairing_probs(rep0.pairing(), 20000, rng);

  double previous_coop = 0.0;
  for (double c : {1.0, 10.0, 100.0}) {
    const Scenario rep = rep0.with_comm_cost(c);
    const RunResult a = run(rep, opt);
    const RunResult coop = run(rep.with_mode(Mode::always_share), opt);
    const CoopRateBound cb = cooperation_bound(a.records, a.window_begin, b, rep.chi(0), 0.02);
    const PublicCostReport r = public_cost_bounds(a, coop, rep.model(), stats, b, cb, c);
    CHECK(r.jpub_reputation <= r.upper_bound);
    CHECK(r.jpub_cooperative >= r.coop_lower_bound);
    CHECK(r.jpub_cooperative > previous_coop * 5.0);  // grows linearly in c
    previous_coop = r.jpub_cooperative;
  }

  // Nearly free communication: both modes behave the same.
  const Scenario cheap = rep0.with_comm_cost(1e-12);
  const RunResult a = run(cheap, opt);
  const RunResult coop = run(cheap.with_mode(Mode::always_share), opt);
  const CoopRateBound cb = cooperation_bound(a.records, a.window_begin, b, cheap.chi(0), 0.02);
  const PublicCostReport r = public_cost_bounds(a, coop, cheap.model(), stats, b, cb, 1e-12);
  CHECK(r.jpub_reputation == doctest::Approx(r.jpub_cooperative).epsilon(0.01));
  CHECK(r.jpub_reputation <= r.upper_bound);

  RunResult empty;
  CHECK_THROWS_AS(public_cost_bounds(a, empty, cheap.model(), stats, b, cb, 1.0), std::invalid_argument);
}
