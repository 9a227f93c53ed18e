#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "selfnet/protocol.hpp"
#include "selfnet/stability.hpp"

using namespace selfnet;

namespace {

Matrix random_spd(int m, RandomStream& rng) {
  Matrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = rng.normal();
  return a * a.transpose() / m + 0.05 * Matrix::Identity(m, m);
}

Vector random_vector(int m, RandomStream& rng) {
  Vector v(m);
  for (int j = 0; j < m; ++j) v(j) = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("chi") {
  CHECK(chi(0.99, 0.95) == doctest::Approx(0.0595 / 0.0495).epsilon(1e-12));
  CHECK(chi(0.99, 0.95) == doctest::Approx(1.20202).epsilon(1e-5));
  CHECK(chi(1.0 - 1e-12, 0.7) == doctest::Approx(1.0).epsilon(1e-9));
  for (double r : {0.1, 0.5, 0.95}) {
    for (double d = 0.05; d < 0.95; d += 0.05) {
      CHECK(chi(d + 1e-6, r) < chi(d, r));
      CHECK(chi(d, r) > 1.0);
    }
  }
  CHECK_THROWS_AS(chi(1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(chi(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("reputation update examples") {
  CHECK(reputation_update(1.0, true, true, 0.95, 0.1) == doctest::Approx(1.0));
  CHECK(reputation_update(0.1, true, false, 0.95, 0.1) == 0.1);
  CHECK(reputation_update(0.37, false, false, 0.95, 0.1) == 0.37);
  CHECK(reputation_update(0.37, false, true, 0.95, 0.1) == 0.37);
  CHECK_THROWS_AS(reputation_update(0.05, true, true, 0.95, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(reputation_update(1.2, true, true, 0.95, 0.1), std::invalid_argument);
}

TEST_CASE("reputation stays within [eps, 1] under arbitrary histories") {
  RandomStream rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const double eps = 0.01 + 0.5 * rng.uniform01();
    const double r = 0.01 + 0.98 * rng.uniform01();
    double theta = 1.0;
    for (int i = 0; i < 500; ++i) {
      theta = reputation_update(theta, rng.uniform01() < 0.7, rng.uniform01() < 0.3, r, eps);
      REQUIRE(theta >= eps);
      REQUIRE(theta <= 1.0);
    }
  }
}

TEST_CASE("consecutive sharing follows the closed form") {
  RandomStream rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const double r = 0.01 + 0.98 * rng.uniform01();
    const double theta0 = 0.1 + 0.9 * rng.uniform01();
    const int m = 1 + static_cast<int>(rng.uniform01() * 60);
    double theta = theta0;
    for (int i = 0; i < m; ++i) theta = reputation_update(theta, true, true, r, 0.1);
    CHECK(theta == doctest::Approx(theta0 * std::pow(r, m) + (1.0 - std::pow(r, m))).epsilon(1e-12));
  }
}

TEST_CASE("belief") {
  CHECK(belief(1.0, 1.0) == 1.0);
  CHECK(belief(0.1, 0.1) == doctest::Approx(0.01));
  CHECK(belief(0.5, 0.8) == doctest::Approx(0.4));
  CHECK(belief(0.6, 0.8) >= belief(0.5, 0.8));
  CHECK(belief(0.5, 0.9) >= belief(0.5, 0.8));
  CHECK_THROWS_AS(belief(0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(belief(0.5, 1.5), std::invalid_argument);
}

TEST_CASE("oracle benefit examples") {
  CHECK(benefit_oracle(Vector::Zero(3), Matrix::Identity(3, 3), 0.01) == 0.0);
  Vector w(3);
  w << 1.0, -2.0, 0.5;
  CHECK(benefit_oracle(w, Matrix::Identity(3, 3), 0.0) == doctest::Approx(w.squaredNorm()));
  CHECK(benefit_oracle(Vector::Ones(1), Matrix::Constant(1, 1, 2.0), 0.01) ==
        doctest::Approx(1.9208).epsilon(1e-12));
  CHECK_THROWS_AS(benefit_oracle(Vector::Ones(2), Matrix::Identity(3, 3), 0.01), std::invalid_argument);

  RandomStream rng(3);
  const Matrix r = random_spd(4, rng);
  const Vector e = random_vector(4, rng);
  CHECK(benefit_oracle(e, r, 0.03) == doctest::Approx(e.dot(oracle_benefit_weight(r, 0.03) * e)));
}

TEST_CASE("real-time benefit examples") {
  AgentState s = AgentState::initial(1, {});
  s.w = Vector::Zero(1);
  s.psi = Vector::Constant(1, 2.0);
  s.wo_hat = Vector::Constant(1, 2.0);
  // After the moving-average step wo_hat stays at 2, so the perceived error is 2.
  CHECK(benefit_realtime(s, Vector::Ones(1), 0.01, 0.01) == doctest::Approx(3.9204).epsilon(1e-12));
  CHECK(s.wo_hat(0) == doctest::Approx(2.0));

  AgentState z = AgentState::initial(2, {});
  z.w << 0.3, -0.1;
  z.psi = z.w;
  z.wo_hat = z.w;
  Vector u(2);
  u << 1.5, 0.7;
  CHECK(benefit_realtime(z, u, 0.01, 0.2) == doctest::Approx(0.0).epsilon(1e-15));

  AgentState v = AgentState::initial(2, {});
  v.psi << 5.0, 5.0;
  Vector unit(2);
  unit << 1.0, 0.0;
  CHECK(benefit_realtime(v, unit, 1.0, 0.5) == 0.0);
}

TEST_CASE("moving average is updated from psi before predicting") {
  AgentState s = AgentState::initial(1, {});
  s.w = Vector::Zero(1);
  s.wo_hat = Vector::Zero(1);
  s.psi = Vector::Constant(1, 1.0);
  const double b = benefit_realtime(s, Vector::Ones(1), 0.0, 0.5);
  CHECK(s.wo_hat(0) == doctest::Approx(0.5));
  CHECK(b == doctest::Approx(0.25));
}

TEST_CASE("real-time benefit approaches the oracle for small mu") {
  RandomStream rng(4);
  const int m = 3;
  const Matrix r = random_spd(m, rng);
  const Eigen::LLT<Matrix> llt(r);
  const Vector wo = random_vector(m, rng);
  AgentState s = AgentState::initial(m, {});
  s.w = wo - random_vector(m, rng);
  const double mu = 1e-3;
  const int n = 400000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    s.psi = wo;
    s.wo_hat = wo;
    Vector z(m);
    for (int j = 0; j < m; ++j) z(j) = rng.normal();
    const double b = benefit_realtime(s, llt.matrixL() * z, mu, 0.01);
    sum += b;
    sum_sq += b * b;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  const double oracle = benefit_oracle(wo - s.w, r, mu);
  // The two predictors differ by about 2 mu (Tr R + lambda_max) times the error energy.
  const double lambda_max = Eigen::SelfAdjointEigenSolver<Matrix>(r).eigenvalues().maxCoeff();
  CHECK(std::abs(mean - oracle) < 3.0 * se + 3.0 * mu * (r.trace() + lambda_max) * oracle);
}

TEST_CASE("decision rule examples") {
  const double x = chi(0.99, 0.95);
  CHECK_FALSE(decide_action({0.0, BenefitMode::oracle}, 1.0, x, 1.0).share);
  CHECK(decide_action({10.0, BenefitMode::oracle}, 1.0, 1.20202, 1.0).share);
  // 2.5 / 1 == 1.25 / 0.5 exactly in binary floating point.
  const ActionDecision tie = decide_action({2.5, BenefitMode::oracle}, 1.0, 1.25, 0.5);
  CHECK(tie.ratio == tie.threshold);
  CHECK_FALSE(tie.share);
  CHECK_FALSE(decide_action({5.0, BenefitMode::oracle}, INFINITY, x, 1.0).share);
  CHECK_THROWS_AS(decide_action({1.0, BenefitMode::oracle}, 0.0, x, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(decide_action({1.0, BenefitMode::oracle}, 1.0, x, 0.0), std::invalid_argument);
}

TEST_CASE("decision rule is monotone") {
  RandomStream rng(5);
  for (int i = 0; i < 20000; ++i) {
    const double b = std::exp(4.0 * rng.normal());
    const double c = std::exp(4.0 * rng.normal());
    const double th = 0.05 + 0.95 * rng.uniform01();
    const double x = chi(0.5 + 0.49 * rng.uniform01(), 0.01 + 0.98 * rng.uniform01());
    const bool base = decide_action({b, BenefitMode::oracle}, c, x, th).share;
    if (base) {
      REQUIRE(decide_action({b * 1.5, BenefitMode::oracle}, c, x, th).share);
      REQUIRE(decide_action({b, BenefitMode::oracle}, c / 1.5, x, th).share);
      REQUIRE(decide_action({b, BenefitMode::oracle}, c, x, std::min(1.0, th * 1.5)).share);
    } else {
      REQUIRE_FALSE(decide_action({b / 1.5, BenefitMode::oracle}, c, x, th).share);
      REQUIRE_FALSE(decide_action({b, BenefitMode::oracle}, c * 1.5, x, th).share);
      REQUIRE_FALSE(decide_action({b, BenefitMode::oracle}, c, x, th / 1.5).share);
    }
  }
}

TEST_CASE("oracle benefit is sandwiched by the rho bounds") {
  RandomStream rng(6);
  for (int i = 0; i < 2000; ++i) {
    const int m = 1 + i % 6;
    const Matrix r = random_spd(m, rng);
    const Vector e = random_vector(m, rng);
    const DataModel model(Vector::Zero(m), {r}, {0.1});
    const double mu = 0.5 * rng.uniform01() * compute_bounds(model, 1.0).mu_max;
    const StabilityBounds b = compute_bounds(model, mu);
    const double q = e.dot(r * e);
    const double v = benefit_oracle(e, r, mu);
    REQUIRE(v >= b.rho_min * b.rho_min * q * (1.0 - 1e-10));
    REQUIRE(v <= b.rho_max * b.rho_max * q * (1.0 + 1e-10));
  }
}

TEST_CASE("field conditions imply the predicted action") {
  RandomStream rng(7);
  int far = 0, near = 0;
  for (int i = 0; i < 20000; ++i) {
    const int m = 1 + i % 5;
    const Matrix r = random_spd(m, rng);
    const DataModel model(Vector::Zero(m), {r}, {0.1});
    const double mu = 0.9 * rng.uniform01() * compute_bounds(model, 1.0).mu_max;
    const StabilityBounds b = compute_bounds(model, mu);
    const Vector e = std::exp(2.0 * rng.normal()) * random_vector(m, rng);
    const double q = e.dot(r * e);
    const double c = std::exp(3.0 * rng.normal());
    const double eps = 0.05 + 0.2 * rng.uniform01();
    const double th = eps + (1.0 - eps) * rng.uniform01();
    const double x = chi(0.9 + 0.09 * rng.uniform01(), 0.5 + 0.49 * rng.uniform01());
    const bool share = decide_action({benefit_oracle(e, r, mu), BenefitMode::oracle}, c, x, th).share;
    if (q > c * x / (b.rho_min * b.rho_min * eps) * (1.0 + 1e-9)) {
      ++far;
      REQUIRE(share);
    }
    if (q < c * x / (b.rho_max * b.rho_max) * (1.0 - 1e-9)) {
      ++near;
      REQUIRE_FALSE(share);
    }
  }
  CHECK(far > 100);
  CHECK(near > 100);
}
