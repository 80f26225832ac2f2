#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "poemlab/errors.hpp"
#include "poemlab/synthdata.hpp"
#include "poemlab/theory.hpp"

using namespace poemlab;

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(Vec a, Vec b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

Vec projections(const Matrix& x, const Vec& mu) {
  const double n = norm(mu);
  Vec out;
  for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(dot(x.row(r), mu) / n);
  return out;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

TEST_SUITE("synthdata") {
  TEST_CASE("toy with no outliers") {
    RngStream rng(1);
    const auto d = gen_toy(ToyConfig{}, 500, 0, rng);
    CHECK(d.id.size() == 500);
    CHECK(d.outliers.rows() == 0);
    for (int l : d.id.labels) CHECK((l >= 0 && l <= 2));
  }

  TEST_CASE("toy outliers respect the exclusion radius") {
    RngStream rng(2);
    const ToyConfig cfg;
    const auto d = gen_toy(cfg, 0, 20000, rng);
    REQUIRE(d.outliers.rows() == 20000);
    for (std::size_t r = 0; r < d.outliers.rows(); ++r) {
      const auto p = d.outliers.row(r);
      CHECK(p[0] >= cfg.box_lo);
      CHECK(p[0] <= cfg.box_hi);
      for (const auto& m : cfg.class_means)
        CHECK(std::hypot(p[0] - m[0], p[1] - m[1]) >= 2.0 * cfg.class_sd);
    }
  }

  TEST_CASE("toy class means match the configuration") {
    RngStream rng(3);
    const ToyConfig cfg;
    const auto d = gen_toy(cfg, 30000, 0, rng);
    for (int k = 0; k < 3; ++k) {
      double sx = 0, sy = 0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < d.id.size(); ++i)
        if (d.id.labels[i] == k) {
          sx += d.id.points(i, 0);
          sy += d.id.points(i, 1);
          ++n;
        }
      const double tol = 4.0 * cfg.class_sd / std::sqrt(static_cast<double>(n));
      CHECK(std::abs(sx / n - cfg.class_means[k][0]) < tol);
      CHECK(std::abs(sy / n - cfg.class_means[k][1]) < tol);
    }
  }

  TEST_CASE("toy config validation") {
    ToyConfig cfg;
    cfg.class_sd = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ToyConfig{};
    cfg.box_hi = 3.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("generators are deterministic") {
    RngStream a(4), b(4);
    const auto x = gen_toy(ToyConfig{}, 100, 100, a);
    const auto y = gen_toy(ToyConfig{}, 100, 100, b);
    CHECK(x.id.points.flat().size() == y.id.points.flat().size());
    CHECK(std::equal(x.id.points.flat().begin(), x.id.points.flat().end(), y.id.points.flat().begin()));
    CHECK(std::equal(x.outliers.flat().begin(), x.outliers.flat().end(), y.outliers.flat().begin()));
  }

  TEST_CASE("theory pair guards and moments") {
    RngStream rng(5);
    TheoryConfig zero = TheoryConfig::axis_aligned(3, 0.0, 1.0);
    CHECK_THROWS_AS(gen_theory_pair(zero, rng), DegenerateMu);

    TheoryConfig cfg;
    cfg.mu = {1.0, -2.0, 0.5};
    cfg.sigma = 1.5;
    cfg.n = 10000;
    cfg.n_prime = 10;
    const auto pair = gen_theory_pair(cfg, rng);
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0;
      for (std::size_t r = 0; r < pair.aux.rows(); ++r) s += pair.aux(r, c);
      CHECK(std::abs(s / cfg.n + cfg.mu[c]) < 4.0 * cfg.sigma / std::sqrt(10000.0));
    }

    cfg.sigma = 1e-9;
    const auto tight = gen_theory_pair(cfg, rng);
    for (std::size_t r = 0; r < tight.in.rows(); ++r)
      for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(tight.in(r, c) - cfg.mu[c]) < 1e-6);
  }

  TEST_CASE("truncated normal matches the closed-form mean") {
    RngStream rng(6);
    const double cases[][2] = {{-1.0, 2.0}, {0.5, 1.0}, {3.0, 1e9}, {9.5, 10.5}, {-10.5, -9.5}, {-0.1, 0.1}};
    for (const auto& c : cases) {
      const double a = c[0], b = c[1];
      // Mirror intervals below zero so the tail mass does not cancel.
      const double mass = b < 0 ? q_function(-b) - q_function(-a) : q_function(a) - q_function(b);
      const double mean = (normal_pdf(a) - normal_pdf(b)) / mass;
      double s = 0;
      const int n = 50000;
      for (int i = 0; i < n; ++i) {
        const double z = truncated_normal(a, b, rng);
        REQUIRE(z >= a);
        REQUIRE(z <= b);
        s += z;
      }
      CHECK(std::abs(s / n - mean) < 5.0 * std::min(1.0, b - a) / std::sqrt(static_cast<double>(n)));
    }
  }

  TEST_CASE("constrained aux samples satisfy the per-point and average constraints") {
    RngStream rng(7);
    TheoryConfig cfg = TheoryConfig::axis_aligned(20, 10.0, 1.0);
    cfg.n = 2000;
    cfg.epsilon = 0.5;
    const Matrix x = gen_constrained_aux(cfg, rng);
    REQUIRE(x.rows() == 2000);
    const GmmOracle oracle(cfg.mu, cfg.sigma);
    for (std::size_t r = 0; r < x.rows(); ++r)
      CHECK(std::abs(2.0 * dot(x.row(r), cfg.mu)) <= cfg.sigma * cfg.sigma * cfg.epsilon);
    const auto check = lemma_constraint_check(x, oracle, cfg.epsilon);
    CHECK(check.score_form);
    CHECK(check.linear_form);
  }

  TEST_CASE("rejection stalls where the constraint is far in the tail") {
    RngStream rng(8);
    TheoryConfig cfg = TheoryConfig::axis_aligned(20, 10.0, 1.0);
    cfg.n = 10;
    CHECK_THROWS_AS(gen_constrained_aux(cfg, rng, ConstraintMethod::kRejection), RejectionStall);
  }

  TEST_CASE("conditional and rejection samplers draw from the same law") {
    RngStream a(9), b(10);
    TheoryConfig cfg = TheoryConfig::axis_aligned(3, 1.0, 1.0);
    cfg.n = 10000;
    cfg.epsilon = 1.0;  // |x^T mu| <= 0.5: acceptance about 0.2
    const Matrix x = gen_constrained_aux(cfg, a, ConstraintMethod::kConditional);
    const Matrix y = gen_constrained_aux(cfg, b, ConstraintMethod::kRejection);
    CHECK(ks_distance(projections(x, cfg.mu), projections(y, cfg.mu)) < 0.025);
    Vec ox, oy;
    for (std::size_t r = 0; r < x.rows(); ++r) ox.push_back(x(r, 1));
    for (std::size_t r = 0; r < y.rows(); ++r) oy.push_back(y(r, 1));
    CHECK(ks_distance(ox, oy) < 0.025);
  }

  TEST_CASE("a huge epsilon gives back the unconstrained aux marginal") {
    RngStream a(11), b(12);
    TheoryConfig cfg = TheoryConfig::axis_aligned(5, 2.0, 1.0);
    cfg.n = 10000;
    cfg.n_prime = 0;
    cfg.epsilon = 1e9;
    const Matrix x = gen_constrained_aux(cfg, a);
    const Matrix y = gen_theory_pair(cfg, b).aux;
    CHECK(ks_distance(projections(x, cfg.mu), projections(y, cfg.mu)) < 0.02);
  }

  TEST_CASE("generalized model reduces to the theory pair") {
    TheoryConfig cfg;
    cfg.mu = {2.0, 1.0};
    cfg.sigma = 0.8;
    cfg.n = 50;
    cfg.n_prime = 40;
    cfg.n_test = 0;
    RngStream a(13), b(13);
    const auto g = gen_generalized(cfg, a);
    const auto p = gen_theory_pair(cfg, b);
    CHECK(std::equal(g.in.flat().begin(), g.in.flat().end(), p.in.flat().begin()));
    CHECK(std::equal(g.aux.flat().begin(), g.aux.flat().end(), p.aux.flat().begin()));
  }

  TEST_CASE("generalized ID projections centre on one") {
    RngStream rng(14);
    TheoryConfig cfg = TheoryConfig::axis_aligned(4, 4.0, 1.0);
    cfg.n_prime = 10000;
    cfg.n = 0;
    cfg.n_test = 0;
    cfg.s_range = 1.0;
    const auto g = gen_generalized(cfg, rng);
    const double m2 = dot(cfg.mu, cfg.mu);
    double s = 0;
    for (std::size_t r = 0; r < g.in.rows(); ++r) s += dot(g.in.row(r), cfg.mu) / m2;
    // Var of the projection: s_range^2 / 3 + sigma^2 / |mu|^2.
    const double sd = std::sqrt(1.0 / 3.0 + 1.0 / 16.0);
    CHECK(std::abs(s / 10000.0 - 1.0) < 4.0 * sd / 100.0);
  }

  TEST_CASE("generalized shift bound") {
    RngStream rng(15);
    TheoryConfig cfg = TheoryConfig::axis_aligned(2, 4.0, 1.0);
    cfg.v = {0.0, 1.2};  // 0.3 |mu|
    CHECK_THROWS_AS(gen_generalized(cfg, rng), BoundViolation);
    cfg.v = {0.0, 0.0};
    cfg.g_range = 1.5;
    CHECK_THROWS_AS(gen_generalized(cfg, rng), BoundViolation);
  }
}
