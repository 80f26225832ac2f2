#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "helpers.hpp"
#include "poemlab/blr.hpp"
#include "poemlab/errors.hpp"
#include "poemlab/mining.hpp"

using namespace poemlab;

namespace {

Matrix column(std::initializer_list<double> values) {
  Matrix m(0, 1);
  for (double v : values) {
    const double row[1] = {v};
    m.append_row(row);
  }
  return m;
}

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_SUITE("mining") {
  TEST_CASE("boundary score examples") {
    CHECK(boundary_score_est(Vec{1, 0}, Vec{0, 5}) == 0.0);
    CHECK(boundary_score_est(Vec{2, -1}, Vec{1, 1}) == -1.0);
    const Vec phi{0.3, -2.0, 1.1};
    const Vec w{1.5, 0.2, -0.7};
    Vec w3 = w;
    for (double& v : w3) v *= 3.0;
    CHECK(boundary_score_est(w3, phi) == doctest::Approx(3.0 * boundary_score_est(w, phi)));
  }

  TEST_CASE("top-n picks the largest scores") {
    // Scores -|phi| = {-3, -1, -2, 0}.
    const auto s = select_top_n(column({3, 1, 2, 0}), Vec{1}, 2);
    CHECK(s.indices() == std::vector<std::size_t>{3, 1});
    CHECK(s.selected[0].score == 0.0);
    CHECK(s.selected[1].score == -1.0);
  }

  TEST_CASE("n >= pool size returns every index, score sorted") {
    const auto s = select_top_n(column({3, 1, 2, 0}), Vec{1}, 10);
    CHECK(s.indices() == std::vector<std::size_t>{3, 1, 2, 0});
  }

  TEST_CASE("ties go to the lower index") {
    const auto s = select_top_n(column({5, 5, 5, 5, 1, 5, 5, 1}), Vec{1}, 1);
    CHECK(s.indices() == std::vector<std::size_t>{4});
  }

  TEST_CASE("empty pool and zero n") {
    CHECK_THROWS_AS(select_top_n(Matrix(0, 2), Vec{1, 1}, 1), EmptyPool);
    CHECK_THROWS_AS(select_top_n(column({1}), Vec{1}, 0), ConfigError);
  }

  TEST_CASE("top-n maximizes the score sum over all subsets") {
    RngStream rng(3);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t s = 2 + rng.index(11);
      const std::size_t n = 1 + rng.index(s);
      const Matrix pool = testutil::random_matrix(s, 3, rng);
      Vec w(3);
      for (double& v : w) v = rng.normal();
      const auto picked = select_top_n(pool, w, n);
      double best = -1e300;
      for (unsigned mask = 0; mask < (1u << s); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
        double sum = 0.0;
        for (std::size_t i = 0; i < s; ++i)
          if (mask & (1u << i)) sum += boundary_score_est(w, pool.row(i));
        best = std::max(best, sum);
      }
      double got = 0.0;
      for (const auto& item : picked.selected) got += item.score;
      CHECK(got == doctest::Approx(best).epsilon(1e-12));
    }
  }

  TEST_CASE("selection is invariant to positive scaling of w") {
    RngStream rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix pool = testutil::random_matrix(200, 4, rng);
      Vec w(4);
      for (double& v : w) v = rng.normal();
      Vec scaled = w;
      const double alpha = 0.01 + 10.0 * rng.uniform();
      for (double& v : scaled) v *= alpha;
      CHECK(as_set(select_top_n(pool, w, 25).indices()) == as_set(select_top_n(pool, scaled, 25).indices()));
    }
  }

  TEST_CASE("random sampler with n = S returns the whole pool") {
    RngStream rng(5);
    const Matrix pool = testutil::random_matrix(30, 2, rng);
    const auto post = posterior_update(FeatureQueue(4, 2), Matrix::identity(2), 1.0);
    const auto s = mine_with_features(pool, SamplerKind::kRandom, post, Vec{1, 0}, 30, rng);
    std::vector<std::size_t> idx = s.indices();
    std::sort(idx.begin(), idx.end());
    std::vector<std::size_t> all(30);
    std::iota(all.begin(), all.end(), 0);
    CHECK(idx == all);
  }

  TEST_CASE("greedy sampler with a zero mean takes the first n indices") {
    RngStream rng(6);
    const Matrix pool = testutil::random_matrix(40, 3, rng);
    const auto post = posterior_update(FeatureQueue(4, 3), Matrix::identity(3), 1.0);
    const auto s = mine_with_features(pool, SamplerKind::kGreedyMean, post, Vec{1, 2, 3}, 7, rng);
    CHECK(s.indices() == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
    for (const auto& item : s.selected) CHECK(item.score == 0.0);
  }

  TEST_CASE("thompson mining is reproducible") {
    RngStream data(7);
    const Matrix pool = testutil::random_matrix(100, 2, data);
    auto encoder = [](std::span<const double> x) { return Vec{x[0], x[1], 1.0}; };
    const auto post = posterior_update(FeatureQueue(4, 3), Matrix::identity(3), 1.0);
    RngStream a(8), b(8);
    CHECK(mine(pool, encoder, SamplerKind::kThompson, post, 10, a).indices() ==
          mine(pool, encoder, SamplerKind::kThompson, post, 10, b).indices());
  }

  TEST_CASE("a concentrated posterior makes thompson agree with greedy") {
    RngStream rng(9);
    const std::size_t m = 3;
    const Vec w_true{1.0, -2.0, 0.5};
    const Matrix anchors = testutil::random_matrix(20, m, rng);
    FeatureQueue q(10000, m);
    for (std::size_t k = 0; k < 10000; ++k) {
      const auto phi = anchors.row(k % 20);
      q.push(phi, dot(w_true, phi));
    }
    const auto post = posterior_update(q, isotropic_prior(m, 1.0), 0.01);
    const Matrix pool = testutil::random_matrix(1000, m, rng);
    std::size_t agree = 0, total = 0;
    for (int round = 0; round < 10; ++round) {
      const Vec w = sample_weights(post, rng);
      const auto t = as_set(mine_with_features(pool, SamplerKind::kThompson, post, w, 100, rng).indices());
      const auto g = mine_with_features(pool, SamplerKind::kGreedyMean, post, w, 100, rng).indices();
      for (std::size_t i : g) agree += t.count(i);
      total += g.size();
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(total) >= 0.99);
  }

  TEST_CASE("sampler names") {
    CHECK(parse_sampler("thompson") == SamplerKind::kThompson);
    CHECK(parse_sampler("greedy_mean") == SamplerKind::kGreedyMean);
    CHECK(parse_sampler("random") == SamplerKind::kRandom);
    CHECK(to_string(SamplerKind::kGreedyMean) == "greedy_mean");
    CHECK_THROWS_AS(parse_sampler("ucb"), ConfigError);
  }
}
