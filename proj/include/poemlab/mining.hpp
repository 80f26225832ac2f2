#pragma once

// Outlier selection: Thompson-sampling boundary-score mining and the greedy
// (posterior mean) and random baselines.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poemlab/blr.hpp"
#include "poemlab/linalg.hpp"
#include "poemlab/rng.hpp"

namespace poemlab {

enum class SamplerKind { kThompson, kGreedyMean, kRandom };

std::string to_string(SamplerKind kind);
// Accepts "thompson", "greedy_mean" (alias "greedy"), "random".
SamplerKind parse_sampler(std::string_view name);

struct MinedItem {
  std::size_t index = 0;
  double score = 0.0;
};

// Selected pool indices with their estimated boundary scores, sorted by
// score descending (ties by ascending index). For the random sampler the
// order is draw order and scores are evaluated under the supplied weights.
struct MinedSet {
  std::vector<MinedItem> selected;

  std::size_t size() const { return selected.size(); }
  std::vector<std::size_t> indices() const;
  double mean_score() const;
  double min_score() const;
  double max_score() const;
};

// -|w^T phi|; zero on the estimated boundary.
double boundary_score_est(std::span<const double> w, std::span<const double> phi);

// Top-N rows of pool_features by boundary score under w. Throws EmptyPool on
// an empty pool; N >= S returns every index.
MinedSet select_top_n(const Matrix& pool_features, std::span<const double> w, std::size_t n);

// Maps one raw input row to its regression feature (including any bias entry).
using FeatureFn = std::function<Vec(std::span<const double>)>;

Matrix encode_rows(const Matrix& inputs, const FeatureFn& encoder);

// One mining round. `thompson_weights` is the posterior draw for this round;
// thompson mines with it, greedy_mean ignores it in favour of the posterior
// mean, random ignores both and draws a uniform N-subset from rng. Scores of
// the returned set are always evaluated under the weights the sampler used
// (thompson_weights for random).
MinedSet mine_with_features(const Matrix& pool_features, SamplerKind sampler,
                            const PosteriorState& posterior, std::span<const double> thompson_weights,
                            std::size_t n, RngStream& rng);

// Convenience form: encodes the pool and draws the Thompson weights itself.
MinedSet mine(const Matrix& pool, const FeatureFn& encoder, SamplerKind sampler,
              const PosteriorState& posterior, std::size_t n, RngStream& rng);

}  // namespace poemlab
