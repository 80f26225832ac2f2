#include "poemlab/mining.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "poemlab/errors.hpp"

namespace poemlab {

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kThompson:
      return "thompson";
    case SamplerKind::kGreedyMean:
      return "greedy_mean";
    case SamplerKind::kRandom:
      return "random";
  }
  return "unknown";
}

SamplerKind parse_sampler(std::string_view name) {
  if (name == "thompson") return SamplerKind::kThompson;
  if (name == "greedy_mean" || name == "greedy") return SamplerKind::kGreedyMean;
  if (name == "random") return SamplerKind::kRandom;
  throw ConfigError("sampler", "unknown sampler '" + std::string(name) +
                                   "' (expected thompson, greedy_mean or random)");
}

std::vector<std::size_t> MinedSet::indices() const {
  std::vector<std::size_t> out;
  out.reserve(selected.size());
  for (const auto& item : selected) out.push_back(item.index);
  return out;
}

double MinedSet::mean_score() const {
  if (selected.empty()) return 0.0;
  double s = 0.0;
  for (const auto& item : selected) s += item.score;
  return s / static_cast<double>(selected.size());
}

double MinedSet::min_score() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& item : selected) m = std::min(m, item.score);
  return selected.empty() ? 0.0 : m;
}

double MinedSet::max_score() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& item : selected) m = std::max(m, item.score);
  return selected.empty() ? 0.0 : m;
}

double boundary_score_est(std::span<const double> w, std::span<const double> phi) {
  return -std::abs(dot(w, phi));
}

MinedSet select_top_n(const Matrix& pool_features, std::span<const double> w, std::size_t n) {
  const std::size_t pool_size = pool_features.rows();
  if (pool_size == 0) throw EmptyPool("select_top_n: pool is empty");
  if (n == 0) throw ConfigError("mined_count", "must be at least 1");

  std::vector<MinedItem> items(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i)
    items[i] = {i, boundary_score_est(w, pool_features.row(i))};

  auto better = [](const MinedItem& a, const MinedItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  };
  const std::size_t keep = std::min(n, pool_size);
  std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(keep),
                    items.end(), better);
  items.resize(keep);
  return MinedSet{std::move(items)};
}

Matrix encode_rows(const Matrix& inputs, const FeatureFn& encoder) {
  Matrix out;
  for (std::size_t i = 0; i < inputs.rows(); ++i) out.append_row(encoder(inputs.row(i)));
  return out;
}

MinedSet mine_with_features(const Matrix& pool_features, SamplerKind sampler,
                            const PosteriorState& posterior,
                            std::span<const double> thompson_weights, std::size_t n,
                            RngStream& rng) {
  if (pool_features.rows() == 0) throw EmptyPool("mine: pool is empty");
  switch (sampler) {
    case SamplerKind::kThompson:
      return select_top_n(pool_features, thompson_weights, n);
    case SamplerKind::kGreedyMean:
      return select_top_n(pool_features, posterior.mean, n);
    case SamplerKind::kRandom: {
      if (n == 0) throw ConfigError("mined_count", "must be at least 1");
      MinedSet out;
      for (std::size_t idx : rng.subset(pool_features.rows(), n))
        out.selected.push_back({idx, boundary_score_est(thompson_weights, pool_features.row(idx))});
      return out;
    }
  }
  throw ConfigError("sampler", "unhandled sampler kind");
}

MinedSet mine(const Matrix& pool, const FeatureFn& encoder, SamplerKind sampler,
              const PosteriorState& posterior, std::size_t n, RngStream& rng) {
  if (pool.rows() == 0) throw EmptyPool("mine: pool is empty");
  const Matrix features = encode_rows(pool, encoder);
  const Vec w = sampler == SamplerKind::kThompson ? sample_weights(posterior, rng) : posterior.mean;
  return mine_with_features(features, sampler, posterior, w, n, rng);
}

}  // namespace poemlab
