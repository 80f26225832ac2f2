#pragma once

// Bayesian linear regression over the outlier-score head w, fed by a
// fixed-capacity FIFO of (feature, target logit) pairs.

#include <cstddef>
#include <deque>
#include <span>

#include "poemlab/linalg.hpp"
#include "poemlab/rng.hpp"

namespace poemlab {

// Regression targets: +3 logit (p = 0.95) for auxiliary outliers, -3 for ID
// samples, each observed with i.i.d. N(0, noise_sd^2) noise.
struct TargetScheme {
  double outlier_logit = 3.0;
  double id_logit = -3.0;
  double noise_sd = 1.0;

  void validate() const;
};

struct QueueEntry {
  Vec phi;
  double y_tar = 0.0;
};

class FeatureQueue {
 public:
  explicit FeatureQueue(std::size_t capacity, std::size_t dim = 0);

  std::size_t capacity() const { return capacity_; }
  // Feature dimension; 0 until the first push on a queue built without one.
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Appends (phi, y) and evicts the oldest entry beyond capacity.
  void push(std::span<const double> phi, double y_tar);

  const std::deque<QueueEntry>& entries() const { return entries_; }

  // Flat views for checkpointing: phi row-major (size x dim) and targets.
  Vec flat_features() const;
  Vec targets() const;
  static FeatureQueue from_flat(std::size_t capacity, std::size_t dim,
                                std::span<const double> phi, std::span<const double> y);

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::deque<QueueEntry> entries_;
};

// Appends phi with target +/-logit plus noise drawn from rng.
void enqueue(FeatureQueue& queue, std::span<const double> phi, bool is_outlier,
             const TargetScheme& scheme, RngStream& rng);

struct PosteriorState {
  Matrix prior_cov;             // Sigma
  double noise_var = 1.0;       // sigma^2
  Matrix precision;             // Sigma_p = sigma^-2 Phi Phi^T + Sigma^-1
  Vec mean;                     // sigma^-2 Sigma_p^-1 Phi y
  CholeskyFactor precision_factor;

  std::size_t dim() const { return mean.size(); }
};

// Prior covariance lambda * I of dimension m.
Matrix isotropic_prior(std::size_t dim, double scale);

// Posterior from the full queue contents. Uses Cholesky solves only; the
// prior inverse is also obtained through a factorization of Sigma.
PosteriorState posterior_update(const FeatureQueue& queue, const Matrix& prior_cov,
                                double noise_var);

// w ~ N(mean, Sigma_p^-1).
Vec sample_weights(const PosteriorState& state, RngStream& rng);

}  // namespace poemlab
