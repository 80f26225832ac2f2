#include "poemlab/blr.hpp"

#include <cmath>
#include <string>

#include "poemlab/errors.hpp"

namespace poemlab {

void TargetScheme::validate() const {
  if (!(outlier_logit > 0.0 && id_logit < 0.0))
    throw ConfigError("target_scheme", "require outlier_logit > 0 > id_logit");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
    throw ConfigError("noise_sd", "must be finite and non-negative");
}

FeatureQueue::FeatureQueue(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim) {
  if (capacity_ == 0) throw ConfigError("queue_capacity", "must be at least 1");
}

void FeatureQueue::push(std::span<const double> phi, double y_tar) {
  if (dim_ == 0) dim_ = phi.size();
  if (phi.size() != dim_)
    throw DimensionMismatch("FeatureQueue: expected dim " + std::to_string(dim_) + ", got " +
                            std::to_string(phi.size()));
  if (!std::isfinite(y_tar)) throw FormatError("FeatureQueue: non-finite target");
  for (double v : phi)
    if (!std::isfinite(v)) throw FormatError("FeatureQueue: non-finite feature");
  entries_.push_back({Vec(phi.begin(), phi.end()), y_tar});
  while (entries_.size() > capacity_) entries_.pop_front();
}

Vec FeatureQueue::flat_features() const {
  Vec out;
  out.reserve(entries_.size() * dim_);
  for (const auto& e : entries_) out.insert(out.end(), e.phi.begin(), e.phi.end());
  return out;
}

Vec FeatureQueue::targets() const {
  Vec out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.y_tar);
  return out;
}

FeatureQueue FeatureQueue::from_flat(std::size_t capacity, std::size_t dim,
                                     std::span<const double> phi,
                                     std::span<const double> y) {
  if (dim == 0 || phi.size() != y.size() * dim)
    throw FormatError("FeatureQueue::from_flat: inconsistent array lengths");
  FeatureQueue q(capacity, dim);
  for (std::size_t i = 0; i < y.size(); ++i) q.push(phi.subspan(i * dim, dim), y[i]);
  return q;
}

void enqueue(FeatureQueue& queue, std::span<const double> phi, bool is_outlier,
             const TargetScheme& scheme, RngStream& rng) {
  const double target = is_outlier ? scheme.outlier_logit : scheme.id_logit;
  // Noise is drawn even when noise_sd == 0 so the stream advances identically.
  const double noise = scheme.noise_sd * rng.normal();
  queue.push(phi, target + noise);
}

Matrix isotropic_prior(std::size_t dim, double scale) {
  if (!(scale > 0.0)) throw ConfigError("prior_scale", "must be positive");
  return scale * Matrix::identity(dim);
}

PosteriorState posterior_update(const FeatureQueue& queue, const Matrix& prior_cov,
                                double noise_var) {
  if (!(noise_var > 0.0) || !std::isfinite(noise_var))
    throw ConfigError("noise_var", "must be positive and finite");
  if (!prior_cov.square()) throw DimensionMismatch("prior covariance must be square");
  const std::size_t m = prior_cov.rows();
  if (!queue.empty() && queue.dim() != m)
    throw DimensionMismatch("queue feature dim " + std::to_string(queue.dim()) +
                            " does not match prior dim " + std::to_string(m));

  bool diagonal = true;
  for (std::size_t i = 0; i < m && diagonal; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j && prior_cov(i, j) != 0.0) {
        diagonal = false;
        break;
      }

  Matrix precision(m, m);
  if (diagonal) {
    for (std::size_t i = 0; i < m; ++i) {
      if (!(prior_cov(i, i) > 0.0))
        throw NotPositiveDefinite("prior covariance has a non-positive diagonal");
      precision(i, i) = 1.0 / prior_cov(i, i);
    }
  } else {
    // Sigma^-1 column by column through its own factorization.
    precision = inverse_spd(cholesky(prior_cov));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < i; ++j) {
        const double v = 0.5 * (precision(i, j) + precision(j, i));
        precision(i, j) = v;
        precision(j, i) = v;
      }
  }

  const double inv_var = 1.0 / noise_var;
  Vec phi_y(m, 0.0);
  for (const auto& e : queue.entries()) {
    for (std::size_t i = 0; i < m; ++i) {
      const double pi = e.phi[i] * inv_var;
      if (pi == 0.0) continue;
      phi_y[i] += pi * e.y_tar;
      for (std::size_t j = 0; j <= i; ++j) precision(i, j) += pi * e.phi[j];
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < i; ++j) precision(j, i) = precision(i, j);

  PosteriorState state;
  state.prior_cov = prior_cov;
  state.noise_var = noise_var;
  state.precision_factor = cholesky(precision);
  state.precision = std::move(precision);
  state.mean = solve_spd(state.precision_factor, phi_y);
  return state;
}

Vec sample_weights(const PosteriorState& state, RngStream& rng) {
  return sample_mvn(state.mean, state.precision_factor, rng);
}

}  // namespace poemlab
