#pragma once

// Synthetic data: the 2-D three-Gaussian toy with box outliers, the symmetric
// GMM pair used by the sample-complexity analysis, its boundary-score
// constrained auxiliary sampler, and the generalized (scalar-shifted) model.

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "poemlab/linalg.hpp"
#include "poemlab/rng.hpp"

namespace poemlab {

struct LabeledSet {
  Matrix points;
  std::vector<int> labels;  // 0-based class indices

  std::size_t size() const { return points.rows(); }
};

struct ToyConfig {
  std::array<std::array<double, 2>, 3> class_means{{{0.0, 4.0}, {-3.5, -2.0}, {3.5, -2.0}}};
  double class_sd = 0.7;
  double box_lo = -8.0;
  double box_hi = 8.0;
  // Outliers keep at least this distance from every class mean; 2 * class_sd
  // unless overridden.
  double exclusion_radius = 1.4;

  void validate() const;
};

struct ToyData {
  LabeledSet id;
  Matrix outliers;
};

// ID points from the equal-prior mixture; outliers uniform on the box,
// rejected while within exclusion_radius of any class mean. Throws
// RejectionStall if fewer than 1% of 1e5 proposals are accepted.
ToyData gen_toy(const ToyConfig& config, std::size_t count_id, std::size_t count_out, RngStream& rng);

struct TheoryConfig {
  Vec mu;
  double sigma = 1.0;
  std::size_t n = 200;        // auxiliary draws
  std::size_t n_prime = 200;  // ID draws
  std::size_t n_test = 200;   // test-OOD draws for the generalized model
  double epsilon = 0.5;
  Vec v;                      // test-OOD shift (generalized model); empty = 0
  double s_range = 0.0;       // ID scalar s ~ U[-s_range, s_range]
  double g_range = 0.0;       // aux scalar g ~ U[-g_range, g_range]

  std::size_t dim() const { return mu.size(); }
  double mu_norm() const;
  double snr() const;           // r0 = |mu| / sigma
  double dim_ratio() const;     // r1 = d / n

  // |mu| along the first axis; convenience for configs given as (norm, d).
  static TheoryConfig axis_aligned(std::size_t d, double mu_norm, double sigma);
};

struct TheoryPair {
  Matrix in;   // n' rows ~ N(mu, sigma^2 I)
  Matrix aux;  // n rows ~ N(-mu, sigma^2 I)
};

// Throws DegenerateMu for mu = 0.
TheoryPair gen_theory_pair(const TheoryConfig& config, RngStream& rng);

enum class ConstraintMethod {
  // Rejection from N(-mu, sigma^2 I); throws RejectionStall when acceptance
  // falls below 1e-4.
  kRejection,
  // Exact draw from the same conditional law: the component along mu is a
  // truncated normal, the orthogonal complement is unconstrained.
  kConditional,
};

// n points from N(-mu, sigma^2 I) conditioned on |2 x^T mu| <= sigma^2 eps.
Matrix gen_constrained_aux(const TheoryConfig& config, RngStream& rng,
                           ConstraintMethod method = ConstraintMethod::kConditional);

struct GeneralizedData {
  Matrix in;        // x ~ N((1+s) mu, sigma^2 I), s ~ U[-s_range, s_range]
  Matrix aux;       // x ~ N((-1+g) mu, sigma^2 I), g ~ U[-g_range, g_range]
  Matrix test_ood;  // x ~ N(-mu + v, sigma^2 I)
};

// Throws BoundViolation if s_range, g_range or |v| exceed |mu| / 4.
GeneralizedData gen_generalized(const TheoryConfig& config, RngStream& rng);

// Standard normal restricted to [lo, hi] (either bound may be infinite).
double truncated_normal(double lo, double hi, RngStream& rng);

// One row per point: coordinates then label (class index or OUTLIER).
void write_points_csv(const std::filesystem::path& path, const Matrix& points,
                      const std::vector<int>* labels);

}  // namespace poemlab
