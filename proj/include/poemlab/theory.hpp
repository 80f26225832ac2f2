#pragma once

// Executable form of the sample-complexity analysis under the symmetric
// Gaussian mixture 1/2 N(mu, sigma^2 I) + 1/2 N(-mu, sigma^2 I).

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poemlab/linalg.hpp"
#include "poemlab/rng.hpp"
#include "poemlab/synthdata.hpp"

namespace poemlab {

// Standard normal upper tail (1/sqrt(2 pi)) int_x^inf exp(-t^2/2) dt.
double q_function(double x);

struct GmmOracle {
  Vec mu;
  double sigma = 1.0;

  GmmOracle(Vec mu_in, double sigma_in);
};

// G(x) = -(2 / sigma^2) |x^T mu|.
double boundary_score_exact(const GmmOracle& oracle, std::span<const double> x);

// Outlier logit log p(outlier|x) - log p(in|x) computed from the two class
// densities (squared distances, full normalizers) in log space.
double outlier_logit_bayes(const GmmOracle& oracle, std::span<const double> x);

struct LemmaCheck {
  bool score_form = false;   // (1/n) sum -G(x_i) <= eps
  bool linear_form = false;  // sum |2 x_i^T mu| <= n sigma^2 eps
  double mean_neg_score = 0.0;
  double linear_sum = 0.0;
};

// Both sides of the constraint translation. The two flags always agree.
LemmaCheck lemma_constraint_check(const Matrix& samples, const GmmOracle& oracle, double epsilon);

// (1/(n'+n)) (sum in - sum aux).
Vec estimator_theta(const Matrix& in_set, const Matrix& aux_set);

struct ThetaDecomposition {
  Vec theta1;  // mean(in) - mu
  Vec theta2;  // -mean(aux) - mu
  Vec recomposed;  // mu + n'/(n+n') theta1 + n/(n+n') theta2
};
ThetaDecomposition decompose_theta(const Matrix& in_set, const Matrix& aux_set,
                                   std::span<const double> mu);

// Right-hand side of the lower bound on mu^T theta / (sigma |theta|).
// Throws RegimeViolation if r0 < 5, eps > 1 or eps < 0.
double theorem_bound(const TheoryConfig& cfg);

// The two explicit failure-probability terms exp(-r1 n / 8 sigma^2) and
// 2 exp(-n |mu| / (2 sigma)).
std::pair<double, double> theorem_failure_terms(const TheoryConfig& cfg);

// mu^T theta / (sigma |theta|).
double normalized_margin(std::span<const double> theta, std::span<const double> mu, double sigma);

// FPR on N(-mu + v, sigma^2 I) for sign(theta^T x), and its |v| <= |mu|/4 bound.
double generalized_fpr(std::span<const double> theta, std::span<const double> mu,
                       std::span<const double> v, double sigma);
double generalized_fpr_bound(std::span<const double> theta, std::span<const double> mu, double sigma);

struct ErrorRateCheck {
  std::size_t trial = 0;
  std::size_t draws = 0;
  double predicted = 0.0;  // q_function(margin)
  double fnr = 0.0;
  double fpr = 0.0;
  double std_error = 0.0;  // binomial standard error at the predicted rate
  bool fnr_ok = false;     // |fnr - predicted| <= 3 std_error
  bool fpr_ok = false;
};

// Empirical FNR on fresh N(mu) draws and FPR on fresh N(-mu) draws for the
// classifier sign(theta^T x).
ErrorRateCheck check_error_rates(std::span<const double> theta, const TheoryConfig& cfg,
                                 std::size_t draws, RngStream& rng);

struct VerifyOptions {
  std::size_t trials = 1000;
  std::size_t test_draws = 100000;
  std::size_t error_rate_trials = 5;  // trials that also run check_error_rates
  std::uint64_t seed = 0;
  ConstraintMethod constraint = ConstraintMethod::kConditional;
};

struct TheoremReport {
  TheoryConfig config;
  std::size_t trials = 0;
  std::vector<double> bound_values;
  std::vector<double> lhs_values;
  double violation_rate = 0.0;
  std::pair<double, double> failure_terms{0.0, 0.0};
  std::vector<ErrorRateCheck> error_rates;

  std::string to_json(bool per_trial) const;
};

// Per trial: ID set of n' draws, constrained aux set of n draws, theta-hat,
// lhs = normalized margin; violation when lhs < bound. Trial t uses the
// stream derived from (seed, t).
TheoremReport verify_theorem(const TheoryConfig& cfg, const VerifyOptions& options);

}  // namespace poemlab
