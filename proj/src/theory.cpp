#include "poemlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "poemlab/errors.hpp"

namespace poemlab {

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

GmmOracle::GmmOracle(Vec mu_in, double sigma_in) : mu(std::move(mu_in)), sigma(sigma_in) {
  if (!(sigma > 0.0)) throw ConfigError("sigma", "must be positive");
  if (mu.empty() || norm(mu) == 0.0) throw DegenerateMu("mu must be a non-zero vector");
}

double boundary_score_exact(const GmmOracle& oracle, std::span<const double> x) {
  return -(2.0 / (oracle.sigma * oracle.sigma)) * std::abs(dot(x, oracle.mu));
}

double outlier_logit_bayes(const GmmOracle& oracle, std::span<const double> x) {
  const std::size_t d = x.size();
  if (d != oracle.mu.size()) throw DimensionMismatch("outlier_logit_bayes: dimension mismatch");
  double d_in = 0.0, d_out = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    d_in += (x[i] - oracle.mu[i]) * (x[i] - oracle.mu[i]);
    d_out += (x[i] + oracle.mu[i]) * (x[i] + oracle.mu[i]);
  }
  const double s2 = oracle.sigma * oracle.sigma;
  const double log_norm = -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * s2);
  // Joint log densities with equal priors.
  const double log_in = std::log(0.5) + log_norm - d_in / (2.0 * s2);
  const double log_out = std::log(0.5) + log_norm - d_out / (2.0 * s2);
  const double mx = std::max(log_in, log_out);
  const double log_evidence = mx + std::log(std::exp(log_in - mx) + std::exp(log_out - mx));
  const double log_p_out = log_out - log_evidence;
  const double log_p_in = log_in - log_evidence;
  return log_p_out - log_p_in;
}

LemmaCheck lemma_constraint_check(const Matrix& samples, const GmmOracle& oracle, double epsilon) {
  if (samples.rows() == 0) throw LengthMismatch("lemma_constraint_check: no samples");
  LemmaCheck c;
  const double n = static_cast<double>(samples.rows());
  const double s2 = oracle.sigma * oracle.sigma;
  double neg_score_sum = 0.0;
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const double proj = dot(samples.row(i), oracle.mu);
    neg_score_sum += -boundary_score_exact(oracle, samples.row(i));
    c.linear_sum += std::abs(2.0 * proj);
  }
  c.mean_neg_score = neg_score_sum / n;
  c.score_form = c.mean_neg_score <= epsilon;
  c.linear_form = c.linear_sum <= n * s2 * epsilon;
  return c;
}

Vec estimator_theta(const Matrix& in_set, const Matrix& aux_set) {
  if (in_set.rows() == 0 || aux_set.rows() == 0)
    throw LengthMismatch("estimator_theta: both sets must be non-empty");
  if (in_set.cols() != aux_set.cols()) throw DimensionMismatch("estimator_theta: width mismatch");
  const std::size_t d = in_set.cols();
  Vec theta(d, 0.0);
  for (std::size_t r = 0; r < in_set.rows(); ++r)
    for (std::size_t i = 0; i < d; ++i) theta[i] += in_set(r, i);
  for (std::size_t r = 0; r < aux_set.rows(); ++r)
    for (std::size_t i = 0; i < d; ++i) theta[i] -= aux_set(r, i);
  const double total = static_cast<double>(in_set.rows() + aux_set.rows());
  for (double& v : theta) v /= total;
  return theta;
}

ThetaDecomposition decompose_theta(const Matrix& in_set, const Matrix& aux_set,
                                   std::span<const double> mu) {
  const std::size_t d = mu.size();
  const double np = static_cast<double>(in_set.rows());
  const double n = static_cast<double>(aux_set.rows());
  ThetaDecomposition out{Vec(d, 0.0), Vec(d, 0.0), Vec(d, 0.0)};
  for (std::size_t r = 0; r < in_set.rows(); ++r)
    for (std::size_t i = 0; i < d; ++i) out.theta1[i] += in_set(r, i) / np;
  for (std::size_t r = 0; r < aux_set.rows(); ++r)
    for (std::size_t i = 0; i < d; ++i) out.theta2[i] -= aux_set(r, i) / n;
  for (std::size_t i = 0; i < d; ++i) {
    out.theta1[i] -= mu[i];
    out.theta2[i] -= mu[i];
    out.recomposed[i] = mu[i] + np / (n + np) * out.theta1[i] + n / (n + np) * out.theta2[i];
  }
  return out;
}

double theorem_bound(const TheoryConfig& cfg) {
  if (cfg.mu.empty() || cfg.mu_norm() == 0.0) throw DegenerateMu("mu must be a non-zero vector");
  if (!(cfg.sigma > 0.0)) throw ConfigError("sigma", "must be positive");
  if (cfg.snr() < 5.0)
    throw RegimeViolation("mu", "signal/noise ratio |mu|/sigma = " + std::to_string(cfg.snr()) +
                                    " is below the required 5");
  if (cfg.epsilon > 1.0) throw RegimeViolation("epsilon", "must be <= 1 for the bound to apply");
  if (cfg.epsilon < 0.0) throw RegimeViolation("epsilon", "must be non-negative");
  if (cfg.n == 0) throw ConfigError("n", "must be positive");
  const double m = cfg.mu_norm();
  const double s = cfg.sigma;
  const double d = static_cast<double>(cfg.dim());
  const double numerator = m * m - std::sqrt(s) * std::pow(m, 1.5) - s * s * cfg.epsilon / 2.0;
  const double denominator =
      2.0 * std::sqrt(s * s / static_cast<double>(cfg.n) * (d + 1.0 / s) + m * m);
  return numerator / denominator;
}

std::pair<double, double> theorem_failure_terms(const TheoryConfig& cfg) {
  const double s = cfg.sigma;
  const double n = static_cast<double>(cfg.n);
  return {std::exp(-cfg.dim_ratio() * n / (8.0 * s * s)),
          2.0 * std::exp(-0.5 * n * cfg.mu_norm() / s)};
}

double normalized_margin(std::span<const double> theta, std::span<const double> mu, double sigma) {
  return dot(mu, theta) / (sigma * norm(theta));
}

double generalized_fpr(std::span<const double> theta, std::span<const double> mu,
                       std::span<const double> v, double sigma) {
  Vec diff(mu.begin(), mu.end());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= v[i];
  return q_function(dot(diff, theta) / (sigma * norm(theta)));
}

double generalized_fpr_bound(std::span<const double> theta, std::span<const double> mu, double sigma) {
  return q_function(normalized_margin(theta, mu, sigma) - norm(mu) / (4.0 * sigma));
}

ErrorRateCheck check_error_rates(std::span<const double> theta, const TheoryConfig& cfg,
                                 std::size_t draws, RngStream& rng) {
  const std::size_t d = cfg.dim();
  ErrorRateCheck c;
  c.draws = draws;
  c.predicted = q_function(normalized_margin(theta, cfg.mu, cfg.sigma));
  std::size_t false_neg = 0, false_pos = 0;
  Vec x(d);
  for (std::size_t k = 0; k < draws; ++k) {
    for (std::size_t i = 0; i < d; ++i) x[i] = cfg.mu[i] + cfg.sigma * rng.normal();
    if (dot(theta, x) < 0.0) ++false_neg;  // ID predicted as aux
  }
  for (std::size_t k = 0; k < draws; ++k) {
    for (std::size_t i = 0; i < d; ++i) x[i] = -cfg.mu[i] + cfg.sigma * rng.normal();
    if (dot(theta, x) >= 0.0) ++false_pos;  // aux predicted as ID
  }
  const double nd = static_cast<double>(std::max<std::size_t>(draws, 1));
  c.fnr = static_cast<double>(false_neg) / nd;
  c.fpr = static_cast<double>(false_pos) / nd;
  c.std_error = std::sqrt(c.predicted * (1.0 - c.predicted) / nd);
  c.fnr_ok = std::abs(c.fnr - c.predicted) <= 3.0 * c.std_error;
  c.fpr_ok = std::abs(c.fpr - c.predicted) <= 3.0 * c.std_error;
  return c;
}

TheoremReport verify_theorem(const TheoryConfig& cfg, const VerifyOptions& options) {
  TheoremReport report;
  report.config = cfg;
  report.trials = options.trials;
  const double bound = theorem_bound(cfg);
  report.failure_terms = theorem_failure_terms(cfg);
  std::size_t violations = 0;
  for (std::size_t t = 0; t < options.trials; ++t) {
    RngStream rng = RngStream::derive(options.seed, t);
    TheoryConfig in_cfg = cfg;
    in_cfg.n = 0;
    Matrix in = gen_theory_pair(in_cfg, rng).in;
    Matrix aux = gen_constrained_aux(cfg, rng, options.constraint);
    const Vec theta = estimator_theta(in, aux);
    const double lhs = normalized_margin(theta, cfg.mu, cfg.sigma);
    report.lhs_values.push_back(lhs);
    report.bound_values.push_back(bound);
    if (lhs < bound) ++violations;
    if (t < options.error_rate_trials) {
      ErrorRateCheck c = check_error_rates(theta, cfg, options.test_draws, rng);
      c.trial = t;
      report.error_rates.push_back(c);
    }
  }
  report.violation_rate =
      options.trials == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(options.trials);
  return report;
}

std::string TheoremReport::to_json(bool per_trial) const {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["config"] = {{"mu", config.mu},
                 {"sigma", config.sigma},
                 {"n", config.n},
                 {"n_prime", config.n_prime},
                 {"epsilon", config.epsilon},
                 {"dim", config.dim()},
                 {"r0", config.snr()},
                 {"r1", config.dim_ratio()}};
  j["trials"] = trials;
  j["violation_rate"] = violation_rate;
  j["failure_terms"] = {failure_terms.first, failure_terms.second};
  double lhs_min = 0.0, lhs_mean = 0.0;
  if (!lhs_values.empty()) {
    lhs_min = *std::min_element(lhs_values.begin(), lhs_values.end());
    for (double v : lhs_values) lhs_mean += v;
    lhs_mean /= static_cast<double>(lhs_values.size());
  }
  j["bound"] = bound_values.empty() ? 0.0 : bound_values.front();
  j["lhs_min"] = lhs_min;
  j["lhs_mean"] = lhs_mean;
  auto rates = nlohmann::ordered_json::array();
  for (const auto& c : error_rates) {
    rates.push_back({{"trial", c.trial},
                     {"draws", c.draws},
                     {"predicted", c.predicted},
                     {"fnr", c.fnr},
                     {"fpr", c.fpr},
                     {"std_error", c.std_error},
                     {"fnr_ok", c.fnr_ok},
                     {"fpr_ok", c.fpr_ok}});
  }
  j["error_rates"] = rates;
  if (per_trial) {
    j["lhs_values"] = lhs_values;
    j["bound_values"] = bound_values;
  }
  return j.dump(2);
}

}  // namespace poemlab
