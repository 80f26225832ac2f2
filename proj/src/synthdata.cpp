#include "poemlab/synthdata.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "poemlab/errors.hpp"
#include "poemlab/theory.hpp"

namespace poemlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void add_gaussian_row(Matrix& out, std::span<const double> center, double sigma, RngStream& rng) {
  Vec row(center.size());
  for (std::size_t i = 0; i < row.size(); ++i) row[i] = center[i] + sigma * rng.normal();
  out.append_row(row);
}

Vec scaled(std::span<const double> v, double s) {
  Vec out(v.begin(), v.end());
  for (double& x : out) x *= s;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Toy

void ToyConfig::validate() const {
  if (!(class_sd > 0.0)) throw ConfigError("class_sd", "must be positive");
  if (!(exclusion_radius >= 0.0)) throw ConfigError("exclusion_radius", "must be non-negative");
  if (!(box_hi > box_lo)) throw ConfigError("box", "box_hi must exceed box_lo");
  for (const auto& m : class_means)
    for (double c : m)
      if (c - exclusion_radius < box_lo || c + exclusion_radius > box_hi)
        throw ConfigError("box", "box must contain every exclusion disk");
}

ToyData gen_toy(const ToyConfig& config, std::size_t count_id, std::size_t count_out, RngStream& rng) {
  config.validate();
  ToyData data;
  data.id.points = Matrix(0, 0);
  for (std::size_t i = 0; i < count_id; ++i) {
    const std::size_t k = rng.index(3);
    add_gaussian_row(data.id.points, config.class_means[k], config.class_sd, rng);
    data.id.labels.push_back(static_cast<int>(k));
  }
  if (count_id == 0) data.id.points = Matrix(0, 2);

  data.outliers = Matrix(0, 2);
  std::size_t proposals = 0, accepted = 0;
  const double r2 = config.exclusion_radius * config.exclusion_radius;
  while (accepted < count_out) {
    const double x = rng.uniform(config.box_lo, config.box_hi);
    const double y = rng.uniform(config.box_lo, config.box_hi);
    ++proposals;
    bool ok = true;
    for (const auto& m : config.class_means) {
      const double dx = x - m[0], dy = y - m[1];
      if (dx * dx + dy * dy < r2) {
        ok = false;
        break;
      }
    }
    if (ok) {
      const double row[2] = {x, y};
      data.outliers.append_row(row);
      ++accepted;
    }
    if (proposals >= 100000 && static_cast<double>(accepted) < 0.01 * static_cast<double>(proposals))
      throw RejectionStall("gen_toy: outlier acceptance below 1% (box too small for exclusion disks)");
  }
  return data;
}

// ---------------------------------------------------------------------------
// Theory GMM

double TheoryConfig::mu_norm() const { return norm(mu); }
double TheoryConfig::snr() const { return mu_norm() / sigma; }
double TheoryConfig::dim_ratio() const {
  return static_cast<double>(dim()) / static_cast<double>(n);
}

TheoryConfig TheoryConfig::axis_aligned(std::size_t d, double mu_norm, double sigma) {
  TheoryConfig c;
  c.mu.assign(d, 0.0);
  if (d > 0) c.mu[0] = mu_norm;
  c.sigma = sigma;
  return c;
}

namespace {

void check_theory(const TheoryConfig& c) {
  if (c.mu.empty() || c.mu_norm() == 0.0) throw DegenerateMu("mu must be a non-zero vector");
  if (!(c.sigma > 0.0)) throw ConfigError("sigma", "must be positive");
}

}  // namespace

TheoryPair gen_theory_pair(const TheoryConfig& config, RngStream& rng) {
  check_theory(config);
  const std::size_t d = config.dim();
  TheoryPair out{Matrix(0, d), Matrix(0, d)};
  const Vec neg_mu = scaled(config.mu, -1.0);
  for (std::size_t i = 0; i < config.n_prime; ++i) add_gaussian_row(out.in, config.mu, config.sigma, rng);
  for (std::size_t i = 0; i < config.n; ++i) add_gaussian_row(out.aux, neg_mu, config.sigma, rng);
  return out;
}

double truncated_normal(double lo, double hi, RngStream& rng) {
  if (!(lo <= hi)) throw ConfigError("truncated_normal", "empty interval");
  if (lo > 0.0 || hi < 0.0) {
    // Work on the positive side.
    const bool flip = hi < 0.0;
    const double a = flip ? -hi : lo;
    const double b = flip ? -lo : hi;
    double z;
    if (b - a < 1.0 / std::max(a, 1.0)) {
      // Narrow far-tail window: uniform proposal, acceptance exp(-(z^2 - a^2)/2)
      // is at least exp(-(b - a)(b + a)/2) >= exp(-1.5).
      do {
        z = rng.uniform(a, b);
      } while (rng.uniform() > std::exp(-0.5 * (z * z - a * a)));
    } else if (a > 0.5) {
      // Exponential proposal (Robert, 1995).
      const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
      do {
        do {
          z = a - std::log(1.0 - rng.uniform()) / alpha;
        } while (z > b);
      } while (rng.uniform() > std::exp(-0.5 * (z - alpha) * (z - alpha)));
    } else {
      do {
        z = rng.normal();
      } while (z < a || z > b);
    }
    return flip ? -z : z;
  }
  // Interval straddles zero.
  const double mass = q_function(lo) - q_function(hi);
  if (mass > 0.05) {
    double z;
    do {
      z = rng.normal();
    } while (z < lo || z > hi);
    return z;
  }
  double z;
  do {
    z = rng.uniform(lo, hi);
  } while (rng.uniform() > std::exp(-0.5 * z * z));
  return z;
}

Matrix gen_constrained_aux(const TheoryConfig& config, RngStream& rng, ConstraintMethod method) {
  check_theory(config);
  if (!(config.epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
  const std::size_t d = config.dim();
  const double s2 = config.sigma * config.sigma;
  const double limit = s2 * config.epsilon;  // |2 x^T mu| <= sigma^2 eps
  Matrix out(0, d);

  if (method == ConstraintMethod::kRejection) {
    const Vec neg_mu = scaled(config.mu, -1.0);
    std::size_t proposals = 0, accepted = 0;
    Vec x(d);
    while (accepted < config.n) {
      for (std::size_t i = 0; i < d; ++i) x[i] = neg_mu[i] + config.sigma * rng.normal();
      ++proposals;
      if (std::abs(2.0 * dot(x, config.mu)) <= limit) {
        out.append_row(x);
        ++accepted;
      }
      if (proposals >= 100000 && static_cast<double>(accepted) < 1e-4 * static_cast<double>(proposals))
        throw RejectionStall("gen_constrained_aux: acceptance below 1e-4 (epsilon too small for r0)");
    }
    return out;
  }

  // x = -mu + sigma (z_par * u + P_perp g), u = mu / |mu|. Then
  // x^T mu = |mu| (sigma z_par - |mu|), so the constraint fixes an interval
  // for the standard normal z_par and leaves the complement untouched.
  const double mnorm = config.mu_norm();
  const Vec u = scaled(config.mu, 1.0 / mnorm);
  const double half = limit / (2.0 * mnorm);  // |x^T mu| / |mu| <= half
  const double lo = std::isfinite(half) ? (mnorm - half) / config.sigma : -kInf;
  const double hi = std::isfinite(half) ? (mnorm + half) / config.sigma : kInf;
  Vec g(d), x(d);
  for (std::size_t r = 0; r < config.n; ++r) {
    for (double& v : g) v = rng.normal();
    const double along = dot(g, u);
    const double z_par = truncated_normal(lo, hi, rng);
    for (std::size_t i = 0; i < d; ++i)
      x[i] = -config.mu[i] + config.sigma * ((g[i] - along * u[i]) + z_par * u[i]);
    // Round-off can push a point a hair past the plane; pull it back.
    const double proj = dot(x, config.mu);
    if (std::abs(2.0 * proj) > limit) {
      const double target = std::copysign(0.5 * limit, proj) * (1.0 - 1e-12);
      const double shift = (target - proj) / (mnorm * mnorm);
      for (std::size_t i = 0; i < d; ++i) x[i] += shift * config.mu[i];
    }
    out.append_row(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generalized model

GeneralizedData gen_generalized(const TheoryConfig& config, RngStream& rng) {
  check_theory(config);
  const double cap = config.mu_norm() / 4.0;
  if (std::abs(config.s_range) > cap) throw BoundViolation("s_range exceeds |mu|/4");
  if (std::abs(config.g_range) > cap) throw BoundViolation("g_range exceeds |mu|/4");
  const std::size_t d = config.dim();
  Vec v = config.v.empty() ? Vec(d, 0.0) : config.v;
  if (v.size() != d) throw DimensionMismatch("v must have the same dimension as mu");
  if (norm(v) > cap) throw BoundViolation("|v| exceeds |mu|/4");

  GeneralizedData out{Matrix(0, d), Matrix(0, d), Matrix(0, d)};
  for (std::size_t i = 0; i < config.n_prime; ++i) {
    const double s = config.s_range > 0.0 ? rng.uniform(-config.s_range, config.s_range) : 0.0;
    add_gaussian_row(out.in, scaled(config.mu, 1.0 + s), config.sigma, rng);
  }
  for (std::size_t i = 0; i < config.n; ++i) {
    const double g = config.g_range > 0.0 ? rng.uniform(-config.g_range, config.g_range) : 0.0;
    add_gaussian_row(out.aux, scaled(config.mu, -1.0 + g), config.sigma, rng);
  }
  Vec center = scaled(config.mu, -1.0);
  for (std::size_t i = 0; i < d; ++i) center[i] += v[i];
  for (std::size_t i = 0; i < config.n_test; ++i) add_gaussian_row(out.test_ood, center, config.sigma, rng);
  return out;
}

void write_points_csv(const std::filesystem::path& path, const Matrix& points,
                      const std::vector<int>* labels) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.precision(17);
  for (std::size_t c = 0; c < points.cols(); ++c) os << 'x' << c << ',';
  os << "label\n";
  for (std::size_t r = 0; r < points.rows(); ++r) {
    for (double v : points.row(r)) os << v << ',';
    if (labels)
      os << (*labels)[r] << '\n';
    else
      os << "OUTLIER\n";
  }
}

}  // namespace poemlab
