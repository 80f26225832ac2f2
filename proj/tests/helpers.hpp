#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "poemlab/linalg.hpp"
#include "poemlab/rng.hpp"

namespace testutil {

inline poemlab::Matrix random_matrix(std::size_t r, std::size_t c, poemlab::RngStream& rng) {
  poemlab::Matrix m(r, c);
  for (double& v : m.flat()) v = rng.normal();
  return m;
}

// B B^T + I.
inline poemlab::Matrix random_spd(std::size_t n, poemlab::RngStream& rng) {
  const poemlab::Matrix b = random_matrix(n, n, rng);
  return b * b.transpose() + poemlab::Matrix::identity(n);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("poemlab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil

#include "poemlab/model.hpp"

namespace testutil {

// Random model and paired batch for gradient checks. Labels are 0-based.
struct GradCase {
  poemlab::EnergyModel model;
  poemlab::Batch batch;
};

inline GradCase random_grad_case(poemlab::RngStream& rng, std::vector<std::size_t> widths,
                                 std::size_t classes, std::size_t batch) {
  poemlab::EnergyMargins margins;
  margins.beta = 0.1 + rng.uniform();
  GradCase g{poemlab::EnergyModel::initialize(widths, classes, margins, rng), {}};
  // Non-zero biases so no unit sits exactly at the ReLU kink.
  for (auto& layer : g.model.params().encoder)
    for (double& b : layer.bias) b = 0.1 * rng.normal();
  for (double& b : g.model.params().head.bias) b = 0.1 * rng.normal();
  g.batch.id_inputs = random_matrix(batch, widths.front(), rng);
  g.batch.outlier_inputs = random_matrix(batch, widths.front(), rng);
  for (double& v : g.batch.outlier_inputs.flat()) v *= 3.0;
  for (std::size_t i = 0; i < batch; ++i) g.batch.id_labels.push_back(static_cast<int>(rng.index(classes)));
  // Margins near the observed energies keep both hinges active on some rows.
  double e_sum = 0.0;
  for (std::size_t i = 0; i < batch; ++i)
    e_sum += poemlab::energy(g.model.forward(g.batch.id_inputs.row(i)).logits);
  const double e_mean = e_sum / static_cast<double>(batch);
  g.model.margins().m_in = e_mean - 0.5;
  g.model.margins().m_out = e_mean + 0.5;
  return g;
}

// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-4),
// central differences with step h. A coordinate whose difference quotient
// straddles a ReLU kink is retried with h / 100.
inline double gradient_max_rel_error(const poemlab::EnergyModel& model, const poemlab::Batch& batch,
                                     double h = 1e-5) {
  using namespace poemlab;
  const Vec analytic = loss_gradient(model, batch).flatten();
  EnergyModel probe = model;
  const Vec base = model.params().flatten();
  Vec p = base;
  auto numeric = [&](std::size_t i, double step) {
    p[i] = base[i] + step;
    probe.params().assign(p);
    const double up = total_loss(probe, batch);
    p[i] = base[i] - step;
    probe.params().assign(p);
    const double down = total_loss(probe, batch);
    p[i] = base[i];
    return (up - down) / (2.0 * step);
  };
  auto rel = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-4}); };
  double worst = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    double e = rel(analytic[i], numeric(i, h));
    if (e >= 1e-4) e = std::min(e, rel(analytic[i], numeric(i, h / 100.0)));
    worst = std::max(worst, e);
  }
  probe.params().assign(base);
  return worst;
}

}  // namespace testutil
