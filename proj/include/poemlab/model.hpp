#pragma once

// Desk-scale two-branch network: ReLU encoder phi, K-way linear head, the
// energy score and the energy-regularized training objective with a
// hand-written backward pass and Nesterov SGD.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "poemlab/linalg.hpp"
#include "poemlab/rng.hpp"

namespace poemlab {

struct DenseLayer {
  Matrix weight;  // out x in
  Vec bias;       // out

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }
};

// All trainable tensors. Also used as the gradient and velocity containers,
// which therefore mirror the parameter shapes by construction.
struct Parameters {
  std::vector<DenseLayer> encoder;  // ReLU after every encoder layer
  DenseLayer head;                  // K x m; logits = head.weight * phi + head.bias

  std::size_t count() const;
  Vec flatten() const;
  void assign(std::span<const double> flat);
  Parameters zeros_like() const;
  bool all_finite() const;
  // Per-tensor shapes in flatten() order: (rows, cols), bias as (n, 1).
  std::vector<std::pair<std::size_t, std::size_t>> shapes() const;
};

// ID energies are pushed below m_in, outlier energies above m_out.
struct EnergyMargins {
  double m_in = -25.0;
  double m_out = -7.0;
  double beta = 0.1;
};

class EnergyModel {
 public:
  EnergyModel() = default;
  EnergyModel(Parameters params, EnergyMargins margins);

  // He-scaled Gaussian weights N(0, 2 / fan_in), zero biases.
  // widths = {d, h1, ..., m}; an empty encoder is allowed (widths = {d}).
  static EnergyModel initialize(std::span<const std::size_t> widths, std::size_t num_classes,
                                EnergyMargins margins, RngStream& rng);

  std::size_t input_dim() const;
  std::size_t feature_dim() const { return params_.head.in_dim(); }
  std::size_t num_classes() const { return params_.head.out_dim(); }

  const Parameters& params() const { return params_; }
  Parameters& params() { return params_; }
  const EnergyMargins& margins() const { return margins_; }
  EnergyMargins& margins() { return margins_; }

  struct Output {
    Vec phi;
    Vec logits;
  };
  Output forward(std::span<const double> x) const;

  // Encoder features with a constant 1 appended (input to the Bayesian head).
  Vec bayes_features(std::span<const double> x) const;

 private:
  Parameters params_;
  EnergyMargins margins_;
};

// -logsumexp(logits).
double energy(std::span<const double> logits);

// Index of the largest logit, lowest index on ties.
std::size_t argmax(std::span<const double> logits);

// mean_id (max(0, E - m_in))^2 + mean_out (max(0, m_out - E))^2; an empty
// list contributes 0.
double reg_loss(std::span<const double> id_energies, std::span<const double> out_energies,
                double m_in, double m_out);

struct Batch {
  Matrix id_inputs;
  std::vector<int> id_labels;  // 0-based class indices
  Matrix outlier_inputs;
};

// Mean ID cross-entropy + beta * reg_loss.
double total_loss(const EnergyModel& model, const Batch& batch);

// Analytic gradient of total_loss (no weight decay).
Parameters loss_gradient(const EnergyModel& model, const Batch& batch);

// d logits / d x, K x d.
Matrix input_jacobian(const EnergyModel& model, std::span<const double> x);

struct OptimState {
  Parameters velocity;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  bool nesterov = true;

  static OptimState for_model(const EnergyModel& model, double learning_rate,
                              double momentum = 0.9, double weight_decay = 1e-4);
};

// One optimizer step on total_loss. Weight decay is added to weight
// gradients only (biases are not decayed). Returns the pre-step loss.
// Throws NonFiniteGradient and leaves the model untouched on NaN/Inf.
double backward_and_step(EnergyModel& model, OptimState& optim, const Batch& batch);

// -E(x); higher means more in-distribution.
double ood_score(const EnergyModel& model, std::span<const double> x);

// Checkpoint layout: 8-byte magic "POEMCKPT", little-endian uint64 header
// length, UTF-8 JSON header, then every parameter as little-endian float64
// in Parameters::flatten() order.
void save_checkpoint(const std::filesystem::path& path, const EnergyModel& model,
                     const std::string& extra_json = "{}");
EnergyModel load_checkpoint(const std::filesystem::path& path);

}  // namespace poemlab
