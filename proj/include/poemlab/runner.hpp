#pragma once

// The outlier-mining training loop: each epoch resamples a pool from the
// auxiliary set, mines N outliers, trains one epoch on ID + mined data,
// pushes fresh features into the queue and refreshes the posterior.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poemlab/blr.hpp"
#include "poemlab/metrics.hpp"
#include "poemlab/mining.hpp"
#include "poemlab/model.hpp"
#include "poemlab/synthdata.hpp"

namespace poemlab {

enum class DatasetKind { kToy, kTheory, kGeneralized };

std::string to_string(DatasetKind kind);
DatasetKind parse_dataset(std::string_view name);

struct RunConfig {
  DatasetKind dataset = DatasetKind::kToy;
  SamplerKind sampler = SamplerKind::kThompson;
  std::size_t epochs = 30;
  std::size_t pool_size = 5000;    // S
  std::size_t mined_count = 500;   // N
  std::size_t batch_size = 64;     // B, for both ID and outlier streams
  std::size_t queue_capacity = 0;  // M; 0 means 4 epochs of enqueues (8N)
  std::size_t id_train = 1500;
  std::size_t aux_size = 20000;
  std::size_t test_id = 1500;
  std::size_t test_ood = 1500;
  std::vector<std::size_t> hidden{32, 32};
  double learning_rate = 0.003;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  EnergyMargins margins;
  double prior_scale = 1.0;  // Sigma = prior_scale * I
  double noise_var = 1.0;    // sigma^2 of the target-logit noise
  std::uint64_t seed = 1;
  // Mining and posterior updates stop after this many epochs; unset = never.
  std::optional<std::size_t> stop_epoch;
  // Epochs (1-based) whose model and mined set are kept for plotting;
  // empty = {1, 4, epochs}.
  std::vector<std::size_t> snapshot_epochs;

  ToyConfig toy;
  // theory / generalized datasets: mu = mu_norm * e_0 in R^dim.
  std::size_t theory_dim = 2;
  double mu_norm = 2.0;
  double theory_sigma = 1.0;
  double s_range = 0.0;
  double g_range = 0.0;
  double v_norm = 0.0;  // test-OOD shift along e_1

  std::size_t effective_queue_capacity() const {
    return queue_capacity == 0 ? 8 * mined_count : queue_capacity;
  }
  std::vector<std::size_t> effective_snapshots() const;
  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct Datasets {
  LabeledSet id_train;
  Matrix aux;
  LabeledSet id_test;
  Matrix ood_test;
  std::size_t num_classes = 0;
};

Datasets make_datasets(const RunConfig& config);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mined_score_mean = 0.0;
  double mined_score_min = 0.0;
  double mined_score_max = 0.0;
  double train_loss = 0.0;
  double mean_id_energy = 0.0;
  double mean_outlier_energy = 0.0;
  std::size_t queue_size = 0;
  MetricsReport metrics;

  std::string to_json() const;
  static EpochLog from_json(const std::string& line);
};

struct Snapshot {
  std::size_t epoch = 0;
  EnergyModel model;
  Matrix mined_points;
  double threshold = 0.0;
};

struct RunResult {
  EnergyModel model;
  std::vector<EpochLog> logs;
  std::vector<MinedSet> mined;  // pool-relative selections per epoch
  std::vector<Snapshot> snapshots;
  FeatureQueue queue{1};
  PosteriorState posterior;
  Datasets data;
};

RunResult run(const RunConfig& config);

// run() with mining frozen and posterior updates disabled after stop_epoch.
RunResult early_stop_variant(const RunConfig& config, std::size_t stop_epoch);

// Evaluates detection (held-out ID vs test OOD) and ID accuracy.
MetricsReport evaluate_model(const EnergyModel& model, const LabeledSet& id_test,
                             const Matrix& ood_test);

}  // namespace poemlab
