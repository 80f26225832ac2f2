#include "poemlab/runner.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "poemlab/errors.hpp"

namespace poemlab {

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kToy:
      return "toy";
    case DatasetKind::kTheory:
      return "theory";
    case DatasetKind::kGeneralized:
      return "generalized";
  }
  return "unknown";
}

DatasetKind parse_dataset(std::string_view name) {
  if (name == "toy") return DatasetKind::kToy;
  if (name == "theory") return DatasetKind::kTheory;
  if (name == "generalized") return DatasetKind::kGeneralized;
  throw ConfigError("dataset", "unknown dataset '" + std::string(name) +
                                   "' (expected toy, theory or generalized)");
}

std::vector<std::size_t> RunConfig::effective_snapshots() const {
  std::vector<std::size_t> out = snapshot_epochs;
  if (out.empty()) out = {1, 4, epochs};
  std::erase_if(out, [&](std::size_t e) { return e == 0 || e > epochs; });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void RunConfig::validate() const {
  if (pool_size == 0) throw ConfigError("pool_size", "must be at least 1");
  if (mined_count == 0) throw ConfigError("mined_count", "must be at least 1");
  if (mined_count > pool_size) throw ConfigError("mined_count", "must not exceed pool_size");
  if (pool_size > aux_size) throw ConfigError("pool_size", "must not exceed aux_size");
  if (effective_queue_capacity() < 2 * mined_count)
    throw ConfigError("queue_capacity", "must hold at least one epoch of enqueues (2 * mined_count)");
  if (batch_size == 0) throw ConfigError("batch_size", "must be at least 1");
  if (id_train == 0) throw ConfigError("id_train", "must be at least 1");
  if (test_id == 0) throw ConfigError("test_id", "must be at least 1");
  if (test_ood == 0) throw ConfigError("test_ood", "must be at least 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("lr", "must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum", "must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be non-negative");
  if (!(margins.beta >= 0.0)) throw ConfigError("beta", "must be non-negative");
  if (!(prior_scale > 0.0)) throw ConfigError("prior_scale", "must be positive");
  if (!(noise_var > 0.0)) throw ConfigError("noise_var", "must be positive");
  if (stop_epoch && *stop_epoch > epochs) throw ConfigError("stop_epoch", "must not exceed epochs");
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("hidden", "layer widths must be positive");
  if (dataset == DatasetKind::kToy) {
    toy.validate();
  } else {
    if (theory_dim < 2) throw ConfigError("theory_dim", "must be at least 2");
    if (!(mu_norm > 0.0)) throw ConfigError("mu_norm", "must be positive");
    if (!(theory_sigma > 0.0)) throw ConfigError("theory_sigma", "must be positive");
  }
}

namespace {

enum Stream : std::uint64_t {
  kData = 0,
  kInit = 1,
  kPool = 2,
  kThompson = 3,
  kRandom = 4,
  kTrain = 5,
  kQueue = 6,
};

Matrix take_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(0, m.cols());
  for (std::size_t i : idx) out.append_row(m.row(i));
  return out;
}

// Points with the hyperplane-orthogonal coordinate deciding the class.
LabeledSet label_by_second_axis(Matrix points) {
  LabeledSet s;
  s.labels.reserve(points.rows());
  for (std::size_t r = 0; r < points.rows(); ++r) s.labels.push_back(points(r, 1) >= 0.0 ? 1 : 0);
  s.points = std::move(points);
  return s;
}

}  // namespace

Datasets make_datasets(const RunConfig& config) {
  RngStream rng = RngStream::derive(config.seed, kData);
  Datasets d;
  if (config.dataset == DatasetKind::kToy) {
    ToyData train = gen_toy(config.toy, config.id_train, config.aux_size, rng);
    ToyData test = gen_toy(config.toy, config.test_id, config.test_ood, rng);
    d.id_train = std::move(train.id);
    d.aux = std::move(train.outliers);
    d.id_test = std::move(test.id);
    d.ood_test = std::move(test.outliers);
    d.num_classes = 3;
    return d;
  }
  TheoryConfig tc = TheoryConfig::axis_aligned(config.theory_dim, config.mu_norm, config.theory_sigma);
  tc.s_range = config.s_range;
  tc.g_range = config.g_range;
  tc.v.assign(config.theory_dim, 0.0);
  tc.v[1] = config.v_norm;
  d.num_classes = 2;
  if (config.dataset == DatasetKind::kTheory) {
    tc.n_prime = config.id_train;
    tc.n = config.aux_size;
    TheoryPair train = gen_theory_pair(tc, rng);
    tc.n_prime = config.test_id;
    tc.n = config.test_ood;
    TheoryPair test = gen_theory_pair(tc, rng);
    d.id_train = label_by_second_axis(std::move(train.in));
    d.aux = std::move(train.aux);
    d.id_test = label_by_second_axis(std::move(test.in));
    d.ood_test = std::move(test.aux);
    return d;
  }
  tc.n_prime = config.id_train;
  tc.n = config.aux_size;
  tc.n_test = 0;
  GeneralizedData train = gen_generalized(tc, rng);
  tc.n_prime = config.test_id;
  tc.n = 0;
  tc.n_test = config.test_ood;
  GeneralizedData test = gen_generalized(tc, rng);
  d.id_train = label_by_second_axis(std::move(train.in));
  d.aux = std::move(train.aux);
  d.id_test = label_by_second_axis(std::move(test.in));
  d.ood_test = std::move(test.test_ood);
  return d;
}

MetricsReport evaluate_model(const EnergyModel& model, const LabeledSet& id_test,
                             const Matrix& ood_test) {
  ScoreSet scores;
  std::vector<int> predictions;
  for (std::size_t i = 0; i < id_test.size(); ++i) {
    const Vec logits = model.forward(id_test.points.row(i)).logits;
    scores.id_scores.push_back(-energy(logits));
    predictions.push_back(static_cast<int>(argmax(logits)));
  }
  for (std::size_t i = 0; i < ood_test.rows(); ++i) scores.ood_scores.push_back(ood_score(model, ood_test.row(i)));
  return evaluate(scores, id_accuracy(predictions, id_test.labels));
}

namespace {

RunResult run_impl(const RunConfig& config, std::size_t stop_epoch) {
  config.validate();
  RunResult result;
  result.data = make_datasets(config);
  const Datasets& data = result.data;

  RngStream init_rng = RngStream::derive(config.seed, kInit);
  RngStream pool_rng = RngStream::derive(config.seed, kPool);
  RngStream thompson_rng = RngStream::derive(config.seed, kThompson);
  RngStream random_rng = RngStream::derive(config.seed, kRandom);
  RngStream train_rng = RngStream::derive(config.seed, kTrain);
  RngStream queue_rng = RngStream::derive(config.seed, kQueue);

  std::vector<std::size_t> widths{data.id_train.points.cols()};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  EnergyModel model = EnergyModel::initialize(widths, data.num_classes, config.margins, init_rng);
  OptimState optim = OptimState::for_model(model, config.learning_rate, config.momentum, config.weight_decay);

  const std::size_t feature_dim = model.feature_dim() + 1;  // + bias feature
  const Matrix prior = isotropic_prior(feature_dim, config.prior_scale);
  const TargetScheme scheme{3.0, -3.0, std::sqrt(config.noise_var)};
  FeatureQueue queue(config.effective_queue_capacity(), feature_dim);
  PosteriorState posterior = posterior_update(queue, prior, config.noise_var);

  const auto snapshots = config.effective_snapshots();
  MinedSet mined;
  Matrix mined_points;
  const std::size_t n_id = data.id_train.size();
  const std::size_t batch = config.batch_size;

  for (std::size_t t = 0; t < config.epochs; ++t) {
    const bool mining_active = t < stop_epoch || t == 0;
    const bool posterior_active = t < stop_epoch;

    if (mining_active) {
      const auto pool_idx = pool_rng.subset(data.aux.rows(), config.pool_size);
      const Matrix pool = take_rows(data.aux, pool_idx);
      const Matrix features =
          encode_rows(pool, [&](std::span<const double> x) { return model.bayes_features(x); });
      // Drawn for every sampler so shared streams stay aligned across samplers.
      const Vec w = sample_weights(posterior, thompson_rng);
      mined = mine_with_features(features, config.sampler, posterior, w, config.mined_count, random_rng);
      mined_points = take_rows(pool, mined.indices());
    }

    // One epoch: shuffled ID batches, each paired with B mined outliers
    // taken cyclically from a shuffled order of the mined set.
    std::vector<std::size_t> id_order(n_id);
    for (std::size_t i = 0; i < n_id; ++i) id_order[i] = i;
    train_rng.shuffle(id_order);
    std::vector<std::size_t> out_order(mined_points.rows());
    for (std::size_t i = 0; i < out_order.size(); ++i) out_order[i] = i;
    train_rng.shuffle(out_order);
    std::size_t out_cursor = 0;
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < n_id; start += batch) {
      Batch b;
      b.id_inputs = Matrix(0, data.id_train.points.cols());
      b.outlier_inputs = Matrix(0, data.id_train.points.cols());
      const std::size_t end = std::min(n_id, start + batch);
      for (std::size_t k = start; k < end; ++k) {
        b.id_inputs.append_row(data.id_train.points.row(id_order[k]));
        b.id_labels.push_back(data.id_train.labels[id_order[k]]);
      }
      for (std::size_t k = 0; k < batch && !out_order.empty(); ++k) {
        b.outlier_inputs.append_row(mined_points.row(out_order[out_cursor]));
        out_cursor = (out_cursor + 1) % out_order.size();
      }
      loss_sum += backward_and_step(model, optim, b);
      ++steps;
    }

    if (posterior_active) {
      for (std::size_t i = 0; i < mined_points.rows(); ++i)
        enqueue(queue, model.bayes_features(mined_points.row(i)), true, scheme, queue_rng);
      for (std::size_t idx : queue_rng.subset(n_id, std::min(config.mined_count, n_id)))
        enqueue(queue, model.bayes_features(data.id_train.points.row(idx)), false, scheme, queue_rng);
      posterior = posterior_update(queue, prior, config.noise_var);
    }

    EpochLog log;
    log.epoch = t + 1;
    log.mined_score_mean = mined.mean_score();
    log.mined_score_min = mined.min_score();
    log.mined_score_max = mined.max_score();
    log.train_loss = steps ? loss_sum / static_cast<double>(steps) : 0.0;
    double e_id = 0.0, e_out = 0.0;
    for (std::size_t i = 0; i < n_id; ++i) e_id += energy(model.forward(data.id_train.points.row(i)).logits);
    for (std::size_t i = 0; i < mined_points.rows(); ++i)
      e_out += energy(model.forward(mined_points.row(i)).logits);
    log.mean_id_energy = e_id / static_cast<double>(n_id);
    log.mean_outlier_energy = mined_points.rows() ? e_out / static_cast<double>(mined_points.rows()) : 0.0;
    log.queue_size = queue.size();
    log.metrics = evaluate_model(model, data.id_test, data.ood_test);
    result.logs.push_back(log);
    result.mined.push_back(mined);

    if (std::binary_search(snapshots.begin(), snapshots.end(), t + 1))
      result.snapshots.push_back(Snapshot{t + 1, model, mined_points, log.metrics.threshold});
  }

  result.model = std::move(model);
  result.queue = std::move(queue);
  result.posterior = std::move(posterior);
  return result;
}

}  // namespace

RunResult run(const RunConfig& config) {
  return run_impl(config, config.stop_epoch.value_or(config.epochs));
}

RunResult early_stop_variant(const RunConfig& config, std::size_t stop_epoch) {
  if (stop_epoch > config.epochs) throw ConfigError("stop_epoch", "must not exceed epochs");
  return run_impl(config, stop_epoch);
}

std::string EpochLog::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["mined_score_mean"] = mined_score_mean;
  j["mined_score_min"] = mined_score_min;
  j["mined_score_max"] = mined_score_max;
  j["train_loss"] = train_loss;
  j["mean_id_energy"] = mean_id_energy;
  j["mean_outlier_energy"] = mean_outlier_energy;
  j["queue_size"] = queue_size;
  j["metrics"] = nlohmann::ordered_json::parse(metrics.to_json());
  return j.dump();
}

EpochLog EpochLog::from_json(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  EpochLog log;
  log.epoch = j.at("epoch").get<std::size_t>();
  log.mined_score_mean = j.at("mined_score_mean").get<double>();
  log.mined_score_min = j.at("mined_score_min").get<double>();
  log.mined_score_max = j.at("mined_score_max").get<double>();
  log.train_loss = j.at("train_loss").get<double>();
  log.mean_id_energy = j.at("mean_id_energy").get<double>();
  log.mean_outlier_energy = j.at("mean_outlier_energy").get<double>();
  log.queue_size = j.at("queue_size").get<std::size_t>();
  log.metrics = MetricsReport::from_json(j.at("metrics").dump());
  return log;
}

}  // namespace poemlab
