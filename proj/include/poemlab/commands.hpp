#pragma once

// The four command-line workflows as library calls. Each writes its
// artifacts into an output directory.

#include <filesystem>
#include <string>
#include <vector>

#include "poemlab/config.hpp"
#include "poemlab/runner.hpp"
#include "poemlab/theory.hpp"

namespace poemlab {

namespace fs = std::filesystem;

// Short description of the mined-count / ID-set-size ratio, stored in every
// run header.
std::string ratio_note(const RunConfig& config);

// Header JSON: schema_version, sampler, dataset, seed, input_dim, note and
// the full resolved config.
std::string run_header_json(const RunConfig& config, std::size_t input_dim);

// train: header.json, config.txt, log.jsonl, mined.jsonl, metrics.json,
// metrics.csv, model.ckpt, queue.json, id_train.csv and snapshots/.
RunResult train_to_dir(const RunConfig& config, const fs::path& out);

struct CompareCell {
  SamplerKind sampler = SamplerKind::kThompson;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport metrics;
  std::vector<double> fpr_curve;  // per epoch
};

struct CompareAggregate {
  SamplerKind sampler = SamplerKind::kThompson;
  std::size_t runs = 0;
  std::size_t failed = 0;
  MetricsReport mean;
  MetricsReport sd;  // sample standard deviation, 0 for a single run
};

struct CompareSummary {
  std::vector<CompareCell> cells;  // sampler-major, seeds in manifest order
  std::vector<CompareAggregate> aggregates;
};

// Runs samplers x seeds with up to `jobs` concurrent runs, each in its own
// subdirectory, then writes compare.csv and curves_<sampler>.csv.
CompareSummary compare_to_dir(const Manifest& manifest, const fs::path& out, std::size_t jobs);
std::vector<CompareAggregate> aggregate(const std::vector<CompareCell>& cells,
                                        const std::vector<SamplerKind>& samplers);

// theorem: theorem_report.json and theorem_trials.csv.
TheoremReport theorem_to_dir(const TheoremSetup& setup, const fs::path& out);

enum class PlotKind { kBoundary, kCurves };
PlotKind parse_plot_kind(const std::string& name);

// Reads a train or compare directory and writes SVGs into `out` (the run
// directory when empty). Returns the written paths.
std::vector<fs::path> plot_dir(const fs::path& run_dir, PlotKind kind, const fs::path& out = {});

}  // namespace poemlab
