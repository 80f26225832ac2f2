// poemlab: train, compare, theorem and plot subcommands.
//
// Exit status: 0 success, 1 runtime failure, 2 configuration error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "poemlab/commands.hpp"
#include "poemlab/errors.hpp"

using namespace poemlab;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kConfigFailure = 2;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> sampler;
  std::optional<std::size_t> epochs;
};

// Seed precedence: --seed, then the config file, then POEMLAB_SEED.
KeyValues load_with_overrides(const std::string& path, const Overrides& o) {
  KeyValues kv = load_key_values(path);
  if (o.seed) {
    kv["seed"] = std::to_string(*o.seed);
  } else if (!kv.count("seed")) {
    if (const char* env = std::getenv("POEMLAB_SEED")) {
      parse_u64("POEMLAB_SEED", env);
      kv["seed"] = env;
    }
  }
  if (o.sampler) kv["sampler"] = *o.sampler;
  if (o.epochs) kv["epochs"] = std::to_string(*o.epochs);
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Posterior-sampling outlier mining lab"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", run_dir, kind;
  Overrides ov;
  std::size_t jobs = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file")->required();
    sub->add_option("--seed", ov.seed, "seed override (falls back to POEMLAB_SEED)");
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* train = app.add_subcommand("train", "run one training job");
  add_common(train);
  train->add_option("--sampler", ov.sampler, "thompson | greedy_mean | random");
  train->add_option("--epochs", ov.epochs, "epoch count override");

  auto* compare = app.add_subcommand("compare", "sweep samplers x seeds");
  add_common(compare);
  compare->get_option("--seed")->description("not accepted; seeds come from the config 'seeds' key");
  compare->add_option("--epochs", ov.epochs, "epoch count override");
  compare->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

  auto* theorem = app.add_subcommand("theorem", "Monte-Carlo check of the margin lower bound");
  add_common(theorem);

  auto* plot = app.add_subcommand("plot", "emit SVG plots from a run directory");
  plot->add_option("run_dir", run_dir, "train or compare output directory")->required();
  plot->add_option("--kind", kind, "boundary | curves")->required();
  plot->add_option("--out", out_dir, "output directory (default: run_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigFailure;
  }

  try {
    if (train->parsed()) {
      const RunConfig cfg = run_config_from(load_with_overrides(config_path, ov));
      const RunResult r = train_to_dir(cfg, out_dir);
      if (!r.logs.empty()) {
        const auto& m = r.logs.back().metrics;
        std::cout << "epochs " << r.logs.size() << "  fpr95 " << m.fpr95 << "  auroc " << m.auroc << "  id_acc "
                  << m.id_acc << "\n";
      }
      std::cout << "wrote " << out_dir << "\n";
    } else if (compare->parsed()) {
      if (ov.seed) throw ConfigError("seed", "compare takes its seeds from the manifest 'seeds' key");
      Manifest m = manifest_from(load_with_overrides(config_path, ov));
      const CompareSummary s = compare_to_dir(m, out_dir, jobs);
      for (const auto& a : s.aggregates)
        std::cout << to_string(a.sampler) << ": fpr95 " << a.mean.fpr95 << " +- " << a.sd.fpr95 << "  ("
                  << a.runs - a.failed << "/" << a.runs << " ok)\n";
      std::cout << "wrote " << out_dir << "/compare.csv\n";
      for (const auto& c : s.cells)
        if (!c.ok) return kRuntimeFailure;
    } else if (theorem->parsed()) {
      const TheoremReport r = theorem_to_dir(theorem_setup_from(load_with_overrides(config_path, ov)), out_dir);
      std::cout << "trials " << r.trials << "  violation_rate " << r.violation_rate << "\n";
    } else if (plot->parsed()) {
      const std::string dest = plot->count("--out") ? out_dir : std::string();
      for (const auto& p : plot_dir(run_dir, parse_plot_kind(kind), dest)) std::cout << "wrote " << p.string() << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return 0;
}
