#include "poemlab/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "poemlab/errors.hpp"
#include "poemlab/io.hpp"
#include "poemlab/plot.hpp"

namespace poemlab {

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("out", "cannot create output directory " + dir.string());
}

std::string metrics_csv(const MetricsReport& m) {
  std::ostringstream os;
  write_csv_row(os, {"fpr95", "auroc", "aupr", "id_acc", "gamma"});
  write_csv_row(os, {format_number(m.fpr95), format_number(m.auroc), format_number(m.aupr),
                     format_number(m.id_acc), format_number(m.threshold)});
  return os.str();
}

}  // namespace

std::string ratio_note(const RunConfig& config) {
  const double ratio = static_cast<double>(config.mined_count) / static_cast<double>(config.id_train);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "mined outliers per epoch N=%zu vs ID training set %zu (ratio %.3g); "
                "N is decoupled from the ID set size to keep runs short",
                config.mined_count, config.id_train, ratio);
  return buf;
}

std::string run_header_json(const RunConfig& config, std::size_t input_dim) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["sampler"] = to_string(config.sampler);
  j["dataset"] = to_string(config.dataset);
  j["seed"] = config.seed;
  j["epochs"] = config.epochs;
  j["input_dim"] = input_dim;
  j["note"] = ratio_note(config);
  nlohmann::ordered_json cfg;
  for (const auto& [k, v] : to_key_values(config)) cfg[k] = v;
  j["config"] = cfg;
  return j.dump(2) + "\n";
}

RunResult train_to_dir(const RunConfig& config, const fs::path& out) {
  config.validate();
  ensure_dir(out);
  RunResult r = run(config);
  const std::size_t d = r.data.id_train.points.cols();
  write_text(out / "header.json", run_header_json(config, d));
  write_text(out / "config.txt", format_key_values(to_key_values(config)));
  write_epoch_logs(out / "log.jsonl", r.logs);
  write_mined_jsonl(out / "mined.jsonl", r.mined);
  const MetricsReport final_metrics = r.logs.empty()
                                          ? evaluate_model(r.model, r.data.id_test, r.data.ood_test)
                                          : r.logs.back().metrics;
  write_text(out / "metrics.json", final_metrics.to_json() + "\n");
  write_text(out / "metrics.csv", metrics_csv(final_metrics));
  save_checkpoint(out / "model.ckpt", r.model);
  write_text(out / "queue.json", queue_to_json(r.queue) + "\n");
  write_matrix_csv(out / "id_train.csv", r.data.id_train.points, &r.data.id_train.labels);

  const fs::path snap_dir = out / "snapshots";
  ensure_dir(snap_dir);
  auto index = nlohmann::ordered_json::array();
  for (const auto& s : r.snapshots) {
    const std::string stem = "epoch_" + std::to_string(s.epoch);
    nlohmann::ordered_json extra{{"epoch", s.epoch}, {"threshold", s.threshold}};
    save_checkpoint(snap_dir / (stem + ".ckpt"), s.model, extra.dump());
    write_matrix_csv(snap_dir / (stem + "_mined.csv"), s.mined_points);
    index.push_back({{"epoch", s.epoch},
                     {"threshold", s.threshold},
                     {"checkpoint", stem + ".ckpt"},
                     {"mined", stem + "_mined.csv"}});
  }
  nlohmann::ordered_json idx{{"schema_version", 1}, {"snapshots", index}};
  write_text(snap_dir / "index.json", idx.dump(2) + "\n");
  return r;
}

std::vector<CompareAggregate> aggregate(const std::vector<CompareCell>& cells,
                                        const std::vector<SamplerKind>& samplers) {
  std::vector<CompareAggregate> out;
  for (SamplerKind s : samplers) {
    CompareAggregate a;
    a.sampler = s;
    std::vector<const MetricsReport*> ok;
    for (const auto& c : cells) {
      if (c.sampler != s) continue;
      ++a.runs;
      if (c.ok)
        ok.push_back(&c.metrics);
      else
        ++a.failed;
    }
    const double n = static_cast<double>(ok.size());
    auto stat = [&](double MetricsReport::*field, double& mean, double& sd) {
      mean = 0.0;
      sd = 0.0;
      if (ok.empty()) return;
      for (const auto* m : ok) mean += m->*field;
      mean /= n;
      if (ok.size() < 2) return;
      for (const auto* m : ok) sd += (m->*field - mean) * (m->*field - mean);
      sd = std::sqrt(sd / (n - 1.0));
    };
    stat(&MetricsReport::fpr95, a.mean.fpr95, a.sd.fpr95);
    stat(&MetricsReport::auroc, a.mean.auroc, a.sd.auroc);
    stat(&MetricsReport::aupr, a.mean.aupr, a.sd.aupr);
    stat(&MetricsReport::id_acc, a.mean.id_acc, a.sd.id_acc);
    stat(&MetricsReport::threshold, a.mean.threshold, a.sd.threshold);
    out.push_back(a);
  }
  return out;
}

CompareSummary compare_to_dir(const Manifest& manifest, const fs::path& out, std::size_t jobs) {
  manifest.base.validate();
  ensure_dir(out);
  CompareSummary summary;
  for (SamplerKind s : manifest.samplers)
    for (std::uint64_t seed : manifest.seeds) {
      CompareCell c;
      c.sampler = s;
      c.seed = seed;
      summary.cells.push_back(c);
    }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < summary.cells.size(); i = next++) {
      CompareCell& cell = summary.cells[i];
      RunConfig cfg = manifest.base;
      cfg.sampler = cell.sampler;
      cfg.seed = cell.seed;
      try {
        const fs::path dir = out / (to_string(cell.sampler) + "_seed" + std::to_string(cell.seed));
        RunResult r = train_to_dir(cfg, dir);
        cell.metrics = r.logs.empty() ? evaluate_model(r.model, r.data.id_test, r.data.ood_test)
                                      : r.logs.back().metrics;
        for (const auto& log : r.logs) cell.fpr_curve.push_back(log.metrics.fpr95);
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, summary.cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  summary.aggregates = aggregate(summary.cells, manifest.samplers);

  std::ofstream os(out / "compare.csv", std::ios::binary);
  if (!os) throw FormatError("cannot write " + (out / "compare.csv").string());
  write_csv_row(os, {"row", "sampler", "seed", "status", "fpr95", "auroc", "aupr", "id_acc", "fpr95_sd",
                     "auroc_sd", "aupr_sd", "id_acc_sd"});
  for (const auto& c : summary.cells) {
    if (c.ok)
      write_csv_row(os, {"run", to_string(c.sampler), std::to_string(c.seed), "ok", format_number(c.metrics.fpr95),
                         format_number(c.metrics.auroc), format_number(c.metrics.aupr),
                         format_number(c.metrics.id_acc), "", "", "", ""});
    else
      write_csv_row(os, {"run", to_string(c.sampler), std::to_string(c.seed), "failed: " + c.error, "NA", "NA",
                         "NA", "NA", "", "", "", ""});
  }
  for (const auto& a : summary.aggregates) {
    const std::size_t good = a.runs - a.failed;
    const std::string status = a.failed == 0 ? "ok"
                               : good == 0   ? "failed"
                                             : "partial: " + std::to_string(a.failed) + " failed";
    if (good == 0) {
      write_csv_row(os, {"aggregate", to_string(a.sampler), "all", status, "NA", "NA", "NA", "NA", "NA", "NA",
                         "NA", "NA"});
      continue;
    }
    write_csv_row(os, {"aggregate", to_string(a.sampler), "all", status, format_number(a.mean.fpr95),
                       format_number(a.mean.auroc), format_number(a.mean.aupr), format_number(a.mean.id_acc),
                       format_number(a.sd.fpr95), format_number(a.sd.auroc), format_number(a.sd.aupr),
                       format_number(a.sd.id_acc)});
  }
  os.close();

  // Per-sampler FPR95 curves: one column per successful seed plus the mean.
  for (SamplerKind s : manifest.samplers) {
    std::vector<const CompareCell*> ok;
    for (const auto& c : summary.cells)
      if (c.sampler == s && c.ok) ok.push_back(&c);
    std::ofstream cs(out / ("curves_" + to_string(s) + ".csv"), std::ios::binary);
    CsvRow head{"epoch"};
    for (const auto* c : ok) head.push_back("seed_" + std::to_string(c->seed));
    head.push_back("mean");
    write_csv_row(cs, head);
    for (std::size_t e = 0; e < manifest.base.epochs; ++e) {
      CsvRow row{std::to_string(e + 1)};
      double mean = 0.0;
      for (const auto* c : ok) {
        row.push_back(format_number(c->fpr_curve[e]));
        mean += c->fpr_curve[e];
      }
      row.push_back(ok.empty() ? "NA" : format_number(mean / static_cast<double>(ok.size())));
      write_csv_row(cs, row);
    }
  }
  if (manifest.plots && manifest.base.epochs > 0) plot_dir(out, PlotKind::kCurves);
  return summary;
}

TheoremReport theorem_to_dir(const TheoremSetup& setup, const fs::path& out) {
  theorem_bound(setup.config);  // regime check before any output is written
  ensure_dir(out);
  TheoremReport report = verify_theorem(setup.config, setup.options);
  write_text(out / "theorem_report.json", report.to_json(false) + "\n");
  std::ofstream os(out / "theorem_trials.csv", std::ios::binary);
  write_csv_row(os, {"trial", "lhs", "bound"});
  for (std::size_t t = 0; t < report.lhs_values.size(); ++t)
    write_csv_row(os, {std::to_string(t), format_number(report.lhs_values[t]),
                       format_number(report.bound_values[t])});
  return report;
}

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "boundary") return PlotKind::kBoundary;
  if (name == "curves") return PlotKind::kCurves;
  throw ConfigError("kind", "expected boundary or curves, got '" + name + "'");
}

namespace {

std::vector<fs::path> plot_boundary(const fs::path& run_dir, const fs::path& out) {
  const auto header = nlohmann::json::parse(read_text(run_dir / "header.json"));
  const std::size_t d = header.at("input_dim").get<std::size_t>();
  if (d != 2) throw DimensionError("boundary plot needs d = 2, run has d = " + std::to_string(d));
  RunConfig cfg;
  KeyValues kv;
  for (const auto& [k, v] : header.at("config").items()) kv[k] = v.get<std::string>();
  cfg = run_config_from(kv);

  std::vector<int> labels;
  const Matrix id = read_matrix_csv(run_dir / "id_train.csv", &labels);
  PlotExtent extent;
  if (cfg.dataset == DatasetKind::kToy) {
    extent = {cfg.toy.box_lo, cfg.toy.box_hi, cfg.toy.box_lo, cfg.toy.box_hi};
  } else {
    // Symmetric square around the origin covering both mixture components.
    const double r = cfg.mu_norm + 4.0 * cfg.theory_sigma;
    extent = {-r, r, -r, r};
  }

  const auto index = nlohmann::json::parse(read_text(run_dir / "snapshots" / "index.json"));
  std::vector<fs::path> written;
  for (const auto& s : index.at("snapshots")) {
    const std::size_t epoch = s.at("epoch").get<std::size_t>();
    const EnergyModel model = load_checkpoint(run_dir / "snapshots" / s.at("checkpoint").get<std::string>());
    const Matrix mined = read_matrix_csv(run_dir / "snapshots" / s.at("mined").get<std::string>());
    BoundaryPlot p;
    p.model = &model;
    p.id_points = &id;
    p.id_labels = &labels;
    p.mined_points = &mined;
    p.threshold = s.at("threshold").get<double>();
    p.extent = extent;
    p.title = to_string(cfg.sampler) + ", epoch " + std::to_string(epoch);
    const fs::path file = out / ("boundary_epoch_" + std::to_string(epoch) + ".svg");
    write_text(file, boundary_svg(p));
    written.push_back(file);
  }
  return written;
}

std::vector<fs::path> plot_curves(const fs::path& run_dir, const fs::path& out) {
  std::vector<Curve> curves;
  if (fs::exists(run_dir / "compare.csv")) {
    std::vector<std::string> samplers;
    for (const auto& row : read_csv(run_dir / "compare.csv"))
      if (!row.empty() && row[0] == "aggregate") samplers.push_back(row[1]);
    for (const auto& s : samplers) {
      const auto rows = read_csv(run_dir / ("curves_" + s + ".csv"));
      Curve c{s, {}};
      for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].back() == "NA") break;
        c.second.push_back(std::stod(rows[r].back()));
      }
      curves.push_back(std::move(c));
    }
  } else if (fs::exists(run_dir / "log.jsonl")) {
    const auto header = nlohmann::json::parse(read_text(run_dir / "header.json"));
    Curve c{header.at("sampler").get<std::string>(), {}};
    for (const auto& log : read_epoch_logs(run_dir / "log.jsonl")) c.second.push_back(log.metrics.fpr95);
    curves.push_back(std::move(c));
  } else {
    throw ConfigError("run_dir", "no compare.csv or log.jsonl in " + run_dir.string());
  }
  const fs::path file = out / "curves.svg";
  write_text(file, curves_svg(curves, "FPR95 vs epoch"));
  return {file};
}

}  // namespace

std::vector<fs::path> plot_dir(const fs::path& run_dir, PlotKind kind, const fs::path& out) {
  if (!fs::is_directory(run_dir)) throw ConfigError("run_dir", "not a directory: " + run_dir.string());
  const fs::path dest = out.empty() ? run_dir : out;
  ensure_dir(dest);
  return kind == PlotKind::kBoundary ? plot_boundary(run_dir, dest) : plot_curves(run_dir, dest);
}

}  // namespace poemlab
