#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "poemlab/commands.hpp"
#include "poemlab/config.hpp"
#include "poemlab/errors.hpp"
#include "poemlab/io.hpp"
#include "poemlab/plot.hpp"

using namespace poemlab;

namespace {

KeyValues parse(const std::string& text) {
  std::istringstream in(text);
  return parse_key_values(in);
}

std::string error_field(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

Manifest tiny_manifest() {
  Manifest m;
  RunConfig& c = m.base;
  c.epochs = 2;
  c.pool_size = 200;
  c.mined_count = 30;
  c.batch_size = 32;
  c.id_train = 120;
  c.aux_size = 600;
  c.test_id = 100;
  c.test_ood = 100;
  c.hidden = {6};
  m.plots = false;
  return m;
}

}  // namespace

TEST_SUITE("config_io") {
  TEST_CASE("key value grammar") {
    const auto kv = parse("# comment\n\n  epochs = 12  \nsampler=random # trailing\nhidden = 16,16\n");
    CHECK(kv.size() == 3);
    CHECK(kv.at("epochs") == "12");
    CHECK(kv.at("sampler") == "random");
    CHECK(kv.at("hidden") == "16,16");
  }

  TEST_CASE("grammar errors name the line or key") {
    CHECK(error_field("epochs = 1\nepochs = 2\n") == "epochs");
    CHECK(error_field("epochs 12\n") == "line 1");
    CHECK(error_field("a = 1\nbad-key = 2\n") == "line 2");
    CHECK(error_field(" = 3\n") == "line 1");
  }

  TEST_CASE("typed values") {
    CHECK(parse_double("x", "0.25") == 0.25);
    CHECK(parse_double("x", "-1e-3") == -1e-3);
    CHECK_THROWS_AS(parse_double("x", "abc"), ConfigError);
    CHECK_THROWS_AS(parse_double("x", "1.5x"), ConfigError);
    CHECK(parse_size("n", "42") == 42);
    CHECK_THROWS_AS(parse_size("n", "-1"), ConfigError);
    CHECK(parse_bool("b", "true"));
    CHECK_FALSE(parse_bool("b", "0"));
    CHECK_THROWS_AS(parse_bool("b", "maybe"), ConfigError);
    CHECK(split_list(" 1, 2 ,3") == std::vector<std::string>{"1", "2", "3"});
  }

  TEST_CASE("run config from keys, unknown keys rejected") {
    const auto c = run_config_from(parse("sampler = random\nepochs = 7\nlr = 0.01\nm_in = -20\nhidden = 4,5\n"));
    CHECK(c.sampler == SamplerKind::kRandom);
    CHECK(c.epochs == 7);
    CHECK(c.learning_rate == 0.01);
    CHECK(c.margins.m_in == -20);
    CHECK(c.hidden == std::vector<std::size_t>{4, 5});
    try {
      run_config_from(parse("epoch = 3\n"));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "epoch");
    }
    CHECK_THROWS_AS(run_config_from(parse("sampler = ucb\n")), ConfigError);
    CHECK_NOTHROW(run_config_from(parse("samplers = random\n"), {"samplers"}));
  }

  TEST_CASE("config key values round trip") {
    RunConfig c;
    c.sampler = SamplerKind::kGreedyMean;
    c.learning_rate = 0.1 + 0.2;
    c.noise_var = 1.0 / 3.0;
    c.stop_epoch = 5;
    c.snapshot_epochs = {1, 2, 9};
    c.toy.class_sd = 0.7;
    c.seed = 123456789012345ull;
    const RunConfig back = run_config_from(to_key_values(c));
    CHECK(to_key_values(back) == to_key_values(c));
    CHECK(back.learning_rate == c.learning_rate);
    CHECK(back.noise_var == c.noise_var);
    CHECK(back.stop_epoch == c.stop_epoch);
    CHECK(back.seed == c.seed);
    CHECK(parse(format_key_values(to_key_values(c))) == to_key_values(c));
  }

  TEST_CASE("theorem setup and manifest parsing") {
    const auto t = theorem_setup_from(parse("dim = 8\nmu_norm = 6\nepsilon = 0.3\ntrials = 50\nconstraint = rejection\n"));
    CHECK(t.config.dim() == 8);
    CHECK(t.config.mu_norm() == doctest::Approx(6.0));
    CHECK(t.config.epsilon == 0.3);
    CHECK(t.options.trials == 50);
    CHECK(t.options.constraint == ConstraintMethod::kRejection);
    CHECK_THROWS_AS(theorem_setup_from(parse("constraint = magic\n")), ConfigError);
    CHECK_THROWS_AS(theorem_setup_from(parse("lr = 1\n")), ConfigError);

    const auto m = manifest_from(parse("samplers = thompson, greedy_mean, random\nseeds = 3,4\nepochs = 2\nplots = false\n"));
    CHECK(m.samplers.size() == 3);
    CHECK(m.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(m.base.epochs == 2);
    CHECK_FALSE(m.plots);
  }

  TEST_CASE("csv escaping and parsing round trip") {
    const std::vector<CsvRow> rows{{"plain", "with,comma", "with \"quote\""}, {"multi\nline", "", "x\r\ny"}};
    std::ostringstream os;
    for (const auto& r : rows) write_csv_row(os, r);
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_escape("plain") == "plain");
    std::istringstream in(os.str());
    CHECK(parse_csv(in) == rows);
    std::istringstream lf("a,b\nc,d\n");
    CHECK(parse_csv(lf) == std::vector<CsvRow>{{"a", "b"}, {"c", "d"}});
    std::istringstream bad("\"open,field\n");
    CHECK_THROWS_AS(parse_csv(bad), FormatError);
  }

  TEST_CASE("number formatting round trips") {
    RngStream rng(1);
    for (int i = 0; i < 1000; ++i) {
      const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.index(40)) - 20.0);
      CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(0.5) == "0.5");
  }

  TEST_CASE("queue json round trip") {
    RngStream rng(2);
    FeatureQueue q(5, 3);
    for (int k = 0; k < 7; ++k) {
      const Vec phi{rng.normal(), rng.normal(), 1.0};
      q.push(phi, rng.normal());
    }
    const FeatureQueue back = queue_from_json(queue_to_json(q));
    CHECK(back.capacity() == 5);
    CHECK(back.size() == 5);
    CHECK(back.flat_features() == q.flat_features());
    CHECK(back.targets() == q.targets());
    CHECK_THROWS(queue_from_json("{\"capacity\": 2}"));
  }

  TEST_CASE("matrix csv round trip") {
    RngStream rng(3);
    const Matrix m = testutil::random_matrix(12, 3, rng);
    std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2};
    const auto dir = testutil::temp_dir("matrix_csv");
    write_matrix_csv(dir / "m.csv", m, &labels);
    std::vector<int> back_labels;
    const Matrix back = read_matrix_csv(dir / "m.csv", &back_labels);
    CHECK(back_labels == labels);
    CHECK(max_abs(back - m) == 0.0);
  }

  TEST_CASE("boundary plot requires 2-D models") {
    RngStream rng(4);
    const EnergyModel m5 = EnergyModel::initialize(std::vector<std::size_t>{5, 4}, 2, EnergyMargins{}, rng);
    BoundaryPlot p;
    p.model = &m5;
    CHECK_THROWS_AS(boundary_svg(p), DimensionError);

    const EnergyModel m2 = EnergyModel::initialize(std::vector<std::size_t>{2, 4}, 3, EnergyMargins{}, rng);
    p.model = &m2;
    p.grid = 50;
    CHECK_THROWS_AS(boundary_svg(p), ConfigError);
    p.grid = 200;
    const Matrix mined = testutil::random_matrix(7, 2, rng);
    p.mined_points = &mined;
    const std::string svg = boundary_svg(p);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(count_of(svg, "<circle") == 7);
  }

  TEST_CASE("curve plot has one polyline per curve") {
    const std::string svg = curves_svg({{"thompson", {0.5, 0.4, 0.3}}, {"random", {0.6, 0.5, 0.45}}}, "fpr");
    CHECK(count_of(svg, "<polyline") == 2);
    CHECK(count_of(curves_svg({{"a", {0.1}}}, "t"), "<polyline") == 1);
  }

  TEST_CASE("train writes one log line per epoch and records overrides") {
    Manifest m = tiny_manifest();
    m.base.epochs = 3;
    m.base.sampler = SamplerKind::kRandom;
    const auto dir = testutil::temp_dir("train_dir");
    train_to_dir(m.base, dir);
    CHECK(line_count(dir / "log.jsonl") == 3);
    CHECK(line_count(dir / "mined.jsonl") == 3);
    const std::string header = read_text(dir / "header.json");
    CHECK(header.find("\"sampler\": \"random\"") != std::string::npos);
    CHECK(header.find("ratio") != std::string::npos);
    CHECK(read_epoch_logs(dir / "log.jsonl").size() == 3);
    CHECK(fs::exists(dir / "model.ckpt"));
    CHECK(fs::exists(dir / "snapshots" / "index.json"));
    CHECK(load_checkpoint(dir / "model.ckpt").input_dim() == 2);

    const auto out = plot_dir(dir, PlotKind::kBoundary);
    CHECK(out.size() == 2);
    for (const auto& p : out) CHECK(fs::exists(p));
  }

  TEST_CASE("compare: 1 x 1 gives one run row and one aggregate row") {
    Manifest m = tiny_manifest();
    m.samplers = {SamplerKind::kThompson};
    m.seeds = {1};
    const auto dir = testutil::temp_dir("compare_1x1");
    const auto s = compare_to_dir(m, dir, 1);
    const auto rows = read_csv(dir / "compare.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][0] == "run");
    CHECK(rows[2][0] == "aggregate");
    CHECK(s.aggregates.size() == 1);
    CHECK(s.aggregates[0].sd.fpr95 == 0.0);
  }

  TEST_CASE("compare: 3 samplers x 5 seeds, aggregates equal recomputed means") {
    Manifest m = tiny_manifest();
    m.base.epochs = 1;
    m.samplers = {SamplerKind::kThompson, SamplerKind::kGreedyMean, SamplerKind::kRandom};
    m.plots = true;
    const auto dir = testutil::temp_dir("compare_3x5");
    const auto s = compare_to_dir(m, dir, 2);
    const auto rows = read_csv(dir / "compare.csv");
    REQUIRE(rows.size() == 1 + 15 + 3);
    std::size_t runs = 0, aggs = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) (rows[i][0] == "run" ? runs : aggs) += 1;
    CHECK(runs == 15);
    CHECK(aggs == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 5; ++j) sum += s.cells[k * 5 + j].metrics.auroc;
      CHECK(s.aggregates[k].mean.auroc == sum / 5.0);
      CHECK(s.aggregates[k].runs == 5);
    }
    CHECK(fs::exists(dir / "curves.svg"));
    CHECK(fs::exists(dir / "curves_thompson.csv"));
    const auto plotted = plot_dir(dir, PlotKind::kCurves);
    CHECK(plotted.size() == 1);
  }

  TEST_CASE("theorem driver writes report and trials") {
    TheoremSetup t;
    t.config = TheoryConfig::axis_aligned(20, 10.0, 1.0);
    t.options.trials = 20;
    t.options.test_draws = 2000;
    const auto dir = testutil::temp_dir("theorem_dir");
    const auto r = theorem_to_dir(t, dir);
    CHECK(r.trials == 20);
    CHECK(read_csv(dir / "theorem_trials.csv").size() == 21);
    t.config.epsilon = 2.0;
    CHECK_THROWS_AS(theorem_to_dir(t, dir), RegimeViolation);
  }

  TEST_CASE("plot kinds") {
    CHECK(parse_plot_kind("boundary") == PlotKind::kBoundary);
    CHECK(parse_plot_kind("curves") == PlotKind::kCurves);
    CHECK_THROWS_AS(parse_plot_kind("pie"), ConfigError);
  }
}
