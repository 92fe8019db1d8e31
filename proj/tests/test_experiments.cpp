#include <cmath>
#include <filesystem>

#include <doctest.h>
#include <json.hpp>

#include "psenet/experiments.hpp"
#include "psenet/model_io.hpp"
#include "psenet/selfcheck.hpp"

using namespace psenet;
using nlohmann::json;

namespace {

ExperimentSpec tiny_sine_spec() {
  return parse_experiment_spec(json::parse(R"({
    "family": "sine-1d",
    "targets": [3],
    "depths": [1],
    "architectures": ["fc", "pse-2"],
    "width": 4,
    "seeds": [1, 2],
    "epochs": 30,
    "grid_mesh": 0.1
  })"));
}

}  // namespace

TEST_CASE("experiment spec parsing applies defaults and validates") {
  const ExperimentSpec spec = parse_experiment_spec(json::parse(R"({
    "family": "sine-1d",
    "targets": [3, 4],
    "architectures": ["fc", "resnet", "pse-5"]
  })"));
  CHECK(spec.targets.size() == 2);
  CHECK(spec.targets[0].label == "sin(3*pi*x)");
  CHECK(spec.depths == std::vector<int>{1});
  CHECK(spec.width == 10);
  CHECK(spec.seeds == std::vector<unsigned>{1, 2, 3, 4, 5});
  CHECK(spec.epochs == 20000);
  CHECK(spec.opt.method == "adam");
  CHECK(spec.opt.lr == doctest::Approx(0.01));

  const ExperimentSpec t2 = parse_experiment_spec(json::parse(R"({
    "family": "singular-h1",
    "targets": ["2/3"],
    "architectures": ["resnet", "relu-1", "pse-2"]
  })"));
  CHECK(t2.width == 20);
  CHECK(t2.targets[0].label == "x^(2/3)");
  CHECK(t2.targets[0].value == doctest::Approx(2.0 / 3.0));

  CHECK_THROWS_WITH_AS(parse_experiment_spec(json::parse(R"({
    "family": "table0"
  })")),
                       doctest::Contains("family"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_experiment_spec(json::parse(R"({
    "family": "sine-1d",
    "targets": [3],
    "architectures": ["dense-42"]
  })")),
                       doctest::Contains("architecture"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_experiment_spec(json::parse(R"({
    "family": "sine-1d",
    "targets": [3],
    "architectures": ["fc"],
    "seeds": []
  })")),
                       doctest::Contains("seeds"), std::invalid_argument);
  // One-hidden baselines have no depth-2 form.
  CHECK_THROWS_WITH_AS(
      run_singular_sweep(parse_experiment_spec(json::parse(R"({
    "family": "singular-h1",
    "targets": ["2/3"],
    "depths": [2],
    "architectures": ["relu-3"],
    "epochs": 1
  })"))),
      doctest::Contains("depth"), std::invalid_argument);
}

TEST_CASE("hp-sweep and construct-check specs parse") {
  const ExperimentSpec hp = parse_experiment_spec(json::parse(R"({
    "family": "hp-sweep",
    "alpha": "2/3",
    "n_min": 2,
    "n_max": 5
  })"));
  CHECK(hp.n_range == std::vector<int>{2, 3, 4, 5});
  CHECK(hp.mu == doctest::Approx(1.0));

  const ExperimentSpec cc = parse_experiment_spec(json::parse(R"({
    "family": "construct-check"
  })"));
  CHECK(cc.kinds.size() == 5);
  CHECK(cc.check_seed == 7u);
}

TEST_CASE("build_architecture shapes and rejections") {
  const Model fc = build_architecture("fc", 2, 7, 3);
  const auto& net = std::get<Network>(fc);
  CHECK(net.layers.size() == 3);
  CHECK(std::get<FcLayer>(net.layers[0]).W.rows() == 7);
  CHECK(std::get<FcLayer>(net.layers[0]).W.cols() == 2);
  CHECK(std::get<FcLayer>(net.layers[2]).W.cols() == 7);

  const Model relu = build_architecture("relu-4", 1, 9, 1);
  const auto& one = std::get<OneHiddenPse>(relu);
  CHECK(one.n == 4);
  CHECK(one.width(4) == 9);
  CHECK(one.width(1) == 0);

  CHECK_THROWS_AS((void)build_architecture("relu-4", 1, 9, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)build_architecture("mystery", 1, 9, 1),
                  std::invalid_argument);
}

TEST_CASE("fit_line recovers an exact line and scores noise") {
  const std::vector<double> xs = {1, 2, 3, 4, 5};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(-0.75 * x + 2.0);
  const LineFit fit = fit_line(xs, ys);
  CHECK(fit.slope == doctest::Approx(-0.75).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));

  const LineFit flat = fit_line({1, 2, 3, 4}, {1.0, -1.0, 1.0, -1.0});
  CHECK(flat.r2 < 0.5);
  CHECK_THROWS_AS((void)fit_line({1}, {1}), std::invalid_argument);
}

TEST_CASE("median_with_nan sorts NaN to the top") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(median_with_nan({3, 1, 2}) == 2);
  CHECK(median_with_nan({1, 2, 3, 4}) == doctest::Approx(2.5));
  CHECK(median_with_nan({1, 2, nan}) == 2);
  CHECK(std::isnan(median_with_nan({1, nan, nan})));
  CHECK(std::isnan(median_with_nan({})));
  CHECK(std::isnan(median_with_nan({1, 2, nan, nan})));  // mean(2, NaN)
}

TEST_CASE("table CSV format is pinned") {
  ComparisonTable t;
  t.family = "sine-1d";
  TableCell a;
  a.target = "sin(3*pi*x)";
  a.depth = 1;
  a.architecture = "fc";
  a.median_loss = 0.125;
  a.nan_count = 0;
  TableCell b = a;
  b.architecture = "relu-5";
  b.median_loss = std::numeric_limits<double>::quiet_NaN();
  b.nan_count = 5;
  b.best_flag = true;  // exercises the flag column only
  t.cells = {a, b};
  CHECK(table_to_csv(t) ==
        "target,depth,architecture,median_loss,nan_count,best_flag\n"
        "sin(3*pi*x),1,fc,0.125,0,0\n"
        "sin(3*pi*x),1,relu-5,NaN,5,1\n");
  const auto j = table_to_json(t);
  CHECK(j["cells"][0]["median_loss"].get<double>() == doctest::Approx(0.125));
  CHECK(j["cells"][1]["median_loss"].is_null());  // NaN serializes as null
}

TEST_CASE("tiny sine sweep: cell accounting, determinism, medians") {
  const ExperimentSpec spec = tiny_sine_spec();
  const SweepOutput first = run_sine_sweep(spec, 1);
  REQUIRE(first.table.cells.size() == 2);  // 1 target x 1 depth x 2 archs
  REQUIRE(first.runs.size() == 4);         // x 2 seeds
  for (const RunRecord& rec : first.runs) {
    CHECK(rec.error.empty());
    CHECK(std::isfinite(rec.result.final_loss));
    CHECK(rec.result.trace.front().first == 0);
  }
  // Median of two seeds is the average of both finals.
  const double want_median = 0.5 * (first.runs[0].result.final_loss +
                                    first.runs[1].result.final_loss);
  CHECK(first.table.cells[0].median_loss == doctest::Approx(want_median));
  CHECK(first.table.cells[0].nan_count == 0);
  // Only PSE cells can carry the best flag; with one PSE cell it is best.
  CHECK_FALSE(first.table.cells[0].best_flag);
  CHECK(first.table.cells[1].best_flag);
}

TEST_CASE("sweep determinism across worker counts") {
  const ExperimentSpec spec = tiny_sine_spec();
  const SweepOutput serial = run_sine_sweep(spec, 1);
  const SweepOutput parallel = run_sine_sweep(spec, 3);
  REQUIRE(serial.runs.size() == parallel.runs.size());
  for (std::size_t i = 0; i < serial.runs.size(); ++i) {
    CHECK(serial.runs[i].result.final_loss ==
          parallel.runs[i].result.final_loss);
    CHECK(serial.runs[i].result.trace == parallel.runs[i].result.trace);
  }
  CHECK(table_to_csv(serial.table) == table_to_csv(parallel.table));
}

TEST_CASE("run records serialize NaN as null and omit wall time") {
  RunRecord rec;
  rec.family = "singular-h1";
  rec.target = "x^(2/3)";
  rec.depth = 1;
  rec.architecture = "relu-5";
  rec.width = 20;
  rec.seed = 3;
  rec.loss = "h1";
  rec.epochs = 100;
  rec.result.final_loss = std::numeric_limits<double>::quiet_NaN();
  rec.result.nan_abort = true;
  rec.result.nan_epoch = 42;
  rec.result.trace = {{0, 1.5}};
  rec.result.wall_time_seconds = 12.5;  // measured, but never serialized
  const auto j = run_record_to_json(rec);
  CHECK(j["final_loss"].is_null());
  CHECK(j["nan_epoch"].get<int>() == 42);
  CHECK(j["wall_time_seconds"].is_null());
  CHECK(j["optimizer"]["method"].get<std::string>() == "adam");
}

TEST_CASE("experiment dir layout and byte-identical reruns") {
  namespace fs = std::filesystem;
  const ExperimentSpec spec = tiny_sine_spec();
  const std::string d1 = (fs::temp_directory_path() / "psenet_exp_a").string();
  const std::string d2 = (fs::temp_directory_path() / "psenet_exp_b").string();
  fs::remove_all(d1);
  fs::remove_all(d2);
  CHECK(run_experiment_to_dir(spec, d1, 2) == 0);
  CHECK(run_experiment_to_dir(spec, d2, 1) == 0);
  CHECK(fs::exists(d1 + "/table.csv"));
  CHECK(fs::exists(d1 + "/table.json"));
  int n_runs = 0;
  for (const auto& e : fs::directory_iterator(d1 + "/runs")) {
    (void)e;
    n_runs++;
  }
  CHECK(n_runs == 4);
  CHECK(read_text_file(d1 + "/table.csv") == read_text_file(d2 + "/table.csv"));
  CHECK(read_text_file(d1 + "/table.json") ==
        read_text_file(d2 + "/table.json"));
  CHECK(read_text_file(d1 + "/runs/sine-1d_sin3pix_d1_fc_s1.json") ==
        read_text_file(d2 + "/runs/sine-1d_sin3pix_d1_fc_s1.json"));

  // Medians recomputable from the persisted run files.
  const auto table = json::parse(read_text_file(d1 + "/table.json"));
  for (const auto& cell : table.at("cells")) {
    std::vector<double> finals;
    for (const auto& rel : cell.at("runs")) {
      const auto run = json::parse(
          read_text_file(d1 + "/" + rel.get<std::string>()));
      finals.push_back(run.at("final_loss").is_null()
                           ? std::numeric_limits<double>::quiet_NaN()
                           : run.at("final_loss").get<double>());
    }
    CHECK(median_with_nan(finals) ==
          doctest::Approx(cell.at("median_loss").get<double>()));
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("tiny singular sweep records the Sobolev protocol") {
  const ExperimentSpec spec = parse_experiment_spec(json::parse(R"({
    "family": "singular-h1",
    "targets": ["2/3"],
    "architectures": ["relu-1", "pse-2"],
    "width": 6,
    "seeds": [1],
    "epochs": 25,
    "h1_subintervals": 64
  })"));
  const SweepOutput out = run_singular_sweep(spec, 1);
  REQUIRE(out.runs.size() == 2);
  for (const RunRecord& rec : out.runs) {
    CHECK(rec.loss == "h1");
    CHECK(rec.error.empty());
    CHECK(std::isfinite(rec.result.final_loss));
    // Post-hoc fine-grid H1 error is measured for singular cells.
    CHECK(std::isfinite(rec.posthoc_h1_error));
    CHECK(rec.posthoc_h1_error > 0.0);
  }
}

TEST_CASE("hp sweep report: decay shape on a short range") {
  const HpSweepReport report =
      run_hp_sweep(2.0 / 3.0, {2, 3, 4, 5}, 1.0, 1.0, "x^(2/3)");
  REQUIRE(report.rows.size() == 4);
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    CHECK(report.rows[i].h1_error < report.rows[i - 1].h1_error);
  CHECK(report.fit_vs_n.slope < 0.0);
  CHECK(report.fit_vs_n.r2 > 0.9);
  CHECK(report.fit_vs_m.slope < 0.0);
  CHECK(report.max_m_ratio > 0.0);
  CHECK(report.max_m_ratio <= 3.0);
  const auto j = hp_report_to_json(report);
  CHECK(j["rows"].size() == 4);
  CHECK(j["fit_log_error_vs_n"]["slope"].get<double>() < 0.0);
  const std::string csv = hp_report_to_csv(report);
  CHECK(csv.substr(0, 20) == "n,h1_error,m_total\n2");
  CHECK_THROWS_AS((void)run_hp_sweep(0.4, {2, 3}, 1.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("construct-check battery passes and reports neurons") {
  const auto rows = run_construct_check(
      {"lower", "bspline", "polynomial", "piecewise", "singular"}, 7, 1e-8);
  REQUIRE(rows.size() == 5);
  for (const auto& r : rows) {
    INFO(r.kind, ": ", r.detail);
    CHECK(r.pass);
    CHECK(r.neurons > 0);
  }
  const std::string csv = construct_check_to_csv(rows);
  CHECK(csv.substr(0, 41) == "kind,max_deviation,tolerance,neurons,pass");
}

TEST_CASE("selfcheck groups all pass without a golden file") {
  const auto groups = run_selfcheck("");
  REQUIRE(groups.size() == 5);
  for (const auto& g : groups) {
    INFO(g.name, ": ", g.detail);
    CHECK(g.pass);
  }
}
