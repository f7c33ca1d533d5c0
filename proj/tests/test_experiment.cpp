#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dtml/datakit.hpp"
#include "dtml/errors.hpp"
#include "dtml/experiment.hpp"
#include "dtml/model_io.hpp"
#include "dtml/pipeline.hpp"

using dtml::Matrix;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dtml_exp_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

// per_class == subspace_dim keeps every training submatrix full column rank,
// so the projection step stays consistent at any penalty setting
dtml::ExperimentConfig tiny_config() {
  dtml::ExperimentConfig cfg;
  cfg.use_synth = true;
  cfg.synth.classes = 3;
  cfg.synth.subspace_dim = 3;
  cfg.synth.ambient_dim = 12;
  cfg.synth.per_class = 3;
  cfg.synth.noise_fraction = 0.1;
  cfg.synth.spike_magnitude = 0.8;
  cfg.synth.seed = 5;
  cfg.train_per_class = 2;
  cfg.repeats = 2;
  cfg.seed_base = 100;
  cfg.lambda1 = 0.5;
  cfg.lambda2 = 1.0;
  cfg.lambda3 = 0.1;
  cfg.lambda4 = 0.1;
  return cfg;
}

dtml::ExperimentConfig bench_config() {
  dtml::ExperimentConfig cfg;
  cfg.use_synth = true;
  cfg.synth.seed = 7;  // defaults: 5 classes, dim 10 in ambient 50, 20/class
  cfg.train_per_class = 10;
  cfg.repeats = 3;
  cfg.seed_base = 1000;
  cfg.lambda1 = 0.5;
  cfg.lambda2 = 1.0;
  cfg.lambda3 = 0.1;
  cfg.lambda4 = 0.1;
  return cfg;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("DTML_CLI");
  REQUIRE_MESSAGE(cli != nullptr,
                  "DTML_CLI must point at the CLI binary (set by ctest)");
  const std::string cmd =
      std::string("\"") + cli + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("default candidate grid is the documented 17-value ladder") {
  const std::vector<double> expected = {1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3,
                                        1e-2, 5e-2, 1e-1, 5e-1, 1.0,  5.0,
                                        1e1,  5e1,  1e2,  5e2,  1e3};
  CHECK(dtml::default_candidate_grid() == expected);
}

TEST_CASE("run_experiment fills one row per repeat with derived seeds") {
  const auto cfg = tiny_config();
  const auto rep = dtml::run_experiment(cfg);
  REQUIRE(rep.rows.size() == 2);
  for (int r = 0; r < 2; ++r) {
    CHECK(rep.rows[r].repeat == r);
    CHECK(rep.rows[r].seed == cfg.seed_base + static_cast<std::uint64_t>(r));
    CHECK(rep.rows[r].train_per_class == 2);
    CHECK(rep.rows[r].mode == dtml::Mode::Full);
    CHECK(rep.rows[r].accuracy >= 0.0);
    CHECK(rep.rows[r].accuracy <= 1.0);
    CHECK(rep.rows[r].iters_latlrr >= 1);
    CHECK(rep.rows[r].sweeps_dtml >= 1);
  }

  // summary stats must be recomputable from the rows
  double mean = 0.0;
  for (const auto& row : rep.rows) mean += row.accuracy;
  mean /= static_cast<double>(rep.rows.size());
  double var = 0.0;
  for (const auto& row : rep.rows) {
    var += (row.accuracy - mean) * (row.accuracy - mean);
  }
  const double stddev =
      std::sqrt(var / static_cast<double>(rep.rows.size() - 1));
  CHECK(std::abs(rep.mean - mean) <= 1e-12);
  CHECK(std::abs(rep.stddev - stddev) <= 1e-12);
  CHECK(rep.wall_time_seconds >= 0.0);
}

TEST_CASE("experiment runs are deterministic given the config") {
  const auto cfg = tiny_config();
  const auto a = dtml::run_experiment(cfg);
  const auto b = dtml::run_experiment(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].accuracy == b.rows[i].accuracy);
    CHECK(a.rows[i].iters_latlrr == b.rows[i].iters_latlrr);
    CHECK(a.rows[i].sweeps_dtml == b.rows[i].sweeps_dtml);
    CHECK(a.rows[i].objective_final == b.rows[i].objective_final);
  }
  REQUIRE(a.convergence.size() == b.convergence.size());
  for (size_t i = 0; i < a.convergence.size(); ++i) {
    CHECK(a.convergence[i].objective == b.convergence[i].objective);
    CHECK(a.convergence[i].train_accuracy == b.convergence[i].train_accuracy);
  }
}

TEST_CASE("convergence trace descends within every repeat") {
  const auto rep = dtml::run_experiment(tiny_config());
  REQUIRE(!rep.convergence.empty());
  for (size_t i = 1; i < rep.convergence.size(); ++i) {
    const auto& prev = rep.convergence[i - 1];
    const auto& cur = rep.convergence[i];
    if (cur.repeat != prev.repeat) {
      CHECK(cur.sweep == 1);  // each repeat restarts its sweep numbering
      continue;
    }
    CHECK(cur.sweep == prev.sweep + 1);
    CHECK(cur.objective <= prev.objective + 1e-12);
    CHECK(cur.train_accuracy >= 0.0);
    CHECK(cur.train_accuracy <= 1.0);
  }
}

TEST_CASE("benchmark synth configuration separates its classes") {
  const auto rep = dtml::run_experiment(bench_config());
  CHECK(rep.mean >= 0.9);
}

TEST_CASE("experiment artifacts land in the output directory") {
  TempDir td;
  auto cfg = tiny_config();
  cfg.outdir = td.path.string();
  const auto rep = dtml::run_experiment(cfg);

  const auto report = read_lines(td.file("report.csv"));
  REQUIRE(report.size() == rep.rows.size() + 1);
  CHECK(report[0] ==
        "repeat,seed,train_per_class,mode,accuracy,iters_latlrr,"
        "sweeps_dtml,objective_final");
  double mean = 0.0;
  for (size_t i = 1; i < report.size(); ++i) {
    const auto cells = split_csv(report[i]);
    REQUIRE(cells.size() == 8);
    CHECK(cells[3] == "full");
    mean += std::stod(cells[4]);
  }
  mean /= static_cast<double>(report.size() - 1);
  CHECK(std::abs(mean - rep.mean) <= 1e-12);

  const auto conv = read_lines(td.file("convergence.csv"));
  CHECK(conv[0] == "repeat,sweep,objective,train_accuracy");
  CHECK(conv.size() == rep.convergence.size() + 1);

  const auto summary = read_lines(td.file("summary.csv"));
  REQUIRE(summary.size() == 2);
  CHECK(summary[0] == "mean_accuracy,stddev_accuracy,repeats,wall_time_seconds");
  const auto cells = split_csv(summary[1]);
  REQUIRE(cells.size() == 4);
  CHECK(std::stod(cells[0]) == rep.mean);
  CHECK(std::stoi(cells[2]) == 2);

  const auto js = nlohmann::json::parse(
      std::ifstream(td.file("resolved_config.json")));
  CHECK(js.at("repeats").get<int>() == 2);
  CHECK(js.at("lambda1").get<double>() == 0.5);
  CHECK(js.at("synth").at("classes").get<int>() == 3);
}

TEST_CASE("ablation shares data and seeds across its three modes") {
  TempDir td;
  auto cfg = tiny_config();
  cfg.train_per_class_list = {1, 2};
  cfg.outdir = td.path.string();
  const auto ab = dtml::run_ablation(cfg);

  REQUIRE(ab.train_per_class == std::vector<int>{1, 2});
  REQUIRE(ab.reports.size() == 2);
  for (size_t t = 0; t < ab.reports.size(); ++t) {
    const auto& triple = ab.reports[t];
    CHECK(triple[0].rows[0].mode == dtml::Mode::Full);
    CHECK(triple[1].rows[0].mode == dtml::Mode::SalientOnly);
    CHECK(triple[2].rows[0].mode == dtml::Mode::SharedSingle);
    for (const auto& report : triple) {
      REQUIRE(report.rows.size() == 2);
      for (int r = 0; r < 2; ++r) {
        // same repeat -> same seed -> identical splits in every mode
        CHECK(report.rows[r].seed == triple[0].rows[r].seed);
        CHECK(report.rows[r].train_per_class == ab.train_per_class[t]);
      }
    }
  }

  for (const char* mode : {"full", "salient_only", "shared_single"}) {
    for (int tpc : {1, 2}) {
      const auto name = std::string("report_") + mode + "_tpc" +
                        std::to_string(tpc) + ".csv";
      CHECK(fs::exists(td.path / name));
    }
  }
  const auto table = read_lines(td.file("ablation_table.csv"));
  REQUIRE(table.size() == 4);
  CHECK(table[0] == "mode,tpc_1,tpc_2");
  CHECK(split_csv(table[1])[0] == "full");
  CHECK(split_csv(table[2])[0] == "salient_only");
  CHECK(split_csv(table[3])[0] == "shared_single");
  // table cells are the per-mode mean accuracies
  CHECK(std::stod(split_csv(table[1])[2]) ==
        doctest::Approx(ab.reports[1][0].mean).epsilon(1e-12));
}

TEST_CASE("grid search sweeps both stages over the full surface") {
  TempDir td;
  auto cfg = tiny_config();
  cfg.repeats = 1;
  cfg.outdir = td.path.string();
  const std::vector<double> grid = {0.1, 1.0, 10.0};
  const auto gr = dtml::grid_search(cfg, grid);

  REQUIRE(gr.surface.size() == 18);  // 9 stage-1 + 9 stage-2 points
  std::set<std::pair<double, double>> stage1, stage2;
  double best2 = -1.0;
  for (const auto& pt : gr.surface) {
    CHECK(pt.score >= 0.0);
    CHECK(pt.score <= 1.0);
    REQUIRE((pt.stage == 1 || pt.stage == 2));
    (pt.stage == 1 ? stage1 : stage2).insert({pt.lambda_a, pt.lambda_b});
    if (pt.stage == 2) best2 = std::max(best2, pt.score);
  }
  CHECK(stage1.size() == 9);
  CHECK(stage2.size() == 9);

  // the returned winners must sit on the grid and realize the best score
  for (double v : {gr.lambda1, gr.lambda2, gr.lambda3, gr.lambda4}) {
    CHECK(std::find(grid.begin(), grid.end(), v) != grid.end());
  }
  bool winner_found = false;
  for (const auto& pt : gr.surface) {
    if (pt.stage == 2 && pt.lambda_a == gr.lambda3 &&
        pt.lambda_b == gr.lambda4) {
      winner_found = true;
      CHECK(pt.score == best2);
    }
  }
  CHECK(winner_found);

  const auto surface = read_lines(td.file("grid_surface.csv"));
  CHECK(surface[0] == "stage,lambda_a,lambda_b,score");
  CHECK(surface.size() == 19);
  const auto best = nlohmann::json::parse(
      std::ifstream(td.file("best_params.json")));
  CHECK(best.at("lambda1").get<double>() == gr.lambda1);
  CHECK(best.at("lambda4").get<double>() == gr.lambda4);
}

TEST_CASE("one-point grids collapse to that candidate") {
  auto cfg = tiny_config();
  cfg.repeats = 1;
  const auto gr = dtml::grid_search(cfg, {0.7});
  CHECK(gr.surface.size() == 2);
  CHECK(gr.lambda1 == 0.7);
  CHECK(gr.lambda2 == 0.7);
  CHECK(gr.lambda3 == 0.7);
  CHECK(gr.lambda4 == 0.7);
}

TEST_CASE("config and grid preconditions are enforced") {
  auto cfg = tiny_config();
  cfg.repeats = 0;
  CHECK_THROWS_AS(dtml::run_experiment(cfg), dtml::ValidationError);

  cfg = tiny_config();
  cfg.lambda3 = 0.0;
  CHECK_THROWS_AS(dtml::run_experiment(cfg), dtml::ValidationError);

  cfg = tiny_config();
  CHECK_THROWS_AS(dtml::grid_search(cfg, {}), dtml::ValidationError);
  CHECK_THROWS_AS(dtml::grid_search(cfg, {-1.0}), dtml::ValidationError);

  cfg.train_per_class = 1;  // nothing left for the tuning holdout
  CHECK_THROWS_AS(dtml::grid_search(cfg, {1.0}), dtml::DataError);
}

TEST_CASE("decompose renders each requested sample as four images") {
  TempDir td;
  auto cfg = tiny_config();
  cfg.image_shape = {3, 4};  // ambient 12 pixels
  const auto ds = dtml::load_configured_dataset(cfg);
  dtml::decompose(ds, cfg.lambda1, cfg.lambda2, {0, 2}, td.path.string(),
                  cfg.normalize);
  for (int idx : {0, 2}) {
    for (const char* part : {"original", "principal", "salient", "noise"}) {
      const auto name = "sample" + std::to_string(idx) + "_" + part + ".pgm";
      INFO(name);
      CHECK(fs::exists(td.path / name));
      CHECK(fs::file_size(td.path / name) > 12);
    }
  }

  CHECK_THROWS_AS(dtml::decompose(ds, 0.5, 1.0, {99}, td.path.string(), true),
                  dtml::ValidationError);
  auto flat = ds;
  flat.image_shape.reset();
  CHECK_THROWS_AS(dtml::decompose(flat, 0.5, 1.0, {0}, td.path.string(), true),
                  dtml::DataError);
}

TEST_CASE("models survive a save/load round trip bit for bit") {
  TempDir td;
  const auto cfg = tiny_config();
  const auto ds = dtml::load_configured_dataset(cfg);
  dtml::TrainParams params;
  params.lambda1 = cfg.lambda1;
  params.lambda2 = cfg.lambda2;
  params.lambda3 = cfg.lambda3;
  params.lambda4 = cfg.lambda4;
  const auto model = dtml::train(ds.x, ds.labels, params);

  const auto mp = td.file("model.json");
  dtml::save_model(model, mp);
  const auto loaded = dtml::load_model(mp);
  CHECK((loaded.dtml.w1 - model.dtml.w1).norm() == 0.0);
  CHECK((loaded.dtml.w2 - model.dtml.w2).norm() == 0.0);
  CHECK((loaded.latlrr.l - model.latlrr.l).norm() == 0.0);
  CHECK((loaded.projection.p - model.projection.p).norm() == 0.0);
  CHECK((loaded.gallery - model.gallery).norm() == 0.0);
  CHECK(loaded.gallery_labels == model.gallery_labels);
  CHECK(loaded.codebook.class_ids == model.codebook.class_ids);
  CHECK(loaded.normalize == model.normalize);
  CHECK(loaded.nn_target == model.nn_target);
  CHECK(dtml::predict(loaded, ds.x) == dtml::predict(model, ds.x));

  std::ofstream(td.file("corrupt.json")) << "{ this is not json";
  CHECK_THROWS_AS(dtml::load_model(td.file("corrupt.json")), dtml::DataError);
  CHECK_THROWS_AS(dtml::load_model(td.file("missing.json")), dtml::DataError);
}

TEST_CASE("cli exposes the documented exit codes") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("bench") == 1);               // no dataset given
  CHECK(run_cli("bench --synth --lambda3 0") == 1);
  CHECK(run_cli("bench --data /nonexistent.csv --labels /nonexistent2.csv") ==
        2);
}

TEST_CASE("cli bench writes the full artifact set") {
  TempDir td;
  const int rc = run_cli(
      "bench --synth --classes 3 --subspace-dim 3 --ambient-dim 12 "
      "--per-class 3 --noise-fraction 0.1 --spike-magnitude 0.8 "
      "--data-seed 5 --train-per-class 2 --repeats 2 --seed 100 "
      "--lambda1 0.5 --lambda2 1 --outdir \"" +
      td.path.string() + "\"");
  CHECK(rc == 0);
  for (const char* name :
       {"report.csv", "convergence.csv", "summary.csv",
        "resolved_config.json"}) {
    INFO(name);
    CHECK(fs::exists(td.path / name));
  }
}

TEST_CASE("cli train and predict round trip through csv data") {
  TempDir td;
  const auto cfg = tiny_config();
  const auto ds = dtml::load_configured_dataset(cfg);
  dtml::save_matrix_csv(ds.x, td.file("x.csv"));
  dtml::save_labels_csv(ds.labels, td.file("y.csv"));

  const int rc_train = run_cli(
      "train --data \"" + td.file("x.csv") + "\" --labels \"" +
      td.file("y.csv") + "\" --lambda1 0.5 --lambda2 1 --model-out \"" +
      td.file("model.json") + "\" --outdir \"" + td.path.string() + "\"");
  CHECK(rc_train == 0);
  REQUIRE(fs::exists(td.path / "model.json"));

  const int rc_pred = run_cli(
      "predict --model \"" + td.file("model.json") + "\" --data \"" +
      td.file("x.csv") + "\" --labels \"" + td.file("y.csv") +
      "\" --out \"" + td.file("pred.csv") + "\"");
  CHECK(rc_pred == 0);
  const auto pred = read_lines(td.file("pred.csv"));
  REQUIRE(pred.size() == ds.labels.size());
  // training data through its own model should be labeled correctly
  int correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (std::stoi(pred[i]) == ds.labels[i]) ++correct;
  }
  CHECK(correct == static_cast<int>(pred.size()));
}
