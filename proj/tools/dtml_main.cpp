// Command-line front end: train/predict on CSV datasets, plus the bench,
// ablate, grid and decompose harnesses around the library. Exit codes:
// 0 success, 1 usage, 2 data/validation error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "dtml/datakit.hpp"
#include "dtml/errors.hpp"
#include "dtml/experiment.hpp"
#include "dtml/model_io.hpp"
#include "dtml/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

std::optional<std::pair<int, int>> parse_shape(const std::string& text) {
  int h = 0;
  int w = 0;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%dx%d%n", &h, &w, &consumed) != 2 ||
      consumed != static_cast<int>(text.size()) || h < 1 || w < 1) {
    return std::nullopt;
  }
  return std::make_pair(h, w);
}

const CLI::Validator kShapeValidator(
    [](std::string& s) -> std::string {
      if (!parse_shape(s)) {
        return "expected HEIGHTxWIDTH with positive integers, got '" + s + "'";
      }
      return "";
    },
    "HxW");

struct CliState {
  dtml::ExperimentConfig cfg;
  std::string image_shape_text;

  // Subcommand-local extras.
  std::string model_path = "model.json";
  std::string model_out;
  std::string data_path;    // predict positional input
  std::string labels_path;  // optional truth for predict
  std::string predictions_out;
  std::vector<int> tpc_list{10};
  int grid_repeats = 1;
  std::vector<double> grid_values;
  std::vector<int> indices{0, 1, 2, 3};
};

void add_dataset_options(CLI::App* sub, CliState& st) {
  sub->add_option("--data", st.cfg.data_path,
                  "CSV dataset, one sample per row");
  sub->add_option("--labels", st.cfg.labels_path,
                  "label file, one integer per line");
  sub->add_flag("--synth", st.cfg.use_synth,
                "generate a synthetic union-of-subspaces dataset instead");
  sub->add_option("--classes", st.cfg.synth.classes, "synthetic class count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--subspace-dim", st.cfg.synth.subspace_dim,
                  "synthetic subspace dimension per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--ambient-dim", st.cfg.synth.ambient_dim,
                  "synthetic feature dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--per-class", st.cfg.synth.per_class,
                  "synthetic samples per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--noise-fraction", st.cfg.synth.noise_fraction,
                  "fraction of synthetic entries hit by sparse spikes")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--spike-magnitude", st.cfg.synth.spike_magnitude,
                  "absolute value of the planted spikes")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--data-seed", st.cfg.synth.seed,
                  "seed of the synthetic generator")
      ->capture_default_str();
  sub->add_option("--image-shape", st.image_shape_text,
                  "treat each sample as a HEIGHTxWIDTH raster image")
      ->check(kShapeValidator);
}

void add_decomposition_options(CLI::App* sub, CliState& st) {
  sub->add_option("--lambda1", st.cfg.lambda1,
                  "nuclear-norm weight of the salient operator")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--lambda2", st.cfg.lambda2,
                  "l1 weight of the sparse residual")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--latlrr-tol", st.cfg.latlrr.tol,
                  "relative constraint-residual tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--latlrr-max-iter", st.cfg.latlrr.max_iter,
                  "iteration cap of the decomposition solver")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--latlrr-mu0", st.cfg.latlrr.mu0, "initial penalty")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--latlrr-rho", st.cfg.latlrr.rho,
                  "penalty growth factor (> 1)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--latlrr-mu-max", st.cfg.latlrr.mu_max, "penalty cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_model_options(CLI::App* sub, CliState& st, bool with_mode) {
  add_decomposition_options(sub, st);
  sub->add_option("--lambda3", st.cfg.lambda3,
                  "ridge weight of the principal-side transformation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--lambda4", st.cfg.lambda4,
                  "ridge weight of the salient-side transformation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--dtml-tol", st.cfg.dtml.tol,
                  "relative objective-change tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--dtml-max-iter", st.cfg.dtml.max_iter,
                  "sweep cap of the alternating fit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_flag(
      "--no-normalize",
      [&st](std::int64_t) { st.cfg.normalize = false; },
      "skip column L2 normalization");
  sub->add_option("--nn-target", st.cfg.nn_target,
                  "match embeddings against: gallery | labels")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, dtml::NnTarget>{
              {"gallery", dtml::NnTarget::Gallery},
              {"labels", dtml::NnTarget::Labels}},
          CLI::ignore_case))
      ->default_str("gallery");
  if (with_mode) {
    sub->add_option("--mode", st.cfg.mode,
                    "model variant: full | salient_only | shared_single")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, dtml::Mode>{
                {"full", dtml::Mode::Full},
                {"salient_only", dtml::Mode::SalientOnly},
                {"shared_single", dtml::Mode::SharedSingle}},
            CLI::ignore_case))
        ->default_str("full");
  }
}

void add_outdir_option(CLI::App* sub, CliState& st) {
  st.cfg.outdir = "out";
  sub->add_option("--outdir", st.cfg.outdir,
                  "output directory (env DTML_OUTDIR)")
      ->envname("DTML_OUTDIR")
      ->capture_default_str();
}

void require_dataset(const CliState& st) {
  if (!st.cfg.use_synth &&
      (st.cfg.data_path.empty() || st.cfg.labels_path.empty())) {
    throw CLI::RequiredError("--data FILE with --labels FILE, or --synth");
  }
}

void apply_image_shape(CliState& st) {
  if (!st.image_shape_text.empty()) {
    st.cfg.image_shape = parse_shape(st.image_shape_text);
  }
}

dtml::TrainParams train_params(const dtml::ExperimentConfig& cfg) {
  dtml::TrainParams p;
  p.lambda1 = cfg.lambda1;
  p.lambda2 = cfg.lambda2;
  p.lambda3 = cfg.lambda3;
  p.lambda4 = cfg.lambda4;
  p.latlrr = cfg.latlrr;
  p.dtml = cfg.dtml;
  p.normalize = cfg.normalize;
  p.mode = cfg.mode;
  p.nn_target = cfg.nn_target;
  return p;
}

void write_resolved_config(const dtml::ExperimentConfig& cfg) {
  std::ofstream out(fs::path(cfg.outdir) / "resolved_config.json",
                    std::ios::binary);
  if (!out) throw dtml::DataError("cannot write resolved_config.json");
  out << dtml::config_to_json(cfg);
}

void run_train(CliState& st) {
  require_dataset(st);
  apply_image_shape(st);
  st.cfg.command = "train";
  const dtml::Dataset ds = dtml::load_configured_dataset(st.cfg);
  const dtml::TrainedModel model =
      dtml::train(ds.x, ds.labels, train_params(st.cfg));
  fs::create_directories(st.cfg.outdir);
  const std::string model_path =
      st.model_out.empty() ? (fs::path(st.cfg.outdir) / "model.json").string()
                           : st.model_out;
  dtml::save_model(model, model_path);
  write_resolved_config(st.cfg);
  std::cout << "trained on " << ds.x.cols() << " samples, "
            << model.codebook.class_count() << " classes; decomposition "
            << (model.latlrr.converged ? "converged" : "hit max_iter")
            << " after " << model.latlrr.iterations()
            << " iterations; fit took " << model.dtml.sweeps()
            << " sweeps; model written to " << model_path << "\n";
}

void run_predict(CliState& st) {
  const dtml::TrainedModel model = dtml::load_model(st.model_path);
  dtml::Matrix x;
  std::vector<int> truth;
  if (st.labels_path.empty()) {
    x = dtml::load_matrix_csv(st.data_path);
  } else {
    const dtml::Dataset ds =
        dtml::load_dataset(st.data_path, st.labels_path);
    x = ds.x;
    truth = ds.labels;
  }
  const std::vector<int> internal = dtml::predict(model, x);
  std::vector<int> external;
  external.reserve(internal.size());
  for (int idx : internal) external.push_back(model.codebook.to_id(idx));

  if (st.predictions_out.empty()) {
    for (int id : external) std::cout << id << "\n";
  } else {
    std::ofstream out(st.predictions_out, std::ios::binary);
    if (!out) {
      throw dtml::DataError("cannot open for writing: " + st.predictions_out);
    }
    for (int id : external) out << id << "\n";
    std::cout << external.size() << " predictions written to "
              << st.predictions_out << "\n";
  }
  if (!truth.empty()) {
    std::vector<int> truth_internal;
    truth_internal.reserve(truth.size());
    for (int id : truth) truth_internal.push_back(model.codebook.to_index(id));
    std::cout << "accuracy: "
              << dtml::format_double(dtml::accuracy(internal, truth_internal))
              << " on " << truth.size() << " samples\n";
  }
}

void run_bench(CliState& st) {
  require_dataset(st);
  apply_image_shape(st);
  st.cfg.command = "bench";
  const dtml::ExperimentReport report = dtml::run_experiment(st.cfg);
  std::cout << "mode " << dtml::mode_name(st.cfg.mode) << ": mean accuracy "
            << dtml::format_double(report.mean) << " (std "
            << dtml::format_double(report.stddev) << ") over "
            << report.rows.size() << " repeats, "
            << dtml::format_double(report.wall_time_seconds)
            << "s; results in " << st.cfg.outdir << "\n";
}

void run_ablate(CliState& st) {
  require_dataset(st);
  apply_image_shape(st);
  st.cfg.command = "ablate";
  st.cfg.train_per_class_list = st.tpc_list;
  if (!st.tpc_list.empty()) st.cfg.train_per_class = st.tpc_list.front();
  const dtml::AblationResult result = dtml::run_ablation(st.cfg);
  std::cout << "mean accuracy by variant and training size:\n";
  for (std::size_t i = 0; i < 3; ++i) {
    std::cout << "  "
              << dtml::mode_name(result.reports.front()[i].config.mode)
              << ":";
    for (std::size_t t = 0; t < result.reports.size(); ++t) {
      std::cout << " tpc" << result.train_per_class[t] << "="
                << dtml::format_double(result.reports[t][i].mean);
    }
    std::cout << "\n";
  }
  std::cout << "results in " << st.cfg.outdir << "\n";
}

void run_grid(CliState& st) {
  require_dataset(st);
  apply_image_shape(st);
  st.cfg.command = "grid";
  st.cfg.repeats = st.grid_repeats;
  const std::vector<double> grid = st.grid_values.empty()
                                       ? dtml::default_candidate_grid()
                                       : st.grid_values;
  const dtml::GridResult result = dtml::grid_search(st.cfg, grid);
  std::cout << "best parameters: lambda1="
            << dtml::format_double(result.lambda1)
            << " lambda2=" << dtml::format_double(result.lambda2)
            << " lambda3=" << dtml::format_double(result.lambda3)
            << " lambda4=" << dtml::format_double(result.lambda4)
            << "; surface in " << st.cfg.outdir << "\n";
}

void run_decompose(CliState& st) {
  require_dataset(st);
  apply_image_shape(st);
  st.cfg.command = "decompose";
  const dtml::Dataset ds = dtml::load_configured_dataset(st.cfg);
  dtml::decompose(ds, st.cfg.lambda1, st.cfg.lambda2, st.indices,
                  st.cfg.outdir, st.cfg.normalize, st.cfg.latlrr);
  std::cout << st.indices.size() * 4 << " images written to " << st.cfg.outdir
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "classification via a latent low-rank decomposition and a pair of "
      "jointly fitted transformation matrices"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "read option defaults from an INI/TOML file "
                 "(one [section] per subcommand)");

  CliState st;

  CLI::App* train = app.add_subcommand(
      "train", "fit a model on a full dataset and save it as JSON");
  add_dataset_options(train, st);
  add_model_options(train, st, true);
  add_outdir_option(train, st);
  train->add_option("--model-out", st.model_out,
                    "model path (default: <outdir>/model.json)");
  train->callback([&st] { run_train(st); });

  CLI::App* predict = app.add_subcommand(
      "predict", "classify CSV samples with a saved model");
  predict->add_option("--model", st.model_path, "saved model JSON")
      ->required();
  predict->add_option("--data", st.data_path, "CSV samples, one per row")
      ->required();
  predict->add_option("--labels", st.labels_path,
                      "optional truth labels; prints accuracy");
  predict->add_option("--out", st.predictions_out,
                      "write predicted class ids here instead of stdout");
  predict->callback([&st] { run_predict(st); });

  CLI::App* bench = app.add_subcommand(
      "bench", "repeated-split benchmark; writes report/convergence CSVs");
  add_dataset_options(bench, st);
  add_model_options(bench, st, true);
  add_outdir_option(bench, st);
  bench
      ->add_option("--train-per-class", st.cfg.train_per_class,
                   "training samples per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--repeats", st.cfg.repeats, "number of random splits")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--seed", st.cfg.seed_base, "seed of the first split")
      ->capture_default_str();
  bench->callback([&st] { run_bench(st); });

  CLI::App* ablate = app.add_subcommand(
      "ablate", "compare full / salient_only / shared_single on shared splits");
  add_dataset_options(ablate, st);
  add_model_options(ablate, st, false);
  add_outdir_option(ablate, st);
  ablate
      ->add_option("--train-per-class", st.tpc_list,
                   "training sizes, one table column each")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ablate->add_option("--repeats", st.cfg.repeats, "number of random splits")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ablate->add_option("--seed", st.cfg.seed_base, "seed of the first split")
      ->capture_default_str();
  ablate->callback([&st] { run_ablate(st); });

  CLI::App* grid = app.add_subcommand(
      "grid", "two-stage parameter scan on a training holdout");
  add_dataset_options(grid, st);
  add_model_options(grid, st, false);
  add_outdir_option(grid, st);
  grid->add_option("--train-per-class", st.cfg.train_per_class,
                   "training samples per class (>= 2)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  grid->add_option("--repeats", st.grid_repeats,
                   "splits averaged per grid point")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  grid->add_option("--seed", st.cfg.seed_base, "seed of the first split")
      ->capture_default_str();
  grid->add_option("--grid", st.grid_values,
                   "candidate values (default: the built-in 17-value set)")
      ->check(CLI::PositiveNumber);
  grid->callback([&st] { run_grid(st); });

  CLI::App* decompose = app.add_subcommand(
      "decompose", "export per-sample decomposition images as PGM");
  add_dataset_options(decompose, st);
  add_decomposition_options(decompose, st);
  decompose
      ->add_option("--indices", st.indices, "sample columns to export")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  decompose->add_flag(
      "--no-normalize",
      [&st](std::int64_t) { st.cfg.normalize = false; },
      "decompose raw instead of L2-normalized columns");
  add_outdir_option(decompose, st);
  decompose->callback([&st] { run_decompose(st); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const dtml::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const dtml::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
