#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dtml/datakit.hpp"
#include "dtml/pipeline.hpp"

namespace dtml {

struct SynthSpec {
  int classes = 5;
  int subspace_dim = 10;
  int ambient_dim = 50;
  int per_class = 20;
  double noise_fraction = 0.05;
  double spike_magnitude = 1.0;
  std::uint64_t seed = 42;
};

struct ExperimentConfig {
  std::string command;  // informational, recorded in the config snapshot

  // Dataset: CSV paths, or a synthetic spec when use_synth is set.
  std::string data_path;
  std::string labels_path;
  bool use_synth = false;
  SynthSpec synth;
  std::optional<std::pair<int, int>> image_shape;

  int train_per_class = 10;
  // Ablation column axis (one experiment per entry); empty means
  // {train_per_class}.
  std::vector<int> train_per_class_list;
  int repeats = 20;
  std::uint64_t seed_base = 0;

  double lambda1 = 1.0;
  double lambda2 = 0.1;
  double lambda3 = 0.1;
  double lambda4 = 0.1;

  Mode mode = Mode::Full;
  NnTarget nn_target = NnTarget::Gallery;
  bool normalize = true;
  SolverOptions latlrr;
  FitOptions dtml;

  // Output directory for report.csv / convergence.csv / summary.csv /
  // resolved_config.json; empty string = compute only, write nothing.
  std::string outdir;
};

struct RepeatRow {
  int repeat;
  std::uint64_t seed;
  int train_per_class;
  Mode mode;
  double accuracy;
  int iters_latlrr;
  int sweeps_dtml;
  double objective_final;
};

struct ConvergenceRow {
  int repeat;
  int sweep;
  double objective;
  double train_accuracy;  // leave-one-out NN over training embeddings
};

struct ExperimentReport {
  std::vector<RepeatRow> rows;
  std::vector<ConvergenceRow> convergence;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single repeat
  double wall_time_seconds = 0.0;
  ExperimentConfig config;  // resolved snapshot
};

// The default tuning candidates: {1e-5, 5e-5, ..., 5e2, 1e3}, 17 values.
std::vector<double> default_candidate_grid();

// One repeated-split experiment: for repeat r, split with seed_base + r,
// train, score on the held-out samples. Writes the CSV bundle into
// config.outdir unless it is empty.
ExperimentReport run_experiment(const ExperimentConfig& config);

struct AblationResult {
  std::vector<int> train_per_class;  // column axis of the comparison table
  // reports[t] holds the three variants at train_per_class[t], ordered
  // Full, SalientOnly, SharedSingle.
  std::vector<std::array<ExperimentReport, 3>> reports;
};

// The three model variants on identical splits (same seeds, same label
// vector, so the per-repeat index sets coincide), once per training-size
// column. Writes per-run report CSVs plus ablation_table.csv (mode rows x
// training-size columns of mean accuracy) when config.outdir is non-empty.
AblationResult run_ablation(const ExperimentConfig& config);

struct GridPoint {
  int stage;  // 1 = (lambda1, lambda2), 2 = (lambda3, lambda4)
  double lambda_a;
  double lambda_b;
  double score;
};

struct GridResult {
  std::vector<GridPoint> surface;
  double lambda1, lambda2, lambda3, lambda4;  // winning combination
};

// Two-stage tuning on a stratified holdout carved from each repeat's
// training split (20%, at least one sample per class). Stage 1 scans
// (lambda1, lambda2) scoring holdout accuracy of the full model at the
// config's (lambda3, lambda4); stage 2 freezes the winners, reuses one
// decomposition per repeat, and scans (lambda3, lambda4). Ties break to the
// earliest grid point. Writes grid_surface.csv + best_params.json when
// config.outdir is non-empty.
GridResult grid_search(const ExperimentConfig& config,
                       const std::vector<double>& grid);

// LatLRR the dataset and export per-sample PGM images of the original column
// and its three parts. Requires image_shape.
void decompose(const Dataset& data, double lambda1, double lambda2,
               const std::vector<int>& sample_indices,
               const std::string& outdir, bool normalize = true,
               const SolverOptions& opts = {});

// Materialize the configured dataset (CSV load or synthetic generation),
// applying the image-shape override if present.
Dataset load_configured_dataset(const ExperimentConfig& config);

std::string config_to_json(const ExperimentConfig& config);

void write_report_csv(const ExperimentReport& report, const std::string& path);
void write_convergence_csv(const ExperimentReport& report,
                           const std::string& path);
void write_summary_csv(const ExperimentReport& report, const std::string& path);
void write_grid_surface_csv(const GridResult& result, const std::string& path);

}  // namespace dtml
