#pragma once

#include "amckfac/config.hpp"
#include "amckfac/dataset.hpp"

namespace amckfac {

inline constexpr const char* kVersionString = "amckfac 0.1.0";

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double mean_update_rel_err = 0.0;
  std::int64_t lp_vector_outputs = 0;  // cumulative
  std::int64_t hp_solves = 0;          // cumulative
  double mean_refinement_iters = 0.0;  // cumulative mean
  int spec_bits = 0;                   // precision target in force
};

struct TrainRecord {
  std::string optimizer;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = kVersionString;
  std::vector<EpochRow> rows;
  int epochs_to_full_train_acc = -1;  // first epoch at 100% train accuracy
  double final_test_acc = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

struct RunOutput {
  TrainRecord record;
  Model model;
  Matrix test_features;  // one row per test sample, 36 columns
  std::vector<int> test_labels;
  SolveStatistics solver_stats;
};

// Loads EMNIST per config, or the synthetic fallback when train.synthetic.
std::pair<LabeledImages, LabeledImages> load_dataset(
    const ExperimentConfig& cfg);

// Full training run of the configured optimizer. Solver failures mark the
// record aborted (partial rows preserved) instead of propagating.
RunOutput run_training(const ExperimentConfig& cfg, const LabeledImages& train,
                       const LabeledImages& test);

// metrics.csv + summary.json + features.csv in out_dir.
void emit_metrics(const RunOutput& out, const std::string& out_dir);

// Text matrix format: first line "rows cols", then row-major values.
Matrix read_matrix_file(const std::string& path);
void write_matrix_file(const Matrix& m, const std::string& path);

struct SolveReport {
  double relative_residual = 0.0;  // ||AX - B||_F / ||B||_F
  std::string partition;
  SolveStatistics stats;
};

// CLI-facing block_solve on matrices from files; writes <out_dir>/solution.txt
// and <out_dir>/solve_report.json.
SolveReport run_solve(const std::string& matrix_file,
                      const std::string& rhs_file, int bits,
                      const ExperimentConfig& cfg, const std::string& out_dir);

struct CalibrationReport {
  int trials = 0;
  double lp_error_mean = 0.0;
  double lp_error_p50 = 0.0;
  double lp_error_p90 = 0.0;
  double hp_iterations_mean = 0.0;
  double hp_iterations_p50 = 0.0;
  double hp_iterations_p90 = 0.0;
  double hp_final_error_mean = 0.0;  // converged solves only
  double converged_fraction = 0.0;
};

// Samples leaf systems from the KFAC training workload, then measures the
// one-shot analog error and the refinement iteration count per system.
CalibrationReport run_calibrate(const ExperimentConfig& cfg, int trials);

void write_calibration_json(const CalibrationReport& report,
                            const std::string& out_dir);

struct SweepResult {
  double best_lr = 0.0;
  double best_momentum = 0.0;  // sgdm only
  std::vector<int> epochs_per_seed;
  int median_epochs = -1;  // -1 when 100% never reached
};

// Grid sweep for a baseline optimizer: picks the cell with the fewest median
// epochs-to-100%-train-accuracy over the given seeds.
SweepResult sweep_baseline(const ExperimentConfig& cfg,
                           const std::string& optimizer,
                           const std::vector<std::uint64_t>& seeds);

}  // namespace amckfac
