#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "amckfac/experiment.hpp"

namespace {

amckfac::ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return amckfac::ExperimentConfig{};
  return amckfac::ExperimentConfig::from_file(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analog in-memory KFAC training simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  app.add_option("--config", config_path, "experiment config file (ini)");
  app.add_option("--out", out_dir, "output directory");

  auto* train = app.add_subcommand("train", "run a training experiment");
  train->fallthrough();
  std::string optimizer;
  std::int64_t seed = -1;
  bool synthetic = false;
  std::string images_path, labels_path;
  train->add_option("--optimizer", optimizer,
                    "kfac-amc|kfac-exact|sgdm|adam (overrides config)");
  train->add_option("--seed", seed, "random seed (overrides config)");
  train->add_flag("--synthetic", synthetic, "use the synthetic blob dataset");
  train->add_option("--images", images_path, "EMNIST IDX image file");
  train->add_option("--labels", labels_path, "EMNIST IDX label file");

  auto* solve = app.add_subcommand("solve", "invert/solve a matrix from file");
  solve->fallthrough();
  std::string matrix_file, rhs_file;
  int bits = 24;
  solve->add_option("--matrix", matrix_file, "matrix file (rows cols + data)")
      ->required();
  solve->add_option("--rhs", rhs_file, "right-hand side file")->required();
  solve->add_option("--bits", bits, "fixed-point precision target");

  auto* calibrate =
      app.add_subcommand("calibrate", "measure solver error statistics");
  calibrate->fallthrough();
  int trials = 1000;
  calibrate->add_option("--trials", trials, "number of leaf-solve trials");

  CLI11_PARSE(app, argc, argv);

  try {
    amckfac::ExperimentConfig cfg = load_config(config_path);

    if (*train) {
      if (!optimizer.empty()) cfg.train.optimizer = optimizer;
      if (seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed);
      if (synthetic) cfg.train.synthetic = true;
      if (!images_path.empty()) cfg.data.images = images_path;
      if (!labels_path.empty()) cfg.data.labels = labels_path;

      auto [train_set, test_set] = amckfac::load_dataset(cfg);
      const amckfac::RunOutput out =
          amckfac::run_training(cfg, train_set, test_set);
      amckfac::emit_metrics(out, out_dir);
      if (out.record.aborted) {
        std::cerr << "training aborted: " << out.record.abort_reason
                  << "\npartial record written to " << out_dir << "\n";
        return 2;
      }
      std::cout << "optimizer=" << out.record.optimizer
                << " epochs=" << out.record.rows.size()
                << " final_train_acc=" << out.record.rows.back().train_acc
                << " final_test_acc=" << out.record.final_test_acc
                << " epochs_to_100=" << out.record.epochs_to_full_train_acc
                << "\nwrote metrics.csv, summary.json, features.csv to "
                << out_dir << "\n";
    } else if (*solve) {
      const amckfac::SolveReport report =
          amckfac::run_solve(matrix_file, rhs_file, bits, cfg, out_dir);
      std::cout << "relative_residual=" << report.relative_residual
                << " leaf_solves=" << report.stats.leaf_solves
                << " mean_iters=" << report.stats.mean_iterations
                << "\npartition: " << report.partition
                << "\nwrote solution.txt, solve_report.json to " << out_dir
                << "\n";
    } else if (*calibrate) {
      const amckfac::CalibrationReport report =
          amckfac::run_calibrate(cfg, trials);
      amckfac::write_calibration_json(report, out_dir);
      std::cout << "trials=" << report.trials
                << " lp_error_mean=" << report.lp_error_mean
                << " hp_iterations_mean=" << report.hp_iterations_mean
                << " hp_final_error_mean=" << report.hp_final_error_mean
                << " converged_fraction=" << report.converged_fraction
                << "\nwrote calibration.json to " << out_dir << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
