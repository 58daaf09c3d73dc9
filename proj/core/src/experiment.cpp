#include "amckfac/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace amckfac {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double idx = p * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = idx - lo;
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

// Seeds for independent sub-streams are derived from the master seed by a
// fixed counter scheme.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < src.cols(); ++j) out(i, j) = src(idx[i], j);
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec && !std::filesystem::is_directory(dir))
    throw std::runtime_error("cannot create output directory: " + dir);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write: " + path);
  return out;
}

}  // namespace

std::pair<LabeledImages, LabeledImages> load_dataset(
    const ExperimentConfig& cfg) {
  if (cfg.train.synthetic || cfg.data.images.empty()) {
    LabeledImages train = synthetic_blobs(cfg.train.per_class_train,
                                          derive_seed(cfg.train.seed, 100),
                                          cfg.train.synthetic_noise);
    train.split = "train";
    LabeledImages test = synthetic_blobs(cfg.train.per_class_test,
                                         derive_seed(cfg.train.seed, 101),
                                         cfg.train.synthetic_noise);
    test.split = "test";
    return {std::move(train), std::move(test)};
  }
  const RawIdx raw = load_idx(cfg.data.images, cfg.data.labels);
  return build_split(raw, cfg.train.per_class_train, cfg.train.per_class_test,
                     derive_seed(cfg.train.seed, 102));
}

RunOutput run_training(const ExperimentConfig& cfg, const LabeledImages& train,
                       const LabeledImages& test) {
  const std::string& opt = cfg.train.optimizer;
  const bool is_kfac = opt == "kfac-amc" || opt == "kfac-exact";
  if (!is_kfac && opt != "sgdm" && opt != "adam")
    throw ContractViolation("unknown optimizer: " + opt);

  const int epochs = is_kfac ? cfg.train.epochs : cfg.train.baseline_epochs;
  const std::size_t n_train = train.images.rows();
  const std::size_t batch = static_cast<std::size_t>(cfg.train.batch_size);
  if (n_train % batch != 0)
    throw ContractViolation("batch_size must divide the train-set size");

  RunOutput out;
  out.record.optimizer = opt;
  out.record.config_hash = cfg.hash();
  out.record.seed = cfg.train.seed;
  out.model = Model::init(cfg.train.seed);

  SolveContext ctx;
  ctx.device = cfg.device;
  ctx.converters = cfg.converters;
  ctx.max_iters = cfg.max_iters;
  ctx.rng.seed(derive_seed(cfg.train.seed, 1));

  std::mt19937_64 shuffle_rng(derive_seed(cfg.train.seed, 2));
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  SgdmState sgdm_state;
  AdamState adam_state;

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const int bits =
        cfg.bits_for_epoch(std::min(epoch, cfg.train.epochs));
    ctx.spec = FixedPointSpec{bits};
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_rel_err = 0.0;
    int steps = 0;
    try {
      for (std::size_t start = 0; start < n_train; start += batch) {
        std::vector<std::size_t> idx(order.begin() + start,
                                     order.begin() + start + batch);
        const Matrix images = gather_rows(train.images, idx);
        std::vector<int> labels(batch);
        for (std::size_t i = 0; i < batch; ++i)
          labels[i] = train.labels[idx[i]];

        if (is_kfac) {
          const KfacStepReport rep = kfac_step(out.model, images, labels,
                                               cfg.kfac, ctx,
                                               opt == "kfac-exact");
          epoch_rel_err += rep.mean_rel_err;
        } else {
          const LayerTape tape = forward(out.model, images);
          const Gradients grads = backward(out.model, tape, labels);
          if (opt == "sgdm") {
            sgd_m_step(out.model, grads.params, cfg.train.sgdm_lr,
                       cfg.train.sgdm_momentum, sgdm_state);
          } else {
            adam_step(out.model, grads.params, cfg.train.adam_lr, 0.9, 0.999,
                      1e-8, adam_state);
          }
        }
        ++steps;
      }
    } catch (const SolveError& e) {
      out.record.aborted = true;
      out.record.abort_reason = "epoch " + std::to_string(epoch) + " step " +
                                std::to_string(steps + 1) + ": " + e.what();
      break;
    }

    const EvalResult train_eval =
        evaluate(out.model, train.images, train.labels);
    const EvalResult test_eval = evaluate(out.model, test.images, test.labels);
    const SolveStatistics stats = solve_statistics(ctx);

    EpochRow row;
    row.epoch = epoch;
    row.train_loss = train_eval.loss;
    row.train_acc = train_eval.accuracy;
    row.test_acc = test_eval.accuracy;
    row.mean_update_rel_err = steps > 0 ? epoch_rel_err / steps : 0.0;
    row.lp_vector_outputs = stats.lp_vector_outputs;
    row.hp_solves = stats.leaf_solves;
    row.mean_refinement_iters = stats.mean_iterations;
    row.spec_bits = bits;
    out.record.rows.push_back(row);

    if (out.record.epochs_to_full_train_acc < 0 && train_eval.accuracy >= 1.0)
      out.record.epochs_to_full_train_acc = epoch;
  }

  const EvalResult final_eval = evaluate(out.model, test.images, test.labels);
  out.record.final_test_acc = final_eval.accuracy;
  out.test_features = final_eval.features;
  out.test_labels = test.labels;
  out.solver_stats = solve_statistics(ctx);
  return out;
}

void emit_metrics(const RunOutput& out, const std::string& out_dir) {
  if (out.record.rows.empty() && !out.record.aborted)
    throw ContractViolation("emit_metrics: empty record");
  ensure_dir(out_dir);

  {
    auto csv = open_out(out_dir + "/metrics.csv");
    csv << "epoch,train_loss,train_acc,test_acc,mean_update_rel_err,"
           "lp_vector_outputs,hp_solves,mean_refinement_iters\n";
    for (const EpochRow& r : out.record.rows) {
      csv << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.train_acc)
          << ',' << fmt(r.test_acc) << ',' << fmt(r.mean_update_rel_err)
          << ',' << r.lp_vector_outputs << ',' << r.hp_solves << ','
          << fmt(r.mean_refinement_iters) << '\n';
    }
  }

  {
    json j;
    j["optimizer"] = out.record.optimizer;
    j["config_hash"] = out.record.config_hash;
    j["seed"] = out.record.seed;
    j["version"] = out.record.version;
    j["epochs_completed"] = out.record.rows.size();
    j["epochs_to_full_train_acc"] = out.record.epochs_to_full_train_acc;
    j["final_test_acc"] = out.record.final_test_acc;
    j["aborted"] = out.record.aborted;
    if (out.record.aborted) j["abort_reason"] = out.record.abort_reason;
    if (!out.record.rows.empty()) {
      const EpochRow& last = out.record.rows.back();
      j["final_train_loss"] = last.train_loss;
      j["final_train_acc"] = last.train_acc;
      double rel_sum = 0.0;
      for (const EpochRow& r : out.record.rows) rel_sum += r.mean_update_rel_err;
      j["mean_update_rel_err"] = rel_sum / out.record.rows.size();
    }
    j["lp_vector_outputs"] = out.solver_stats.lp_vector_outputs;
    j["hp_solves"] = out.solver_stats.leaf_solves;
    j["mean_refinement_iters"] = out.solver_stats.mean_iterations;
    j["crossbar_programs"] = out.solver_stats.crossbar_programs;
    auto jf = open_out(out_dir + "/summary.json");
    jf << j.dump(2) << '\n';
  }

  {
    auto fcsv = open_out(out_dir + "/features.csv");
    fcsv << "sample_id,label";
    for (std::size_t f = 0; f < 36; ++f) fcsv << ",f" << f;
    fcsv << '\n';
    for (std::size_t i = 0; i < out.test_features.rows(); ++i) {
      fcsv << i << ',' << out.test_labels[i];
      for (std::size_t f = 0; f < out.test_features.cols(); ++f)
        fcsv << ',' << fmt(out.test_features(i, f));
      fcsv << '\n';
    }
  }
}

Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix file: " + path);
  long long rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1)
    throw ParseError(path + ": expected 'rows cols' header");
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!(in >> m.data()[i]))
      throw ParseError(path + ": expected " + std::to_string(m.size()) +
                       " values, stream ended at " + std::to_string(i));
  }
  double extra;
  if (in >> extra) throw ParseError(path + ": trailing values after matrix");
  return m;
}

void write_matrix_file(const Matrix& m, const std::string& path) {
  auto out = open_out(path);
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf;
    }
    out << '\n';
  }
}

SolveReport run_solve(const std::string& matrix_file,
                      const std::string& rhs_file, int bits,
                      const ExperimentConfig& cfg, const std::string& out_dir) {
  const Matrix a = read_matrix_file(matrix_file);
  if (a.rows() != a.cols())
    throw ParseError(matrix_file + ": matrix must be square, got " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  const Matrix b = read_matrix_file(rhs_file);
  if (b.rows() != a.rows())
    throw ParseError(rhs_file + ": right-hand side rows do not match matrix");

  SolveContext ctx;
  ctx.device = cfg.device;
  ctx.converters = cfg.converters;
  ctx.spec = FixedPointSpec{bits};
  ctx.max_iters = cfg.max_iters;
  ctx.rng.seed(derive_seed(cfg.train.seed, 3));

  const Matrix x = block_solve(a, b, ctx);

  SolveReport report;
  report.relative_residual = norm_fro(a * x - b) / norm_fro(b);
  report.partition = render_partition(
      partition_plan(a.rows(), static_cast<std::size_t>(cfg.device.leaf_max)));
  report.stats = solve_statistics(ctx);

  ensure_dir(out_dir);
  write_matrix_file(x, out_dir + "/solution.txt");
  json j;
  j["relative_residual"] = report.relative_residual;
  j["partition"] = report.partition;
  j["bits"] = bits;
  j["leaf_solves"] = report.stats.leaf_solves;
  j["lp_vector_outputs"] = report.stats.lp_vector_outputs;
  j["mean_refinement_iters"] = report.stats.mean_iterations;
  j["crossbar_programs"] = report.stats.crossbar_programs;
  auto jf = open_out(out_dir + "/solve_report.json");
  jf << j.dump(2) << '\n';
  return report;
}

CalibrationReport run_calibrate(const ExperimentConfig& cfg, int trials) {
  if (trials < 100)
    throw ContractViolation("run_calibrate: need at least 100 trials");

  // Harvest leaf systems from a short kfac-amc training run.
  ExperimentConfig probe_cfg = cfg;
  probe_cfg.train.optimizer = "kfac-amc";
  auto [train, test] = load_dataset(probe_cfg);

  std::vector<std::pair<Matrix, Vector>> systems;
  {
    SolveContext ctx;
    ctx.device = cfg.device;
    ctx.converters = cfg.converters;
    ctx.spec = FixedPointSpec{cfg.bits_for_epoch(1)};
    ctx.max_iters = cfg.max_iters;
    ctx.rng.seed(derive_seed(cfg.train.seed, 4));
    ctx.leaf_recorder = [&](const Matrix& a, const Vector& b) {
      if (systems.size() < static_cast<std::size_t>(trials))
        systems.emplace_back(a, b);
    };

    Model model = Model::init(cfg.train.seed);
    std::mt19937_64 shuffle_rng(derive_seed(cfg.train.seed, 5));
    std::vector<std::size_t> order(train.images.rows());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = static_cast<std::size_t>(cfg.train.batch_size);
    for (int step = 0; step < 50; ++step) {
      if (systems.size() >= static_cast<std::size_t>(trials)) break;
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      std::vector<std::size_t> idx(order.begin(), order.begin() + batch);
      const Matrix images = gather_rows(train.images, idx);
      std::vector<int> labels(batch);
      for (std::size_t i = 0; i < batch; ++i) labels[i] = train.labels[idx[i]];
      try {
        kfac_step(model, images, labels, cfg.kfac, ctx, false);
      } catch (const SolveError&) {
        break;  // keep whatever systems were recorded
      }
    }
  }
  if (systems.empty())
    throw SolveError("calibration failed to record any leaf systems");

  CalibrationReport report;
  report.trials = trials;
  std::vector<double> lp_errors, iters, final_errors;
  int converged = 0;
  const FixedPointSpec spec{cfg.bits_for_epoch(1)};

  for (int t = 0; t < trials; ++t) {
    const auto& [a, b] = systems[t % systems.size()];
    std::mt19937_64 rng(derive_seed(cfg.train.seed, 1000 + t));
    const CrossbarState state =
        program_crossbar(split_and_scale(a, cfg.device), cfg.device, rng());
    const Vector exact = gauss_solve(a, b);

    const Vector x_lp = amc_solve(state, b, cfg.device, cfg.converters, rng).x;
    lp_errors.push_back(relative_error(x_lp, exact));

    try {
      auto [x, rep] = hp_solve(a, b, state, spec, cfg.max_iters, cfg.device,
                               cfg.converters, rng);
      iters.push_back(rep.iterations);
      final_errors.push_back(relative_error(x, exact));
      ++converged;
    } catch (const NonConvergenceError& e) {
      iters.push_back(e.report.iterations);
    } catch (const SolveError&) {
      iters.push_back(cfg.max_iters);
    }
  }

  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0
                     : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  };
  report.lp_error_mean = mean(lp_errors);
  report.lp_error_p50 = percentile(lp_errors, 0.5);
  report.lp_error_p90 = percentile(lp_errors, 0.9);
  report.hp_iterations_mean = mean(iters);
  report.hp_iterations_p50 = percentile(iters, 0.5);
  report.hp_iterations_p90 = percentile(iters, 0.9);
  report.hp_final_error_mean = mean(final_errors);
  report.converged_fraction = static_cast<double>(converged) / trials;
  return report;
}

void write_calibration_json(const CalibrationReport& r,
                            const std::string& out_dir) {
  ensure_dir(out_dir);
  json j;
  j["trials"] = r.trials;
  j["lp_error"] = {{"mean", r.lp_error_mean},
                   {"p50", r.lp_error_p50},
                   {"p90", r.lp_error_p90}};
  j["hp_iterations"] = {{"mean", r.hp_iterations_mean},
                        {"p50", r.hp_iterations_p50},
                        {"p90", r.hp_iterations_p90}};
  j["hp_final_error_mean"] = r.hp_final_error_mean;
  j["converged_fraction"] = r.converged_fraction;
  auto out = open_out(out_dir + "/calibration.json");
  out << j.dump(2) << '\n';
}

SweepResult sweep_baseline(const ExperimentConfig& cfg,
                           const std::string& optimizer,
                           const std::vector<std::uint64_t>& seeds) {
  if (optimizer != "sgdm" && optimizer != "adam")
    throw ContractViolation("sweep_baseline: optimizer must be sgdm or adam");

  const std::vector<double> lr_grid =
      optimizer == "sgdm" ? cfg.train.sgdm_lr_grid : cfg.train.adam_lr_grid;
  const std::vector<double> mom_grid =
      optimizer == "sgdm" ? cfg.train.sgdm_momentum_grid
                          : std::vector<double>{0.0};

  auto median_of = [&](std::vector<int> epochs) {
    // never-converged runs sort to the end
    for (int& e : epochs)
      if (e < 0) e = cfg.train.baseline_epochs + 1;
    std::sort(epochs.begin(), epochs.end());
    const int med = epochs[epochs.size() / 2];
    return med > cfg.train.baseline_epochs ? -1 : med;
  };

  SweepResult best;
  int best_median = cfg.train.baseline_epochs + 2;
  for (double lr : lr_grid) {
    for (double mom : mom_grid) {
      std::vector<int> epochs;
      for (std::uint64_t seed : seeds) {
        ExperimentConfig run_cfg = cfg;
        run_cfg.train.optimizer = optimizer;
        run_cfg.train.seed = seed;
        if (optimizer == "sgdm") {
          run_cfg.train.sgdm_lr = lr;
          run_cfg.train.sgdm_momentum = mom;
        } else {
          run_cfg.train.adam_lr = lr;
        }
        auto [train, test] = load_dataset(run_cfg);
        const RunOutput out = run_training(run_cfg, train, test);
        epochs.push_back(out.record.epochs_to_full_train_acc);
      }
      const int med = median_of(epochs);
      const int rank = med < 0 ? cfg.train.baseline_epochs + 1 : med;
      if (rank < best_median) {
        best_median = rank;
        best.best_lr = lr;
        best.best_momentum = mom;
        best.epochs_per_seed = epochs;
        best.median_epochs = med;
      }
    }
  }
  return best;
}

}  // namespace amckfac
