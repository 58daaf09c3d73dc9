#pragma once

#include "amckfac/block_amc.hpp"
#include "amckfac/nn.hpp"

namespace amckfac {

// Per-layer Kronecker factor bundle with its damping split.
struct KroneckerFactors {
  Matrix a_factor;
  Matrix g_factor;
  double alpha = 0.0;
  double beta = 0.0;
};

struct KfacConfig {
  double damping = 3e-2;      // lambda, split into alpha * beta
  double learning_rate = 0.1;
};

// Empirical Fisher factors for a fully connected layer:
// A = (1/B) sum a a^T over activations, G = (1/B) sum g g^T over
// per-sample pre-activation gradients.
std::pair<Matrix, Matrix> fc_factors(const Matrix& activations,
                                     const Matrix& preact_grads);

// Convolutional layer: factors averaged over all B*T patch positions.
std::pair<Matrix, Matrix> conv_factors(const Matrix& patches,
                                       const Matrix& out_grads);

// Factored Tikhonov split: alpha = pi sqrt(lambda), beta = sqrt(lambda)/pi
// with pi the trace-ratio rebalancer clamped to [1e-3, 1e3].
std::pair<double, double> compute_damping(const Matrix& a, const Matrix& g,
                                          double lambda);

struct KfacStepReport {
  // relative error of each update vector vs the exact digital oracle
  double rel_err_conv_w = 0.0;
  double rel_err_conv_b = 0.0;
  double rel_err_fc_w = 0.0;
  double rel_err_fc_b = 0.0;
  double mean_rel_err = 0.0;
  double loss_before = 0.0;
};

// One KFAC update: digital forward/backward, factor construction, analog
// (or exact, when exact_solver) preconditioning, parameter update.
KfacStepReport kfac_step(Model& model, const Matrix& images,
                         const std::vector<int>& labels,
                         const KfacConfig& cfg, SolveContext& ctx,
                         bool exact_solver = false);

}  // namespace amckfac
