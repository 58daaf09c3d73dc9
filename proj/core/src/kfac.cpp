#include "amckfac/kfac.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace amckfac {

namespace {

Matrix second_moment(const Matrix& rows) {
  const double inv_n = 1.0 / static_cast<double>(rows.rows());
  return inv_n * (rows.transposed() * rows);
}

// Exact digital counterpart of precondition_update, used as the per-step
// fidelity oracle (and as the solver for kfac-exact runs).
Matrix exact_precondition(const Matrix& grad_w, const Matrix& a_factor,
                          const Matrix& g_factor, double alpha, double beta) {
  const Matrix u =
      cholesky_solve(add_scaled_identity(g_factor, beta), grad_w);
  return cholesky_solve(add_scaled_identity(a_factor, alpha), u.transposed())
      .transposed();
}

double safe_rel_err(const Vector& got, const Vector& want) {
  if (norm2(want) == 0.0) return norm2(got) == 0.0 ? 0.0 : 1.0;
  return relative_error(got, want);
}

double matrix_rel_err(const Matrix& got, const Matrix& want) {
  return safe_rel_err(vectorize(got), vectorize(want));
}

}  // namespace

std::pair<Matrix, Matrix> fc_factors(const Matrix& activations,
                                     const Matrix& preact_grads) {
  if (activations.rows() == 0 || activations.rows() != preact_grads.rows())
    throw ContractViolation("fc_factors: empty batch or row mismatch");
  return {second_moment(activations), second_moment(preact_grads)};
}

std::pair<Matrix, Matrix> conv_factors(const Matrix& patches,
                                       const Matrix& out_grads) {
  if (patches.rows() == 0 || patches.rows() != out_grads.rows())
    throw ContractViolation("conv_factors: row count mismatch");
  return {second_moment(patches), second_moment(out_grads)};
}

std::pair<double, double> compute_damping(const Matrix& a, const Matrix& g,
                                          double lambda) {
  if (!(lambda > 0.0)) throw ContractViolation("compute_damping: lambda <= 0");
  const double tr_a = trace(a) / static_cast<double>(a.rows());
  const double tr_g = trace(g) / static_cast<double>(g.rows());
  double pi = 1.0;
  if (tr_g <= 0.0 || tr_a <= 0.0) {
    std::cerr << "[kfac] warning: degenerate factor trace, damping with pi=1\n";
  } else {
    pi = std::clamp(std::sqrt(tr_a / tr_g), 1e-3, 1e3);
  }
  const double root = std::sqrt(lambda);
  return {pi * root, root / pi};
}

KfacStepReport kfac_step(Model& model, const Matrix& images,
                         const std::vector<int>& labels,
                         const KfacConfig& cfg, SolveContext& ctx,
                         bool exact_solver) {
  if (images.rows() == 0) throw ContractViolation("kfac_step: empty batch");

  const LayerTape tape = forward(model, images);
  const Gradients grads = backward(model, tape, labels);

  KfacStepReport report;
  report.loss_before = batch_loss(tape, labels);

  auto [a_conv, g_conv] = conv_factors(tape.patches, grads.conv_preact_grads);
  auto [a_fc, g_fc] = fc_factors(tape.fc_input, grads.logit_grads);
  auto [alpha_conv, beta_conv] = compute_damping(a_conv, g_conv, cfg.damping);
  auto [alpha_fc, beta_fc] = compute_damping(a_fc, g_fc, cfg.damping);

  // Bias gradients are a separate 1-dimensional input factor: the A side is
  // the scalar 1, damped to (1 + alpha).
  auto bias_update = [&](const Vector& grad_b, const Matrix& g, double alpha,
                         double beta, const char* stage) -> Vector {
    const Matrix damped = add_scaled_identity(g, beta);
    Matrix rhs(grad_b.size(), 1, grad_b);
    Matrix u;
    if (exact_solver) {
      u = cholesky_solve(damped, rhs);
    } else {
      try {
        u = block_solve(damped, rhs, ctx);
      } catch (SolveError& e) {
        throw SolveError(std::string(stage) + " bias: " + e.what());
      }
    }
    Vector out = u.column(0);
    for (double& v : out) v /= (1.0 + alpha);
    return out;
  };

  Matrix upd_conv_w, upd_fc_w;
  if (exact_solver) {
    upd_conv_w = exact_precondition(grads.params.conv_w, a_conv, g_conv,
                                    alpha_conv, beta_conv);
    upd_fc_w =
        exact_precondition(grads.params.fc_w, a_fc, g_fc, alpha_fc, beta_fc);
  } else {
    try {
      upd_conv_w = precondition_update(grads.params.conv_w, a_conv, g_conv,
                                       alpha_conv, beta_conv, ctx);
    } catch (SolveError& e) {
      throw SolveError(std::string("conv layer: ") + e.what());
    }
    try {
      upd_fc_w = precondition_update(grads.params.fc_w, a_fc, g_fc, alpha_fc,
                                     beta_fc, ctx);
    } catch (SolveError& e) {
      throw SolveError(std::string("fc layer: ") + e.what());
    }
  }
  const Vector upd_conv_b = bias_update(grads.params.conv_b, g_conv,
                                        alpha_conv, beta_conv, "conv layer");
  const Vector upd_fc_b =
      bias_update(grads.params.fc_b, g_fc, alpha_fc, beta_fc, "fc layer");

  // Fidelity vs the exact digital oracle.
  {
    const Matrix oracle_conv_w = exact_precondition(
        grads.params.conv_w, a_conv, g_conv, alpha_conv, beta_conv);
    const Matrix oracle_fc_w =
        exact_precondition(grads.params.fc_w, a_fc, g_fc, alpha_fc, beta_fc);
    Vector oracle_conv_b = cholesky_solve(
        add_scaled_identity(g_conv, beta_conv), grads.params.conv_b);
    for (double& v : oracle_conv_b) v /= (1.0 + alpha_conv);
    Vector oracle_fc_b =
        cholesky_solve(add_scaled_identity(g_fc, beta_fc), grads.params.fc_b);
    for (double& v : oracle_fc_b) v /= (1.0 + alpha_fc);

    report.rel_err_conv_w = matrix_rel_err(upd_conv_w, oracle_conv_w);
    report.rel_err_conv_b = safe_rel_err(upd_conv_b, oracle_conv_b);
    report.rel_err_fc_w = matrix_rel_err(upd_fc_w, oracle_fc_w);
    report.rel_err_fc_b = safe_rel_err(upd_fc_b, oracle_fc_b);
    report.mean_rel_err =
        (report.rel_err_conv_w + report.rel_err_conv_b + report.rel_err_fc_w +
         report.rel_err_fc_b) /
        4.0;
  }

  const double lr = cfg.learning_rate;
  for (std::size_t i = 0; i < model.conv_w.size(); ++i)
    model.conv_w.data()[i] -= lr * upd_conv_w.data()[i];
  for (std::size_t i = 0; i < model.conv_b.size(); ++i)
    model.conv_b[i] -= lr * upd_conv_b[i];
  for (std::size_t i = 0; i < model.fc_w.size(); ++i)
    model.fc_w.data()[i] -= lr * upd_fc_w.data()[i];
  for (std::size_t i = 0; i < model.fc_b.size(); ++i)
    model.fc_b[i] -= lr * upd_fc_b[i];

  return report;
}

}  // namespace amckfac
