#include "amckfac/hp_inv.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace amckfac {

std::pair<Vector, RefinementReport> hp_solve(
    const Matrix& a, const Vector& b, const CrossbarState& state,
    const FixedPointSpec& spec, int max_iters, const DeviceConfig& dev,
    const ConverterConfig& conv, std::mt19937_64& rng) {
  spec.validate();
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw ContractViolation("hp_solve dimension mismatch");
  if (max_iters < 1) throw ContractViolation("hp_solve: max_iters < 1");
  const double b_norm = norm_inf(b);
  if (b_norm == 0.0)
    throw ContractViolation("hp_solve: right-hand side is all zero");
  const double tol = spec.tolerance();

  Vector x(b.size(), 0.0);
  Vector r = b;
  RefinementReport report;
  double min_res = std::numeric_limits<double>::infinity();
  int rising = 0;

  for (int it = 1; it <= max_iters; ++it) {
    const Vector z = amc_solve(state, r, dev, conv, rng).x;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += z[i];

    const Vector ax = mvm(a, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - ax[i];
    const double rel = norm_inf(r) / b_norm;
    report.residual_history.push_back(rel);
    report.iterations = it;
    report.final_residual = rel;

    if (rel <= tol) {
      report.converged = true;
      return {std::move(x), std::move(report)};
    }

    if (it > 1 && rel > report.residual_history[it - 2]) {
      ++rising;
    } else {
      rising = 0;
    }
    min_res = std::min(min_res, rel);
    // Two triggers: a streak of growth well above the best residual seen, or
    // an outright blow-up (oscillating growth can keep resetting the streak).
    if ((rising >= 5 && rel > 10.0 * min_res) || rel > 1e3 * min_res) {
      // Estimate the contraction factor from the programmed matrix.
      std::ostringstream msg;
      std::mt19937_64 probe_rng(state.rng_seed_used);
      const Matrix eff = effective_matrix(state, dev, probe_rng);
      double rho = std::numeric_limits<double>::infinity();
      try {
        rho = norm_fro(Matrix::identity(a.rows()) - gauss_solve(eff, a));
      } catch (const SingularMatrixError&) {
      }
      msg << "hp_solve diverging after " << it
          << " iterations: residual " << rel << " vs minimum " << min_res
          << ", estimated ||I - inv(A~) A|| = " << rho;
      throw DivergenceError(msg.str());
    }
  }

  std::ostringstream msg;
  msg << "hp_solve did not reach 2^-(" << spec.total_bits
      << "-1) residual within " << max_iters
      << " iterations (final relative residual " << report.final_residual
      << ")";
  throw NonConvergenceError(msg.str(), std::move(report), std::move(x));
}

}  // namespace amckfac
