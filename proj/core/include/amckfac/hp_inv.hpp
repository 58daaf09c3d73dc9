#pragma once

#include "amckfac/amc.hpp"

namespace amckfac {

struct RefinementReport {
  int iterations = 0;  // number of analog correction solves
  double final_residual = 0.0;  // relative infinity-norm residual
  std::vector<double> residual_history;
  bool converged = false;
};

// hp_solve ran out of iterations; carries the partial result.
class NonConvergenceError : public SolveError {
 public:
  NonConvergenceError(const std::string& msg, RefinementReport report,
                      Vector best_x)
      : SolveError(msg), report(std::move(report)), best_x(std::move(best_x)) {}

  RefinementReport report;
  Vector best_x;
};

// Iterative refinement: low-precision analog solves correcting a
// high-precision digital residual until the fixed-point target is met.
// The residual uses the true digital matrix A, never the noisy copy.
std::pair<Vector, RefinementReport> hp_solve(
    const Matrix& a, const Vector& b, const CrossbarState& state,
    const FixedPointSpec& spec, int max_iters, const DeviceConfig& dev,
    const ConverterConfig& conv, std::mt19937_64& rng);

}  // namespace amckfac
