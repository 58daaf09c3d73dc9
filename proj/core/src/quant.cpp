#include "amckfac/quant.hpp"

#include <cmath>

namespace amckfac {

double quantize_fixed(double x, const FixedPointSpec& spec, bool* saturated) {
  spec.validate();
  if (!std::isfinite(x)) throw ContractViolation("quantize_fixed of non-finite");
  const double step = spec.tolerance();
  const double k_max = std::ldexp(1.0, spec.total_bits - 1) - 1.0;
  const double k_min = -std::ldexp(1.0, spec.total_bits - 1);
  // nearbyint rounds half to even under the default FP environment
  double k = std::nearbyint(x / step);
  bool sat = false;
  if (k > k_max) {
    k = k_max;
    sat = true;
  } else if (k < k_min) {
    k = k_min;
    sat = true;
  }
  if (saturated) *saturated = sat;
  return k * step;
}

}  // namespace amckfac
