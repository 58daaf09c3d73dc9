#pragma once

#include <cmath>

#include "amckfac/errors.hpp"

namespace amckfac {

// Two's-complement fixed point over [-1, 1), total_bits includes the sign.
struct FixedPointSpec {
  int total_bits = 24;

  double tolerance() const { return std::ldexp(1.0, -(total_bits - 1)); }

  void validate() const {
    if (total_bits < 2)
      throw ContractViolation("FixedPointSpec requires total_bits >= 2");
  }
};

// Nearest representable value, round-half-to-even. Inputs outside the
// representable range saturate and set *saturated when provided.
double quantize_fixed(double x, const FixedPointSpec& spec,
                      bool* saturated = nullptr);

}  // namespace amckfac
