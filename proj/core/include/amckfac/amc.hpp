#pragma once

#include "amckfac/device.hpp"
#include "amckfac/quant.hpp"

namespace amckfac {

// DAC/ADC resolutions of the analog front end.
struct ConverterConfig {
  int dac_bits = 8;
  int adc_bits = 6;
  double full_scale = 1.0;

  void validate() const {
    if (dac_bits < 2 || adc_bits < 2)
      throw ContractViolation("ConverterConfig: converter bits must be >= 2");
    if (full_scale <= 0.0)
      throw ContractViolation("ConverterConfig: full_scale must be positive");
  }
};

// OA output headroom relative to the input full scale.
inline constexpr double kOutputHeadroom = 10.0;

struct AmcResult {
  Vector x;
  bool saturated = false;
};

// One-shot analog solve of A x = b. The feedback loop settles to the exact
// solution of the *noisy* effective matrix; DAC quantizes the scaled input,
// ADC quantizes the clipped output.
AmcResult amc_solve(const CrossbarState& state, const Vector& b,
                    const DeviceConfig& dev, const ConverterConfig& conv,
                    std::mt19937_64& rng);

}  // namespace amckfac
