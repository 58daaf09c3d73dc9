#pragma once

#include <cstdint>
#include <random>

#include "amckfac/linalg.hpp"

namespace amckfac {

// 1T1R RRAM crossbar model parameters. Conductances in microsiemens.
struct DeviceConfig {
  double g_min = 20.0;
  double g_max = 220.0;
  double g_unit = 100.0;          // reference conductance G_0
  double write_tolerance = 10.0;  // write-verify acceptance band
  double off_leak_max = 2.0;      // residual conductance of off cells
  double read_noise_sigma = 0.0;  // per-read Gaussian noise, off by default
  int leaf_max = 4;               // largest signed matrix one array holds

  void validate() const;
};

// Per-cell target conductances after signed splitting A = A_pos - A_neg.
// Reconstruction: A = scale * (pos - neg) / g_unit.
struct ConductanceTargets {
  Matrix pos;
  Matrix neg;
  double scale = 1.0;  // matrix units per G_0
};

// A programmed (noisy) crossbar instance.
struct CrossbarState {
  Matrix programmed_pos;
  Matrix programmed_neg;
  ConductanceTargets targets;
  std::uint64_t rng_seed_used = 0;
};

// Map a signed matrix to on/off conductance targets. The largest magnitude
// maps to g_max; nonzero entries below g_min clamp up to g_min.
ConductanceTargets split_and_scale(const Matrix& a, const DeviceConfig& cfg);

// Write-verify programming: on-cells land uniformly within +-write_tolerance
// of target, off-cells leak uniformly in [0, off_leak_max].
CrossbarState program_crossbar(const ConductanceTargets& targets,
                               const DeviceConfig& cfg, std::uint64_t seed);

// Matrix the analog circuit actually embodies. Read noise (if enabled) is
// drawn fresh on every call.
Matrix effective_matrix(const CrossbarState& state, const DeviceConfig& cfg,
                        std::mt19937_64& rng);

}  // namespace amckfac
