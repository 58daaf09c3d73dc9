#include "amckfac/device.hpp"

#include <cmath>

namespace amckfac {

void DeviceConfig::validate() const {
  if (!(0.0 < g_min && g_min < g_max))
    throw ContractViolation("DeviceConfig: need 0 < g_min < g_max");
  if (!(0.0 <= write_tolerance && write_tolerance < g_min))
    throw ContractViolation("DeviceConfig: need 0 <= write_tolerance < g_min");
  if (!(0.0 <= off_leak_max && off_leak_max < g_min))
    throw ContractViolation("DeviceConfig: need 0 <= off_leak_max < g_min");
  if (!(g_min <= g_unit && g_unit <= g_max))
    throw ContractViolation("DeviceConfig: g_unit outside [g_min, g_max]");
  if (read_noise_sigma < 0.0)
    throw ContractViolation("DeviceConfig: negative read_noise_sigma");
  if (leaf_max < 1) throw ContractViolation("DeviceConfig: leaf_max < 1");
}

ConductanceTargets split_and_scale(const Matrix& a, const DeviceConfig& cfg) {
  cfg.validate();
  if (a.rows() != a.cols())
    throw ContractViolation("split_and_scale expects a square matrix");
  if (static_cast<int>(a.rows()) > cfg.leaf_max)
    throw ContractViolation("matrix larger than crossbar leaf_max");
  const double amax = norm_max(a);
  if (amax == 0.0)
    throw ContractViolation("all-zero matrix has no conductance mapping");

  const std::size_t m = a.rows();
  ConductanceTargets t{Matrix(m, m, 0.0), Matrix(m, m, 0.0),
                       amax * cfg.g_unit / cfg.g_max};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double v = a(i, j);
      if (v == 0.0) continue;
      double g = std::fabs(v) * cfg.g_max / amax;
      if (g < cfg.g_min) g = cfg.g_min;  // bounded mapping error, HP-INV corrects
      (v > 0.0 ? t.pos : t.neg)(i, j) = g;
    }
  }
  return t;
}

CrossbarState program_crossbar(const ConductanceTargets& targets,
                               const DeviceConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> write_err(-cfg.write_tolerance,
                                                   cfg.write_tolerance);
  std::uniform_real_distribution<double> leak(0.0, cfg.off_leak_max);

  auto program = [&](const Matrix& tgt) {
    Matrix out(tgt.rows(), tgt.cols(), 0.0);
    for (std::size_t i = 0; i < tgt.rows(); ++i) {
      for (std::size_t j = 0; j < tgt.cols(); ++j) {
        if (tgt(i, j) > 0.0) {
          out(i, j) = tgt(i, j) + (cfg.write_tolerance > 0.0 ? write_err(rng) : 0.0);
        } else {
          out(i, j) = cfg.off_leak_max > 0.0 ? leak(rng) : 0.0;
        }
      }
    }
    return out;
  };

  CrossbarState state;
  state.programmed_pos = program(targets.pos);
  state.programmed_neg = program(targets.neg);
  state.targets = targets;
  state.rng_seed_used = seed;
  return state;
}

Matrix effective_matrix(const CrossbarState& state, const DeviceConfig& cfg,
                        std::mt19937_64& rng) {
  const Matrix& gp = state.programmed_pos;
  const Matrix& gn = state.programmed_neg;
  Matrix out(gp.rows(), gp.cols());
  std::normal_distribution<double> noise(0.0, cfg.read_noise_sigma);
  const double f = state.targets.scale / cfg.g_unit;
  for (std::size_t i = 0; i < gp.rows(); ++i) {
    for (std::size_t j = 0; j < gp.cols(); ++j) {
      double g = gp(i, j) - gn(i, j);
      if (cfg.read_noise_sigma > 0.0) g += noise(rng);
      out(i, j) = f * g;
    }
  }
  return out;
}

}  // namespace amckfac
