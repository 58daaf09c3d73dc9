#include "amckfac/amc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace amckfac {

AmcResult amc_solve(const CrossbarState& state, const Vector& b,
                    const DeviceConfig& dev, const ConverterConfig& conv,
                    std::mt19937_64& rng) {
  conv.validate();
  const std::size_t m = state.programmed_pos.rows();
  if (b.size() != m) throw ContractViolation("amc_solve dimension mismatch");
  if (static_cast<int>(m) > dev.leaf_max)
    throw ContractViolation("amc_solve: system larger than crossbar");
  const double b_scale = norm_inf(b);
  if (b_scale == 0.0)
    throw ContractViolation("amc_solve: right-hand side is all zero");

  // DAC: scale to unit infinity norm, quantize.
  const FixedPointSpec dac{conv.dac_bits};
  Vector b_q(m);
  for (std::size_t i = 0; i < m; ++i)
    b_q[i] = quantize_fixed(b[i] / b_scale, dac);

  const Matrix eff = effective_matrix(state, dev, rng);
  const double cond = condition_estimate(eff);
  if (!(cond <= 1e12)) {
    std::ostringstream msg;
    msg << "effective crossbar matrix numerically singular (condition "
        << cond << ")";
    throw CircuitUnstableError(msg.str());
  }

  // The analog loop settles to the true solution of the noisy matrix. The
  // OA output voltages live in conductance-normalized units: the circuit
  // embodies A~/scale (entries referenced to G_0), so the voltage vector is
  // scale * A~^-1 b. Rails and the ADC apply in that domain.
  Vector x = gauss_solve(eff, b_q);
  const double scale = state.targets.scale;

  const double clip = conv.full_scale * kOutputHeadroom;
  const FixedPointSpec adc{conv.adc_bits};
  bool saturated = false;
  for (double& v : x) {
    double volt = v * scale;
    if (std::fabs(volt) > clip) {
      volt = std::clamp(volt, -clip, clip);
      saturated = true;
    }
    bool sat = false;
    volt = quantize_fixed(volt / clip, adc, &sat) * clip;
    saturated = saturated || sat;
    v = volt / scale;
  }

  for (double& v : x) v *= b_scale;
  return AmcResult{std::move(x), saturated};
}

}  // namespace amckfac
