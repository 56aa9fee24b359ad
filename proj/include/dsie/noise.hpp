#pragma once

#include <cstdint>

namespace dsie {

// Base quantities for per-unit conversion. Currents use I_base = S_base / V_base.
struct PerUnitBases {
  double v_base = 13.2e3;
  double s_base = 10.0e6;

  double i_base() const { return s_base / v_base; }
};

// Noise levels in per-unit variance, applied to each real (d or q) component.
struct NoiseSpec {
  double sigma2_u = 5e-4;  // bus-voltage measurements
  double sigma2_x = 5e-4;  // branch-current measurements
  double sigma2_q = 1e-4;  // process noise on branch currents
  std::uint64_t seed = 1;

  void validate() const;
};

}  // namespace dsie
