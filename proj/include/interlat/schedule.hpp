#pragma once

#include <cstddef>
#include <vector>

#include "interlat/tensor.hpp"

namespace interlat {

// DDPM-style forward process bookkeeping.
struct NoiseSchedule {
  std::vector<double> betas;       // beta_t, t = 0..T-1
  std::vector<double> alphas;      // 1 - beta_t
  std::vector<double> alpha_bars;  // prod_{s<=t} alpha_s
  size_t T() const { return betas.size(); }
};

// Linear beta ramp from beta_start to beta_end over T steps.
// T >= 1; 0 < beta_start <= beta_end < 1 (ConfigInvalid otherwise).
NoiseSchedule make_linear_schedule(size_t T, double beta_start = 1e-4,
                                   double beta_end = 0.02);

// z_t = sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps.
// Shapes of z0 and eps must match (ShapeMismatch); t < T (StepOutOfRange).
Tensor add_noise(const NoiseSchedule& sched, const Tensor& z0,
                 const Tensor& eps, size_t t);

}  // namespace interlat
