#include "interlat/schedule.hpp"

#include <cmath>
#include <string>

#include "interlat/error.hpp"

namespace interlat {

NoiseSchedule make_linear_schedule(size_t T, double beta_start, double beta_end) {
  if (T < 1) fail(ErrorKind::ConfigInvalid, "schedule needs T >= 1");
  if (!(beta_start > 0.0) || !(beta_end >= beta_start) || !(beta_end < 1.0))
    fail(ErrorKind::ConfigInvalid, "schedule needs 0 < beta_start <= beta_end < 1");

  NoiseSchedule sched;
  sched.betas.resize(T);
  sched.alphas.resize(T);
  sched.alpha_bars.resize(T);
  double running = 1.0;
  for (size_t t = 0; t < T; ++t) {
    const double frac = (T == 1) ? 0.0 : static_cast<double>(t) / static_cast<double>(T - 1);
    sched.betas[t] = beta_start + (beta_end - beta_start) * frac;
    sched.alphas[t] = 1.0 - sched.betas[t];
    running *= sched.alphas[t];
    sched.alpha_bars[t] = running;
  }
  return sched;
}

Tensor add_noise(const NoiseSchedule& sched, const Tensor& z0, const Tensor& eps, size_t t) {
  if (t >= sched.T())
    fail(ErrorKind::StepOutOfRange,
         "diffusion step " + std::to_string(t) + " outside schedule of length " +
             std::to_string(sched.T()));
  if (z0.shape() != eps.shape())
    fail(ErrorKind::ShapeMismatch, "add_noise: z0 shape " + shape_str(z0.shape()) +
                                       " vs eps shape " + shape_str(eps.shape()));
  const double ab = sched.alpha_bars[t];
  return add(scale(z0, std::sqrt(ab)), scale(eps, std::sqrt(1.0 - ab)));
}

}  // namespace interlat
