#pragma once

#include "interlat/tensor.hpp"

namespace interlat {

// 10*log10(range^2 / MSE) over all elements, capped (identical inputs hit the
// cap instead of dividing by zero). Shapes must match; range must be positive.
double psnr(const Tensor& a, const Tensor& b, double range, double cap_db = 100.0);

// Mean SSIM over the (frame, channel) planes of (f,h,w,c) tensors. 11x11
// Gaussian window with sigma 1.5, renormalized where it overhangs the border;
// C1 = (0.01*range)^2, C2 = (0.03*range)^2.
double ssim(const Tensor& a, const Tensor& b, double range);

// Mean absolute difference over all elements.
double l1_distance(const Tensor& a, const Tensor& b);

}  // namespace interlat
