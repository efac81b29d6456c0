#pragma once

#include "interlat/tensor.hpp"

namespace interlat {

struct QuantConfig {
  double tau = 1.0;  // softmax temperature over squared distances
};

// Soft nearest-neighbor quantization: every position of the hidden-state
// tensor (b,f,h,w,c) is replaced by a softmax(-distance/tau)-weighted
// combination of codebook rows (k,d), c == d. Differentiable in both inputs.
// tau -> 0 approaches the hard nearest neighbor, tau -> inf the codebook mean.
// weights_out, when given, receives the (positions, k) softmax weights.
Tensor soft_quantize(const Tensor& states, const Tensor& codebook,
                     const QuantConfig& cfg, Tensor* weights_out = nullptr);

}  // namespace interlat
