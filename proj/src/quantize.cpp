#include "interlat/quantize.hpp"

namespace interlat {

Tensor soft_quantize(const Tensor& states, const Tensor& codebook,
                     const QuantConfig& cfg, Tensor* weights_out) {
  if (!(cfg.tau > 0.0)) {
    fail(ErrorKind::NonPositiveTemperature,
         "soft_quantize: tau must be positive, got " + std::to_string(cfg.tau));
  }
  if (states.rank() != 5) {
    fail(ErrorKind::DimMismatch,
         "soft_quantize: expected (b,f,h,w,c) states, got " +
             shape_str(states.shape()));
  }
  if (codebook.rank() != 2) {
    fail(ErrorKind::DimMismatch, "soft_quantize: expected (k,d) codebook, got " +
                                     shape_str(codebook.shape()));
  }
  size_t c = states.shape()[4];
  size_t d = codebook.shape()[1];
  if (c != d) {
    fail(ErrorKind::DimMismatch,
         "soft_quantize: channel dim " + std::to_string(c) +
             " != codebook dim " + std::to_string(d));
  }
  size_t positions = states.numel() / c;

  Tensor flat = reshape(states, {positions, c});
  // Squared Euclidean distances via the expansion |v|^2 + |l|^2 - 2 v.l
  Tensor v_sq = reduce_sum(mul(flat, flat), 1, /*keepdim=*/true);  // (N,1)
  Tensor l_sq = transpose(
      reduce_sum(mul(codebook, codebook), 1, /*keepdim=*/true), {1, 0});  // (1,k)
  Tensor cross = matmul(flat, transpose(codebook, {1, 0}));  // (N,k)
  Tensor dist = sub(add(v_sq, l_sq), scale(cross, 2.0));
  Tensor weights = softmax(scale(dist, -1.0 / cfg.tau), 1);
  if (weights_out) *weights_out = weights;
  Tensor mixed = matmul(weights, codebook);  // (N,d)
  return reshape(mixed, states.shape());
}

}  // namespace interlat
