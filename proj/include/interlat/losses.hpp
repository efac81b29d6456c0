#pragma once

#include "interlat/attention.hpp"
#include "interlat/tensor.hpp"

namespace interlat {

struct LossConfig {
  double lambda_hand = 5.0;
  double lambda_face = 2.0;
  double beta = 0.0001;
  // Off: mean of weighted squared errors over element count.
  // On: normalize by the sum of the weights instead.
  bool weighted_mean = false;
};

struct LatentPair {
  Tensor target;       // z
  Tensor prediction;   // z_hat, same shape
  RegionMasks latent_masks;
};

// Per-element amplification: lambda_r wherever mask > 0, 1.0 elsewhere.
// The result is a constant (no gradient flows through mask selection).
Tensor amplification_weights(const Tensor& mask, double lambda_r);

// Mean over all elements of |z - z_hat|^2 * W_hand * W_face.
Tensor diffusion_loss(const LatentPair& pair, const LossConfig& cfg);

// diff + beta * ortho.
Tensor total_loss(const Tensor& diff, const Tensor& ortho, double beta);

// Downsamples a (b,f,H,W,1) binary mask by taking the max over each
// factor x factor window: any covered pixel marks the coarse cell.
Tensor max_pool_mask(const Tensor& mask, size_t factor);

}  // namespace interlat
