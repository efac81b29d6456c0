#include "interlat/losses.hpp"

#include <algorithm>

namespace interlat {

Tensor amplification_weights(const Tensor& mask, double lambda_r) {
  if (!(lambda_r > 0.0)) {
    fail(ErrorKind::ConfigInvalid,
         "amplification_weights: lambda must be positive");
  }
  size_t n = mask.numel();
  std::vector<double> weights(n);
  for (size_t i = 0; i < n; ++i) {
    weights[i] = mask.value_at(i) > 0.0 ? lambda_r : 1.0;
  }
  return Tensor::from_data(mask.shape(), weights, mask.dtype());
}

Tensor diffusion_loss(const LatentPair& pair, const LossConfig& cfg) {
  if (pair.target.shape() != pair.prediction.shape()) {
    fail(ErrorKind::ShapeMismatch,
         "diffusion_loss: target " + shape_str(pair.target.shape()) +
             " vs prediction " + shape_str(pair.prediction.shape()));
  }
  check_hidden_states(pair.target, "diffusion_loss");
  check_region_masks(pair.latent_masks, pair.target.shape(), "diffusion_loss");
  Tensor w_hand = amplification_weights(pair.latent_masks.hand, cfg.lambda_hand);
  Tensor w_face = amplification_weights(pair.latent_masks.face, cfg.lambda_face);
  Tensor diff = sub(pair.target, pair.prediction);
  Tensor weighted = mul(mul(mul(diff, diff), w_hand), w_face);
  if (!cfg.weighted_mean) {
    return mean_all(weighted);
  }
  // Weight sum over the full broadcast extent (channels repeat the per-cell
  // weight), computed outside the graph since weights are constants.
  size_t channels = pair.target.shape()[4];
  Tensor cell_weights = mul(w_hand, w_face);
  double denom = 0.0;
  for (size_t i = 0; i < cell_weights.numel(); ++i) {
    denom += cell_weights.value_at(i);
  }
  denom *= static_cast<double>(channels);
  return scale(sum_all(weighted), 1.0 / denom);
}

Tensor total_loss(const Tensor& diff, const Tensor& ortho, double beta) {
  if (beta < 0.0) {
    fail(ErrorKind::ConfigInvalid, "total_loss: beta must be >= 0");
  }
  return add(diff, scale(ortho, beta));
}

Tensor max_pool_mask(const Tensor& mask, size_t factor) {
  if (factor < 1) {
    fail(ErrorKind::InvalidDimension, "max_pool_mask: factor must be >= 1");
  }
  if (mask.rank() != 5 || mask.shape()[4] != 1) {
    fail(ErrorKind::DimMismatch, "max_pool_mask: expected (b,f,h,w,1) mask");
  }
  const Shape& s = mask.shape();
  if (s[2] % factor != 0 || s[3] % factor != 0) {
    fail(ErrorKind::DimMismatch,
         "max_pool_mask: grid " + shape_str(s) + " not divisible by " +
             std::to_string(factor));
  }
  size_t b = s[0], f = s[1], h = s[2] / factor, w = s[3] / factor;
  std::vector<double> out(b * f * h * w, 0.0);
  for (size_t bi = 0; bi < b; ++bi) {
    for (size_t fi = 0; fi < f; ++fi) {
      for (size_t y = 0; y < s[2]; ++y) {
        for (size_t x = 0; x < s[3]; ++x) {
          double v = mask.value_at(((bi * f + fi) * s[2] + y) * s[3] + x);
          size_t idx = ((bi * f + fi) * h + y / factor) * w + x / factor;
          out[idx] = std::max(out[idx], v);
        }
      }
    }
  }
  return Tensor::from_data({b, f, h, w, 1}, out, mask.dtype());
}

}  // namespace interlat
