#pragma once

#include "interlat/latents.hpp"
#include "interlat/quantize.hpp"
#include "interlat/tensor.hpp"

namespace interlat {

// Binary region masks over the hidden-state grid, (b,f,h,w,1) each, entries
// in {0,1}; the trailing channel axis broadcasts.
struct RegionMasks {
  Tensor hand;
  Tensor face;
};

enum class MaskCombine { Product, Union };

struct MixerConfig {
  double alpha = 0.5;                            // spatial/temporal blend
  MaskCombine mask_combine = MaskCombine::Product;
};

// Optional learned projections for the attention inputs; when absent the
// attention uses the raw queries/keys/values.
struct AttnProjections {
  Tensor wq;  // (c, c)
  Tensor wk;  // (d, d)
  Tensor wv;  // (d, d)
};

// softmax(Q K^T / sqrt(d)) V with keys/values (k,d) shared across all query
// rows. Q may carry leading batch axes: (..., s, c) with c == d.
Tensor cross_attn(const Tensor& queries, const Tensor& keys,
                  const Tensor& values, const AttnProjections* proj = nullptr);

// Tokens are spatial sites within one frame: reshape to (b*f, h*w, c), attend
// against the codebook, reshape back.
Tensor spatial_cross_attn(const Tensor& states, const Tensor& codebook,
                          const AttnProjections* proj = nullptr);

// Tokens are frames at one spatial site: permute to (b,h,w,f,c), flatten to
// (b*h*w, f, c), attend, restore the original layout.
Tensor temporal_cross_attn(const Tensor& states, const Tensor& codebook,
                           const AttnProjections* proj = nullptr);

// alpha * spatial + (1 - alpha) * temporal, elementwise.
Tensor mixer(const Tensor& spatial_out, const Tensor& temporal_out,
             double alpha);

// Product mode multiplies by hand then face mask (intersection support);
// Union mode multiplies by max(hand, face).
Tensor apply_region_mask(const Tensor& states, const RegionMasks& masks,
                         MaskCombine combine);

// Full block: soft-quantize against each codebook (optional), spatial and
// temporal attention, mix, mask, and the residual add onto the input.
// Positions with zero combined mask pass through bit-exactly.
Tensor region_attention_block(const Tensor& states,
                              const InteractionLatents& lat,
                              const RegionMasks& masks, const QuantConfig& qcfg,
                              const MixerConfig& mcfg, bool quantize = true,
                              const AttnProjections* spatial_proj = nullptr,
                              const AttnProjections* temporal_proj = nullptr);

// Shared validation helpers.
void check_hidden_states(const Tensor& states, const char* op);
void check_region_masks(const RegionMasks& masks, const Shape& state_shape,
                        const char* op);

}  // namespace interlat
