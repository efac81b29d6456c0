#include "interlat/attention.hpp"

#include <cmath>

namespace interlat {

void check_hidden_states(const Tensor& states, const char* op) {
  if (states.rank() != 5) {
    fail(ErrorKind::DimMismatch, std::string(op) +
                                     ": expected (b,f,h,w,c) states, got " +
                                     shape_str(states.shape()));
  }
}

void check_region_masks(const RegionMasks& masks, const Shape& state_shape,
                        const char* op) {
  for (const Tensor* mask : {&masks.hand, &masks.face}) {
    if (!mask->defined()) {
      fail(ErrorKind::ShapeMismatch, std::string(op) + ": undefined mask");
    }
    const Shape& ms = mask->shape();
    if (ms.size() != 5 || ms[4] != 1 || ms[0] != state_shape[0] ||
        ms[1] != state_shape[1] || ms[2] != state_shape[2] ||
        ms[3] != state_shape[3]) {
      fail(ErrorKind::ShapeMismatch,
           std::string(op) + ": mask shape " + shape_str(ms) +
               " does not match states " + shape_str(state_shape));
    }
    size_t n = mask->numel();
    for (size_t i = 0; i < n; ++i) {
      double v = mask->value_at(i);
      if (v != 0.0 && v != 1.0) {
        fail(ErrorKind::ConfigInvalid,
             std::string(op) + ": masks must be binary");
      }
    }
  }
}

Tensor cross_attn(const Tensor& queries, const Tensor& keys,
                  const Tensor& values, const AttnProjections* proj) {
  if (queries.rank() < 2 || keys.rank() != 2 || values.rank() != 2) {
    fail(ErrorKind::DimMismatch,
         "cross_attn: queries need rank >= 2 and keys/values rank 2");
  }
  size_t c = queries.shape()[queries.rank() - 1];
  size_t d = keys.shape()[1];
  if (c != d) {
    fail(ErrorKind::DimMismatch, "cross_attn: query dim " + std::to_string(c) +
                                     " != key dim " + std::to_string(d));
  }
  if (keys.shape() != values.shape()) {
    fail(ErrorKind::DimMismatch, "cross_attn: keys " + shape_str(keys.shape()) +
                                     " vs values " +
                                     shape_str(values.shape()));
  }
  Tensor q = queries, k = keys, v = values;
  if (proj) {
    q = matmul(q, proj->wq);
    k = matmul(k, proj->wk);
    v = matmul(v, proj->wv);
  }
  Tensor scores = scale(matmul(q, transpose(k, {1, 0})),
                        1.0 / std::sqrt(static_cast<double>(d)));
  Tensor attn = softmax(scores, scores.rank() - 1);
  return matmul(attn, v);
}

Tensor spatial_cross_attn(const Tensor& states, const Tensor& codebook,
                          const AttnProjections* proj) {
  check_hidden_states(states, "spatial_cross_attn");
  const Shape& s = states.shape();
  Tensor tokens = reshape(states, {s[0] * s[1], s[2] * s[3], s[4]});
  Tensor out = cross_attn(tokens, codebook, codebook, proj);
  return reshape(out, s);
}

Tensor temporal_cross_attn(const Tensor& states, const Tensor& codebook,
                           const AttnProjections* proj) {
  check_hidden_states(states, "temporal_cross_attn");
  const Shape& s = states.shape();
  Tensor permuted = transpose(states, {0, 2, 3, 1, 4});  // (b,h,w,f,c)
  Tensor tokens = reshape(permuted, {s[0] * s[2] * s[3], s[1], s[4]});
  Tensor out = cross_attn(tokens, codebook, codebook, proj);
  Tensor restored = reshape(out, {s[0], s[2], s[3], s[1], s[4]});
  return transpose(restored, {0, 3, 1, 2, 4});
}

Tensor mixer(const Tensor& spatial_out, const Tensor& temporal_out,
             double alpha) {
  if (spatial_out.shape() != temporal_out.shape()) {
    fail(ErrorKind::ShapeMismatch,
         "mixer: " + shape_str(spatial_out.shape()) + " vs " +
             shape_str(temporal_out.shape()));
  }
  if (alpha < 0.0 || alpha > 1.0) {
    fail(ErrorKind::ConfigInvalid,
         "mixer: alpha must lie in [0,1], got " + std::to_string(alpha));
  }
  return add(scale(spatial_out, alpha), scale(temporal_out, 1.0 - alpha));
}

Tensor apply_region_mask(const Tensor& states, const RegionMasks& masks,
                         MaskCombine combine) {
  check_hidden_states(states, "apply_region_mask");
  check_region_masks(masks, states.shape(), "apply_region_mask");
  if (combine == MaskCombine::Product) {
    return mul(mul(states, masks.hand), masks.face);
  }
  // Union of binary masks: h + f - h*f == max(h, f).
  Tensor both = sub(add(masks.hand, masks.face), mul(masks.hand, masks.face));
  return mul(states, both);
}

Tensor region_attention_block(const Tensor& states,
                              const InteractionLatents& lat,
                              const RegionMasks& masks, const QuantConfig& qcfg,
                              const MixerConfig& mcfg, bool quantize,
                              const AttnProjections* spatial_proj,
                              const AttnProjections* temporal_proj) {
  check_hidden_states(states, "region_attention_block");
  Tensor spatial_in = quantize ? soft_quantize(states, lat.spatial, qcfg) : states;
  Tensor temporal_in =
      quantize ? soft_quantize(states, lat.temporal, qcfg) : states;
  Tensor spatial_out = spatial_cross_attn(spatial_in, lat.spatial, spatial_proj);
  Tensor temporal_out =
      temporal_cross_attn(temporal_in, lat.temporal, temporal_proj);
  Tensor mixed = mixer(spatial_out, temporal_out, mcfg.alpha);
  Tensor masked = apply_region_mask(mixed, masks, mcfg.mask_combine);
  return add(states, masked);
}

}  // namespace interlat
