#pragma once

#include <string>
#include <utility>
#include <vector>

#include "interlat/attention.hpp"
#include "interlat/config.hpp"
#include "interlat/id_preserver.hpp"
#include "interlat/latents.hpp"
#include "interlat/tensor.hpp"

namespace interlat {

struct AblationFlags {
  bool use_ris = true;       // region attention block
  bool use_quantize = true;  // soft quantization inside the block
  bool use_ortho = true;     // orthogonality penalty in the objective
  bool use_id = true;        // identity preservation path
};

AblationFlags flags_from_config(const TrainConfig& cfg);

// Small epsilon-prediction network: pointwise input/output projections with a
// sinusoidal timestep bias, plus the region attention block and the identity
// path operating in parallel off the projected input.
struct ToyDenoiser {
  Tensor w_in;    // (d, d), identity at init
  Tensor b_in;    // (d)
  Tensor w_temb;  // (d, d)
  Tensor w_out;   // (d, d)
  Tensor b_out;   // (d)
  InteractionLatents latents;
  IdProjection id_proj;
  bool has_attn_proj = false;
  AttnProjections attn_proj;  // shared by both attention sites when enabled

  // Stable name -> slot mapping used by the optimizer and checkpoints.
  std::vector<std::pair<std::string, Tensor*>> named_params();
};

ToyDenoiser init_denoiser(const TrainConfig& cfg);

// Classic sinusoidal embedding: (sin, cos) pairs over geometric frequencies,
// shape (1, dim).
Tensor timestep_embedding(size_t t, size_t dim);

// One epsilon prediction for z_t (b,f,h,w,d) at diffusion step t. The face
// embedding rows are shared by every clip in the batch, so the trainer feeds
// one clip at a time (b == 1) during optimization.
Tensor denoise_step(const ToyDenoiser& model, const Tensor& z_t, size_t t,
                    const RegionMasks& masks, const FaceEmbedding& face_emb,
                    const TrainConfig& cfg, const AblationFlags& flags);

}  // namespace interlat
