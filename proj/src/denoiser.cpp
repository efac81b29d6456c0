#include "interlat/denoiser.hpp"

#include <cmath>

#include "interlat/error.hpp"
#include "interlat/quantize.hpp"
#include "interlat/rng.hpp"

namespace interlat {
namespace {

Tensor identity_matrix(size_t d) {
  std::vector<double> data(d * d, 0.0);
  for (size_t i = 0; i < d; ++i) data[i * d + i] = 1.0;
  return Tensor::from_data({d, d}, data);
}

}  // namespace

AblationFlags flags_from_config(const TrainConfig& cfg) {
  return AblationFlags{cfg.use_ris, cfg.use_quantize, cfg.use_ortho, cfg.use_id};
}

std::vector<std::pair<std::string, Tensor*>> ToyDenoiser::named_params() {
  std::vector<std::pair<std::string, Tensor*>> out = {
      {"w_in", &w_in},
      {"b_in", &b_in},
      {"w_temb", &w_temb},
      {"w_out", &w_out},
      {"b_out", &b_out},
      {"latents.spatial", &latents.spatial},
      {"latents.temporal", &latents.temporal},
      {"id.weights", &id_proj.weights},
      {"id.bias", &id_proj.bias},
  };
  if (has_attn_proj) {
    out.emplace_back("attn.wq", &attn_proj.wq);
    out.emplace_back("attn.wk", &attn_proj.wk);
    out.emplace_back("attn.wv", &attn_proj.wv);
  }
  return out;
}

ToyDenoiser init_denoiser(const TrainConfig& cfg) {
  validate_config(cfg);
  const size_t d = cfg.d;

  ToyDenoiser model;
  model.w_in = identity_matrix(d);
  model.b_in = Tensor::zeros({d});
  Rng rng_temb(Rng::mix(cfg.seed, 21));
  model.w_temb = Tensor::randn({d, d}, rng_temb, cfg.init_scale);
  // The output projection starts near a damped identity so the residual and
  // identity paths receive usable gradients from the first step.
  Rng rng_out(Rng::mix(cfg.seed, 22));
  model.w_out = add(scale(identity_matrix(d), 0.3),
                    Tensor::randn({d, d}, rng_out, cfg.init_scale));
  model.b_out = Tensor::zeros({d});
  // Latents start wide enough that the attention softmax has spread and the
  // value rows contribute visibly; tiny inits leave the block at a dead
  // uniform-attention saddle for hundreds of steps.
  model.latents = init_latents(cfg.n, cfg.m, d, Rng::mix(cfg.seed, 11), 0.3);
  Rng rng_id(Rng::mix(cfg.seed, 31));
  model.id_proj.weights = Tensor::randn({cfg.d_face, d}, rng_id, cfg.init_scale);
  model.id_proj.bias = Tensor::zeros({d});
  model.has_attn_proj = cfg.attn_projections;
  if (model.has_attn_proj) {
    model.attn_proj.wq = identity_matrix(d);
    model.attn_proj.wk = identity_matrix(d);
    model.attn_proj.wv = identity_matrix(d);
  }
  return model;
}

Tensor timestep_embedding(size_t t, size_t dim) {
  if (dim < 1) fail(ErrorKind::InvalidDimension, "timestep embedding needs dim >= 1");
  const size_t half = (dim + 1) / 2;
  std::vector<double> data(dim);
  for (size_t k = 0; k < dim; ++k) {
    const size_t pair = k / 2;
    const double freq =
        std::exp(-std::log(10000.0) * static_cast<double>(pair) /
                 static_cast<double>(half > 1 ? half - 1 : 1));
    const double angle = static_cast<double>(t) * freq;
    data[k] = (k % 2 == 0) ? std::sin(angle) : std::cos(angle);
  }
  return Tensor::from_data({1, dim}, data);
}

Tensor denoise_step(const ToyDenoiser& model, const Tensor& z_t, size_t t,
                    const RegionMasks& masks, const FaceEmbedding& face_emb,
                    const TrainConfig& cfg, const AblationFlags& flags) {
  check_hidden_states(z_t, "denoise_step");
  const Shape& s = z_t.shape();
  if (s[4] != cfg.d)
    fail(ErrorKind::DimMismatch, "denoise_step: state channels " + std::to_string(s[4]) +
                                     " vs configured d " + std::to_string(cfg.d));
  check_region_masks(masks, s, "denoise_step");
  if (t >= cfg.T) fail(ErrorKind::StepOutOfRange, "denoise_step: t >= T");

  const size_t positions = s[0] * s[1] * s[2] * s[3];
  const Tensor flat = reshape(z_t, {positions, cfg.d});
  const Tensor temb = matmul(timestep_embedding(t, cfg.d), model.w_temb);  // (1, d)
  const Tensor hidden_flat = add(add(matmul(flat, model.w_in), model.b_in), temb);
  const Tensor hidden = reshape(hidden_flat, s);

  const AttnProjections* proj = model.has_attn_proj ? &model.attn_proj : nullptr;

  Tensor fused;
  if (flags.use_ris) {
    QuantConfig qcfg{cfg.tau};
    MixerConfig mcfg;
    mcfg.alpha = cfg.alpha;
    mcfg.mask_combine = cfg.mask_combine == "union" ? MaskCombine::Union : MaskCombine::Product;
    fused = region_attention_block(hidden, model.latents, masks, qcfg, mcfg,
                                   flags.use_quantize, proj, proj);
  } else {
    fused = hidden;
  }
  if (flags.use_id) {
    const Tensor projected = project_embedding(face_emb, model.id_proj);
    // The identity path queries the same projected input the region block saw.
    const Tensor face_out = id_attend(hidden, projected, masks, cfg.alpha);
    fused = fuse_outputs(fused, face_out);
  }

  const Tensor out_flat = add(matmul(reshape(fused, {positions, cfg.d}), model.w_out), model.b_out);
  return reshape(out_flat, s);
}

}  // namespace interlat
