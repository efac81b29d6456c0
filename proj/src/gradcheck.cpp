#include "interlat/gradcheck.hpp"

#include <functional>

#include "interlat/attention.hpp"
#include "interlat/denoiser.hpp"
#include "interlat/error.hpp"
#include "interlat/id_preserver.hpp"
#include "interlat/latents.hpp"
#include "interlat/losses.hpp"
#include "interlat/quantize.hpp"
#include "interlat/rng.hpp"
#include "interlat/schedule.hpp"
#include "interlat/tensor.hpp"

namespace interlat {
namespace {

Tensor rand_t(const Shape& shape, uint64_t seed, double stddev = 1.0) {
  Rng rng(seed);
  return Tensor::randn(shape, rng, stddev);
}

Tensor binary_mask(const Shape& shape, uint64_t seed, double keep = 0.5) {
  Rng rng(seed);
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = rng.uniform() < keep ? 1.0 : 0.0;
  return Tensor::from_data(shape, data);
}

using CaseFn = std::function<double()>;

struct NamedCase {
  const char* name;
  CaseFn run;  // returns max relative error
};

double check_one(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                 std::vector<Tensor> inputs) {
  for (Tensor& t : inputs) t = t.with_requires_grad();
  return finite_diff_check(fn, inputs);
}

// A tiny full-pipeline configuration so the end-to-end objective check stays
// inside the time budget.
TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.n = 3;
  cfg.m = 3;
  cfg.d = 4;
  cfg.b = 1;
  cfg.f = 2;
  cfg.h = 4;
  cfg.w = 4;
  cfg.d_face = 4;
  cfg.T = 10;
  cfg.steps = 1;
  return cfg;
}

std::vector<NamedCase> all_cases() {
  std::vector<NamedCase> cases;

  cases.push_back({"matmul", [] {
    return check_one(
        [](const std::vector<Tensor>& in) { return sum_all(matmul(in[0], in[1])); },
        {rand_t({3, 4}, 101), rand_t({4, 2}, 102)});
  }});

  cases.push_back({"matmul_batched", [] {
    return check_one(
        [](const std::vector<Tensor>& in) { return sum_all(matmul(in[0], in[1])); },
        {rand_t({2, 3, 4}, 103), rand_t({2, 4, 2}, 104)});
  }});

  cases.push_back({"softmax", [] {
    const Tensor weights = rand_t({3, 5}, 106);
    return check_one(
        [weights](const std::vector<Tensor>& in) {
          return sum_all(mul(softmax(in[0], 1), weights));
        },
        {rand_t({3, 5}, 105)});
  }});

  cases.push_back({"elementwise", [] {
    return check_one(
        [](const std::vector<Tensor>& in) {
          const Tensor pos = add(mul(in[1], in[1]), Tensor::full(in[1].shape(), 0.5));
          return sum_all(divide(mul(in[0], in[1]), pos));
        },
        {rand_t({4, 3}, 107), rand_t({4, 3}, 108)});
  }});

  cases.push_back({"sqrt_scale_sub", [] {
    return check_one(
        [](const std::vector<Tensor>& in) {
          const Tensor pos = add(mul(in[0], in[0]), Tensor::full(in[0].shape(), 1.0));
          return mean_all(sub(sqrt_elem(pos), scale(in[0], 0.25)));
        },
        {rand_t({3, 3}, 109)});
  }});

  cases.push_back({"reductions_reshape", [] {
    return check_one(
        [](const std::vector<Tensor>& in) {
          const Tensor summed = reduce_sum(in[0], 1);            // (2,4)
          const Tensor moved = transpose(summed, {1, 0});        // (4,2)
          return mean_all(mul(reshape(moved, {2, 4}), in[1]));
        },
        {rand_t({2, 3, 4}, 110), rand_t({2, 4}, 111)});
  }});

  cases.push_back({"broadcast", [] {
    return check_one(
        [](const std::vector<Tensor>& in) { return sum_all(mul(add(in[0], in[1]), in[2])); },
        {rand_t({3, 1}, 112), rand_t({1, 4}, 113), rand_t({3, 4}, 114)});
  }});

  cases.push_back({"softquant", [] {
    QuantConfig qcfg{0.7};
    return check_one(
        [qcfg](const std::vector<Tensor>& in) {
          return mean_all(soft_quantize(in[0], in[1], qcfg));
        },
        {rand_t({1, 1, 2, 2, 4}, 115), rand_t({5, 4}, 116)});
  }});

  cases.push_back({"spatial_attention", [] {
    return check_one(
        [](const std::vector<Tensor>& in) {
          return mean_all(spatial_cross_attn(in[0], in[1]));
        },
        {rand_t({1, 2, 2, 2, 4}, 117), rand_t({6, 4}, 118)});
  }});

  cases.push_back({"temporal_attention", [] {
    return check_one(
        [](const std::vector<Tensor>& in) {
          return mean_all(temporal_cross_attn(in[0], in[1]));
        },
        {rand_t({1, 3, 2, 2, 4}, 119), rand_t({6, 4}, 120)});
  }});

  cases.push_back({"mixer", [] {
    return check_one(
        [](const std::vector<Tensor>& in) {
          return mean_all(mixer(in[0], in[1], 0.35));
        },
        {rand_t({2, 3, 4}, 152), rand_t({2, 3, 4}, 153)});
  }});

  cases.push_back({"region_mask", [] {
    RegionMasks masks;
    masks.hand = binary_mask({1, 2, 3, 3, 1}, 154);
    masks.face = binary_mask({1, 2, 3, 3, 1}, 155);
    return check_one(
        [=](const std::vector<Tensor>& in) {
          const Tensor narrow = apply_region_mask(in[0], masks, MaskCombine::Product);
          const Tensor wide = apply_region_mask(in[0], masks, MaskCombine::Union);
          return mean_all(add(narrow, wide));
        },
        {rand_t({1, 2, 3, 3, 4}, 156)});
  }});

  cases.push_back({"region_block", [] {
    RegionMasks masks;
    masks.hand = binary_mask({1, 2, 3, 3, 1}, 121);
    masks.face = binary_mask({1, 2, 3, 3, 1}, 122);
    QuantConfig qcfg{1.3};
    MixerConfig mcfg;
    mcfg.alpha = 0.6;
    return check_one(
        [=](const std::vector<Tensor>& in) {
          InteractionLatents lat{in[1], in[2]};
          return mean_all(region_attention_block(in[0], lat, masks, qcfg, mcfg));
        },
        {rand_t({1, 2, 3, 3, 4}, 123), rand_t({5, 4}, 124), rand_t({5, 4}, 125)});
  }});

  cases.push_back({"id_path", [] {
    RegionMasks masks;
    masks.hand = binary_mask({1, 2, 3, 3, 1}, 126);
    masks.face = binary_mask({1, 2, 3, 3, 1}, 127);
    const Tensor emb_rows = rand_t({2, 5}, 128);
    return check_one(
        [=](const std::vector<Tensor>& in) {
          FaceEmbedding emb{emb_rows};
          IdProjection proj{in[1], in[2]};
          const Tensor projected = project_embedding(emb, proj);
          return mean_all(fuse_outputs(in[0], id_attend(in[0], projected, masks, 0.4)));
        },
        {rand_t({1, 2, 3, 3, 4}, 129), rand_t({5, 4}, 130), rand_t({4}, 131)});
  }});

  cases.push_back({"ortho_loss", [] {
    return check_one(
        [](const std::vector<Tensor>& in) { return orthogonality_loss(in[0]); },
        {rand_t({4, 6}, 132)});
  }});

  cases.push_back({"ortho_loss_normalized", [] {
    return check_one(
        [](const std::vector<Tensor>& in) { return orthogonality_loss(in[0], true); },
        {rand_t({4, 6}, 133)});
  }});

  cases.push_back({"diffusion_loss", [] {
    const Tensor target = rand_t({1, 2, 3, 3, 4}, 134);
    RegionMasks masks;
    masks.hand = binary_mask({1, 2, 3, 3, 1}, 135);
    masks.face = binary_mask({1, 2, 3, 3, 1}, 136);
    LossConfig cfg;
    return check_one(
        [=](const std::vector<Tensor>& in) {
          LatentPair pair;
          pair.target = target;
          pair.prediction = in[0];
          pair.latent_masks = masks;
          return diffusion_loss(pair, cfg);
        },
        {rand_t({1, 2, 3, 3, 4}, 137)});
  }});

  cases.push_back({"total_objective", [] {
    const TrainConfig cfg = tiny_config();
    const AblationFlags flags;  // everything on
    RegionMasks masks;
    masks.hand = binary_mask({1, cfg.f, cfg.h, cfg.w, 1}, 138);
    masks.face = binary_mask({1, cfg.f, cfg.h, cfg.w, 1}, 139);
    const Tensor z0 = rand_t({1, cfg.f, cfg.h, cfg.w, cfg.d}, 140, 0.5);
    const Tensor eps = rand_t({1, cfg.f, cfg.h, cfg.w, cfg.d}, 141);
    const Tensor emb_rows = rand_t({1, cfg.d_face}, 142);
    const NoiseSchedule sched = make_linear_schedule(cfg.T);
    const Tensor z_t = add_noise(sched, z0, eps, cfg.T / 2);
    LossConfig losscfg;
    return check_one(
        [=](const std::vector<Tensor>& in) {
          ToyDenoiser model;
          model.w_in = in[0];
          model.b_in = in[1];
          model.w_temb = in[2];
          model.w_out = in[3];
          model.b_out = in[4];
          model.latents = InteractionLatents{in[5], in[6]};
          model.id_proj = IdProjection{in[7], in[8]};
          const Tensor pred =
              denoise_step(model, z_t, cfg.T / 2, masks, FaceEmbedding{emb_rows}, cfg, flags);
          LatentPair pair;
          pair.target = eps;
          pair.prediction = pred;
          pair.latent_masks = masks;
          const Tensor diff = diffusion_loss(pair, losscfg);
          return total_loss(diff, combined_ortho_loss(model.latents), losscfg.beta);
        },
        {rand_t({cfg.d, cfg.d}, 143, 0.5), rand_t({cfg.d}, 144, 0.1),
         rand_t({cfg.d, cfg.d}, 145, 0.1), rand_t({cfg.d, cfg.d}, 146, 0.5),
         rand_t({cfg.d}, 147, 0.1), rand_t({cfg.n, cfg.d}, 148, 0.3),
         rand_t({cfg.m, cfg.d}, 149, 0.3), rand_t({cfg.d_face, cfg.d}, 150, 0.3),
         rand_t({cfg.d}, 151, 0.1)});
  }});

  return cases;
}

}  // namespace

std::vector<GradCheckCase> run_grad_checks(const std::string& only, bool sabotage) {
  std::vector<GradCheckCase> results;
  for (const NamedCase& nc : all_cases()) {
    if (!only.empty() && std::string(nc.name).find(only) == std::string::npos) continue;
    GradCheckCase row;
    row.name = nc.name;
    row.max_rel_err = nc.run();
    row.passed = row.max_rel_err < row.tolerance;
    results.push_back(row);
  }
  if (sabotage) {
    // detach() hides half of x^2 from the tape, so the analytic gradient is
    // off by a factor of two on purpose.
    GradCheckCase row;
    row.name = "negative_control";
    row.max_rel_err = check_one(
        [](const std::vector<Tensor>& in) { return sum_all(mul(in[0], in[0].detach())); },
        {rand_t({3, 3}, 199, 2.0)});
    row.passed = row.max_rel_err < row.tolerance;
    results.push_back(row);
  }
  return results;
}

}  // namespace interlat
