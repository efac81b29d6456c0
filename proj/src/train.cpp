#include "interlat/train.hpp"

#include <chrono>
#include <cmath>

#include "interlat/checkpoint.hpp"
#include "interlat/error.hpp"
#include "interlat/losses.hpp"
#include "interlat/metrics.hpp"
#include "interlat/rng.hpp"
#include "interlat/schedule.hpp"

namespace interlat {
namespace {

// Eval noise streams live far away from the per-step train streams.
constexpr uint64_t kEvalSalt = 1ull << 40;

Tensor sgd_update(const Tensor& param, const Tensor& grad, double lr) {
  std::vector<double> p = param.to_vector();
  const std::vector<double> g = grad.to_vector();
  if (p.size() != g.size())
    fail(ErrorKind::ElementCountMismatch, "sgd_update: parameter/gradient size disagreement");
  for (size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
  return Tensor::from_data(param.shape(), p);
}

void check_dataset_matches(const TrainConfig& cfg, const Dataset& ds) {
  if (ds.clips.empty()) fail(ErrorKind::DatasetEmpty, "dataset holds no clips");
  const ClipDims& d = ds.dims;
  if (d.f != cfg.f || d.h != cfg.h || d.w != cfg.w || d.c != cfg.d || d.d_face != cfg.d_face)
    fail(ErrorKind::ConfigInvalid,
         "dataset dims (f,h,w,c,d_face) disagree with the configuration");
}

struct ClipBatchViews {
  Tensor z0;
  RegionMasks masks;
  FaceEmbedding emb;
};

ClipBatchViews clip_views(const SynthClip& clip, const ClipDims& d) {
  ClipBatchViews v;
  v.z0 = reshape(clip.frames, {1, d.f, d.h, d.w, d.c});
  v.masks.hand = reshape(clip.hand_mask, {1, d.f, d.h, d.w, 1});
  v.masks.face = reshape(clip.face_mask, {1, d.f, d.h, d.w, 1});
  v.emb.vectors = reshape(clip.identity, {1, d.d_face});
  return v;
}

// One-step denoised reconstruction at a fixed mid-schedule t with noise keyed
// by the clip id. No tape is active here.
Tensor reconstruct_clip(const TrainConfig& cfg, const NoiseSchedule& sched,
                        const SynthClip& clip, uint64_t clip_id, const ClipDims& d,
                        const ToyDenoiser& model, const AblationFlags& flags) {
  const size_t t_eval = cfg.T / 2;
  const ClipBatchViews v = clip_views(clip, d);
  Rng rng(Rng::mix(cfg.seed, kEvalSalt + clip_id));
  const Tensor eps = Tensor::randn({1, d.f, d.h, d.w, d.c}, rng);
  const Tensor z_t = add_noise(sched, v.z0, eps, t_eval);
  const Tensor pred = denoise_step(model, z_t, t_eval, v.masks, v.emb, cfg, flags);
  const double ab = sched.alpha_bars[t_eval];
  const Tensor zhat0 = scale(sub(z_t, scale(pred, std::sqrt(1.0 - ab))), 1.0 / std::sqrt(ab));
  return reshape(zhat0, {d.f, d.h, d.w, d.c});
}

}  // namespace

TrainResult train_model(const TrainConfig& cfg, const Dataset& ds, ToyDenoiser& model,
                        size_t start_step, const AblationFlags& flags) {
  validate_config(cfg);
  check_dataset_matches(cfg, ds);
  const std::vector<size_t> train_idx = split_indices(ds, "train");
  if (train_idx.empty()) fail(ErrorKind::DatasetEmpty, "dataset has no train-split clips");
  if (start_step > cfg.steps)
    fail(ErrorKind::StepOutOfRange, "start step exceeds the configured step budget");

  const NoiseSchedule sched = make_linear_schedule(cfg.T);
  LossConfig losscfg;
  losscfg.lambda_hand = cfg.lambda_hand;
  losscfg.lambda_face = cfg.lambda_face;
  losscfg.beta = cfg.beta;
  losscfg.weighted_mean = cfg.weighted_mean;
  const bool ortho_defined = cfg.n >= 2 && cfg.m >= 2;

  TrainResult result;
  const auto wall_start = std::chrono::steady_clock::now();

  for (size_t step = start_step; step < cfg.steps; ++step) {
    Rng srng(Rng::mix(cfg.seed, step));

    // Shadow copy with gradient-enabled parameters; the persistent model is
    // updated functionally below, outside the tape.
    ToyDenoiser shadow = model;
    for (auto& [name, slot] : shadow.named_params()) *slot = slot->with_requires_grad();

    StepLoss entry;
    entry.step = step;
    Tape tape;
    try {
      TapeScope scope(tape);
      Tensor diff_sum;
      for (size_t i = 0; i < cfg.b; ++i) {
        const size_t pick = train_idx[srng.uniform_int(0, train_idx.size() - 1)];
        const ClipBatchViews v = clip_views(ds.clips[pick], ds.dims);
        const size_t t = srng.uniform_int(0, cfg.T - 1);
        const Tensor eps = Tensor::randn({1, ds.dims.f, ds.dims.h, ds.dims.w, ds.dims.c}, srng);
        const Tensor z_t = add_noise(sched, v.z0, eps, t);
        const Tensor pred = denoise_step(shadow, z_t, t, v.masks, v.emb, cfg, flags);
        LatentPair pair;
        pair.target = eps;
        pair.prediction = pred;
        pair.latent_masks = v.masks;
        const Tensor di = diffusion_loss(pair, losscfg);
        diff_sum = (i == 0) ? di : add(diff_sum, di);
      }
      const Tensor diff_mean = scale(diff_sum, 1.0 / static_cast<double>(cfg.b));
      entry.diff = diff_mean.item();

      Tensor objective = diff_mean;
      if (ortho_defined) {
        const Tensor ortho = combined_ortho_loss(shadow.latents, cfg.ortho_normalize);
        entry.ortho = ortho.item();
        if (flags.use_ortho) objective = total_loss(diff_mean, ortho, cfg.beta);
      }
      entry.total = objective.item();
      tape.backward(objective);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonFinite || e.kind() == ErrorKind::NonFiniteEvaluation)
        fail(ErrorKind::NonFiniteLoss,
             "non-finite loss at step " + std::to_string(step) + ": " + e.what());
      throw;
    }

    const auto shadow_params = shadow.named_params();
    const auto model_params = model.named_params();
    for (size_t k = 0; k < shadow_params.size(); ++k) {
      const Tensor grad = shadow_params[k].second->grad();
      if (!grad.defined()) continue;  // parameter unused under these flags
      *model_params[k].second = sgd_update(*model_params[k].second, grad, cfg.lr);
    }
    result.history.push_back(entry);
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return result;
}

void save_trainer_checkpoint(const std::string& path, const TrainConfig& cfg,
                             ToyDenoiser& model, size_t step) {
  CheckpointEntries entries;
  for (auto& [name, slot] : model.named_params()) entries.emplace_back(name, *slot);
  entries.emplace_back("trainer.step", Tensor::scalar(static_cast<double>(step)));
  const uint64_t digest = config_digest(cfg);
  entries.emplace_back("config.digest.hi", Tensor::scalar(static_cast<double>(digest >> 32)));
  entries.emplace_back("config.digest.lo",
                       Tensor::scalar(static_cast<double>(digest & 0xffffffffull)));
  save_checkpoint(path, entries);
}

size_t load_trainer_checkpoint(const std::string& path, const TrainConfig& cfg,
                               ToyDenoiser& model) {
  const CheckpointEntries entries = load_checkpoint(path);
  const uint64_t hi = static_cast<uint64_t>(checkpoint_get(entries, "config.digest.hi").item());
  const uint64_t lo = static_cast<uint64_t>(checkpoint_get(entries, "config.digest.lo").item());
  const uint64_t stored = (hi << 32) | lo;
  if (stored != config_digest(cfg))
    fail(ErrorKind::ConfigInvalid,
         "checkpoint was written under a different configuration (digest " + digest_hex(stored) +
             " vs " + digest_hex(config_digest(cfg)) + ")");
  for (auto& [name, slot] : model.named_params()) {
    const Tensor stored_param = checkpoint_get(entries, name);
    if (stored_param.shape() != slot->shape())
      fail(ErrorKind::ConfigInvalid, "checkpoint parameter '" + name + "' has shape " +
                                         shape_str(stored_param.shape()) + ", expected " +
                                         shape_str(slot->shape()));
    *slot = stored_param;
  }
  const double step_value = checkpoint_get(entries, "trainer.step").item();
  if (step_value < 0.0) fail(ErrorKind::ConfigInvalid, "checkpoint step counter is negative");
  return static_cast<size_t>(step_value);
}

EvalResult evaluate_model(const TrainConfig& cfg, const Dataset& ds,
                          const ToyDenoiser& model, const AblationFlags& flags,
                          const std::string& split) {
  validate_config(cfg);
  check_dataset_matches(cfg, ds);
  const std::vector<size_t> indices = split_indices(ds, split);
  if (indices.empty()) fail(ErrorKind::DatasetEmpty, "no clips in split '" + split + "'");
  const NoiseSchedule sched = make_linear_schedule(cfg.T);

  EvalResult out;
  for (size_t idx : indices) {
    const SynthClip& clip = ds.clips[idx];
    const Tensor zhat0 =
        reconstruct_clip(cfg, sched, clip, ds.records[idx].id, ds.dims, model, flags);
    out.mean_psnr += psnr(zhat0, clip.frames, 2.0);
    out.mean_ssim += ssim(zhat0, clip.frames, 2.0);
    out.mean_l1 += l1_distance(zhat0, clip.frames);
  }
  out.clips = indices.size();
  out.mean_psnr /= static_cast<double>(out.clips);
  out.mean_ssim /= static_cast<double>(out.clips);
  out.mean_l1 /= static_cast<double>(out.clips);
  return out;
}

double masked_region_error(const TrainConfig& cfg, const Dataset& ds,
                           const ToyDenoiser& model, const AblationFlags& flags,
                           const std::string& split) {
  validate_config(cfg);
  check_dataset_matches(cfg, ds);
  const std::vector<size_t> indices = split_indices(ds, split);
  if (indices.empty()) fail(ErrorKind::DatasetEmpty, "no clips in split '" + split + "'");
  const NoiseSchedule sched = make_linear_schedule(cfg.T);

  double total = 0.0;
  for (size_t idx : indices) {
    const SynthClip& clip = ds.clips[idx];
    const Tensor zhat0 =
        reconstruct_clip(cfg, sched, clip, ds.records[idx].id, ds.dims, model, flags);
    const std::vector<double> pred = zhat0.to_vector();
    const std::vector<double> want = clip.frames.to_vector();
    const std::vector<double> hand = clip.hand_mask.to_vector();
    const std::vector<double> face = clip.face_mask.to_vector();
    double err = 0.0;
    size_t count = 0;
    const size_t c = ds.dims.c;
    for (size_t p = 0; p < hand.size(); ++p) {
      if (hand[p] <= 0.0 && face[p] <= 0.0) continue;
      for (size_t ch = 0; ch < c; ++ch) {
        const double d = pred[p * c + ch] - want[p * c + ch];
        err += d * d;
        ++count;
      }
    }
    total += count ? err / static_cast<double>(count) : 0.0;
  }
  return total / static_cast<double>(indices.size());
}

std::vector<AblationRow> run_ablations(const TrainConfig& cfg, const Dataset& ds) {
  struct Variant {
    const char* name;
    AblationFlags flags;
  };
  const Variant variants[] = {
      {"full", {true, true, true, true}},
      {"wo_ris", {false, false, true, true}},
      {"wo_quantize", {true, false, true, true}},
      {"wo_ortho", {true, true, false, true}},
      {"wo_id", {true, true, true, false}},
  };

  std::vector<AblationRow> rows;
  for (const Variant& variant : variants) {
    ToyDenoiser model = init_denoiser(cfg);
    const TrainResult run = train_model(cfg, ds, model, 0, variant.flags);
    AblationRow row;
    row.name = variant.name;
    row.final_total = run.history.back().total;
    row.final_diff = run.history.back().diff;
    row.final_ortho = (cfg.n >= 2 && cfg.m >= 2)
                          ? combined_ortho_loss(model.latents, cfg.ortho_normalize).item()
                          : 0.0;
    row.masked_err = masked_region_error(cfg, ds, model, variant.flags);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace interlat
