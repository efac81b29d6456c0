#pragma once

#include <string>
#include <vector>

#include "interlat/config.hpp"
#include "interlat/denoiser.hpp"
#include "interlat/synthdata.hpp"

namespace interlat {

struct StepLoss {
  size_t step = 0;
  double diff = 0.0;
  double ortho = 0.0;
  double total = 0.0;
};

struct TrainResult {
  std::vector<StepLoss> history;  // the steps executed by this call
  double wall_seconds = 0.0;
};

// Runs steps [start_step, cfg.steps) of seeded SGD on the model in place.
// Each step draws its clips, timesteps, and noise from a stream keyed only by
// (cfg.seed, step), so a resumed run reproduces the original loss sequence
// bit for bit. A non-finite loss aborts with NonFiniteLoss naming the step.
TrainResult train_model(const TrainConfig& cfg, const Dataset& ds,
                        ToyDenoiser& model, size_t start_step,
                        const AblationFlags& flags);

void save_trainer_checkpoint(const std::string& path, const TrainConfig& cfg,
                             ToyDenoiser& model, size_t step);

// Restores parameters into an init_denoiser(cfg) model and returns the stored
// step counter. The stored config digest must match cfg's (the step budget is
// excluded from the digest, so only the budget may differ).
size_t load_trainer_checkpoint(const std::string& path, const TrainConfig& cfg,
                               ToyDenoiser& model);

struct EvalResult {
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_l1 = 0.0;
  size_t clips = 0;
};

// One-step reconstruction quality at t = T/2 with per-clip seeded noise.
EvalResult evaluate_model(const TrainConfig& cfg, const Dataset& ds,
                          const ToyDenoiser& model, const AblationFlags& flags,
                          const std::string& split = "test");

// Mean squared reconstruction error restricted to the union of the region
// masks. Shares the eval noise seeding, so ablation variants are comparable.
double masked_region_error(const TrainConfig& cfg, const Dataset& ds,
                           const ToyDenoiser& model, const AblationFlags& flags,
                           const std::string& split = "test");

struct AblationRow {
  std::string name;
  double final_total = 0.0;
  double final_diff = 0.0;
  double final_ortho = 0.0;  // measured on the trained latents
  double masked_err = 0.0;
};

// Trains five variants (full model and one component removed at a time) from
// identical seeds and reports their final losses and masked-region errors.
std::vector<AblationRow> run_ablations(const TrainConfig& cfg, const Dataset& ds);

}  // namespace interlat
