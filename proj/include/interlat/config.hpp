#pragma once

#include <cstdint>
#include <string>

namespace interlat {

// Flat run configuration. Serialized as a flat JSON object with exactly these
// keys; unknown keys in a config file are rejected.
struct TrainConfig {
  // Dimensions: latent counts (n spatial, m temporal), channel dim d (the
  // hidden-state channel count equals the latent dim), clips per step b,
  // frames f, grid h x w, identity embedding dim d_face.
  uint64_t n = 32;
  uint64_t m = 32;
  uint64_t d = 16;
  uint64_t b = 2;
  uint64_t f = 4;
  uint64_t h = 8;
  uint64_t w = 8;
  uint64_t d_face = 16;

  // Region attention.
  double tau = 1.0;
  double alpha = 0.5;
  std::string mask_combine = "product";  // or "union"
  bool attn_projections = false;
  bool ortho_normalize = false;

  // Loss.
  double lambda_hand = 5.0;
  double lambda_face = 2.0;
  double beta = 0.0001;
  bool weighted_mean = false;

  // Training.
  uint64_t T = 100;
  uint64_t steps = 300;
  double lr = 0.05;
  uint64_t seed = 7;
  double init_scale = 0.02;

  // Ablation toggles.
  bool use_ris = true;
  bool use_quantize = true;
  bool use_ortho = true;
  bool use_id = true;
};

// Range/consistency validation; throws ConfigInvalid.
void validate_config(const TrainConfig& cfg);

// Strict JSON load: every key must be known and well-typed. Missing keys keep
// their defaults.
TrainConfig load_config(const std::string& path);

void save_config(const TrainConfig& cfg, const std::string& path);

// Canonical single-line serialization (fixed key order, %.17g numbers).
std::string canonical_config(const TrainConfig& cfg);

// FNV-1a 64-bit digest of the canonical serialization with `steps` excluded,
// so runs that differ only in step budget share a digest (checkpoint resume
// compatibility).
uint64_t config_digest(const TrainConfig& cfg);

std::string digest_hex(uint64_t digest);

}  // namespace interlat
