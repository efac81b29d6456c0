#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "interlat/denoiser.hpp"
#include "interlat/error.hpp"
#include "interlat/rng.hpp"
#include "interlat/schedule.hpp"

using namespace interlat;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.n = 4;
  cfg.m = 4;
  cfg.d = 5;
  cfg.f = 3;
  cfg.h = 4;
  cfg.w = 4;
  cfg.d_face = 6;
  cfg.T = 20;
  return cfg;
}

struct Inputs {
  Tensor z_t;
  RegionMasks masks;
  FaceEmbedding emb;
};

Inputs make_inputs(const TrainConfig& cfg, uint64_t seed, double mask_keep = 0.5) {
  Rng rng(seed);
  Inputs in;
  in.z_t = Tensor::randn({1, cfg.f, cfg.h, cfg.w, cfg.d}, rng);
  const size_t cells = cfg.f * cfg.h * cfg.w;
  std::vector<double> hand(cells), face(cells);
  for (double& v : hand) v = rng.uniform() < mask_keep ? 1.0 : 0.0;
  for (double& v : face) v = rng.uniform() < mask_keep ? 1.0 : 0.0;
  in.masks.hand = Tensor::from_data({1, cfg.f, cfg.h, cfg.w, 1}, hand);
  in.masks.face = Tensor::from_data({1, cfg.f, cfg.h, cfg.w, 1}, face);
  in.emb.vectors = Tensor::randn({1, cfg.d_face}, rng);
  return in;
}

}  // namespace

TEST_CASE("timestep embedding matches the sinusoid formula") {
  const size_t dim = 8;
  const Tensor emb = timestep_embedding(7, dim);
  REQUIRE(emb.shape() == Shape{1, dim});
  const std::vector<double> v = emb.to_vector();
  const size_t half = (dim + 1) / 2;
  for (size_t k = 0; k < dim; ++k) {
    const size_t pair = k / 2;
    const double freq = std::exp(-std::log(10000.0) * double(pair) / double(half - 1));
    const double angle = 7.0 * freq;
    const double want = (k % 2 == 0) ? std::sin(angle) : std::cos(angle);
    CHECK(v[k] == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("initialization: identity input projection, zero biases, seeded determinism") {
  const TrainConfig cfg = small_config();
  ToyDenoiser a = init_denoiser(cfg);
  ToyDenoiser b = init_denoiser(cfg);

  const std::vector<double> win = a.w_in.to_vector();
  for (size_t i = 0; i < cfg.d; ++i)
    for (size_t j = 0; j < cfg.d; ++j)
      CHECK(win[i * cfg.d + j] == (i == j ? 1.0 : 0.0));
  for (double v : a.b_in.to_vector()) CHECK(v == 0.0);
  for (double v : a.b_out.to_vector()) CHECK(v == 0.0);
  for (double v : a.id_proj.bias.to_vector()) CHECK(v == 0.0);

  CHECK(a.w_temb.to_vector() == b.w_temb.to_vector());
  CHECK(a.w_out.to_vector() == b.w_out.to_vector());
  CHECK(a.latents.spatial.to_vector() == b.latents.spatial.to_vector());
  CHECK(a.has_attn_proj == false);
  CHECK(a.named_params().size() == 9);

  TrainConfig cfg2 = cfg;
  cfg2.seed = cfg.seed + 1;
  ToyDenoiser c = init_denoiser(cfg2);
  CHECK(a.w_out.to_vector() != c.w_out.to_vector());

  TrainConfig cfg3 = cfg;
  cfg3.attn_projections = true;
  ToyDenoiser d = init_denoiser(cfg3);
  CHECK(d.has_attn_proj);
  CHECK(d.named_params().size() == 12);
  const std::vector<double> wq = d.attn_proj.wq.to_vector();
  for (size_t i = 0; i < cfg.d; ++i)
    for (size_t j = 0; j < cfg.d; ++j)
      CHECK(wq[i * cfg.d + j] == (i == j ? 1.0 : 0.0));
}

TEST_CASE("all ablations off reduces to the bare projection network") {
  const TrainConfig cfg = small_config();
  const ToyDenoiser model = init_denoiser(cfg);
  const Inputs in = make_inputs(cfg, 41);
  const AblationFlags off{false, false, false, false};
  const size_t t = 9;
  const Tensor out = denoise_step(model, in.z_t, t, in.masks, in.emb, cfg, off);

  // independent evaluation: out = (z W_in + b_in + temb W_temb) W_out + b_out
  const size_t d = cfg.d;
  const std::vector<double> z = in.z_t.to_vector();
  const std::vector<double> win = model.w_in.to_vector();
  const std::vector<double> bin = model.b_in.to_vector();
  const std::vector<double> wtemb = model.w_temb.to_vector();
  const std::vector<double> wout = model.w_out.to_vector();
  const std::vector<double> bout = model.b_out.to_vector();
  const std::vector<double> temb = timestep_embedding(t, d).to_vector();

  std::vector<double> tproj(d, 0.0);
  for (size_t j = 0; j < d; ++j)
    for (size_t k = 0; k < d; ++k) tproj[j] += temb[k] * wtemb[k * d + j];

  const size_t positions = cfg.f * cfg.h * cfg.w;
  const std::vector<double> got = out.to_vector();
  for (size_t p = 0; p < positions; ++p) {
    std::vector<double> hidden(d, 0.0);
    for (size_t j = 0; j < d; ++j) {
      for (size_t k = 0; k < d; ++k) hidden[j] += z[p * d + k] * win[k * d + j];
      hidden[j] += bin[j] + tproj[j];
    }
    for (size_t j = 0; j < d; ++j) {
      double want = bout[j];
      for (size_t k = 0; k < d; ++k) want += hidden[k] * wout[k * d + j];
      CHECK(got[p * d + j] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero region masks silence the region block bit-exactly") {
  const TrainConfig cfg = small_config();
  const ToyDenoiser model = init_denoiser(cfg);
  Inputs in = make_inputs(cfg, 42, /*mask_keep=*/0.0);  // all-zero masks
  const AblationFlags with_ris{true, true, true, false};
  const AblationFlags without{false, false, true, false};
  const Tensor a = denoise_step(model, in.z_t, 3, in.masks, in.emb, cfg, with_ris);
  const Tensor b = denoise_step(model, in.z_t, 3, in.masks, in.emb, cfg, without);
  CHECK(a.to_vector() == b.to_vector());  // bitwise
}

TEST_CASE("zero face mask silences the identity path bit-exactly") {
  const TrainConfig cfg = small_config();
  const ToyDenoiser model = init_denoiser(cfg);
  Inputs in = make_inputs(cfg, 43, 0.6);
  // rebuild with a zero face mask but a live hand mask
  in.masks.face = Tensor::zeros({1, cfg.f, cfg.h, cfg.w, 1});
  TrainConfig ucfg = cfg;
  ucfg.mask_combine = "union";  // keep the region block active via the hand mask
  const AblationFlags with_id{true, true, true, true};
  const AblationFlags without{true, true, true, false};
  const Tensor a = denoise_step(model, in.z_t, 3, in.masks, in.emb, ucfg, with_id);
  const Tensor b = denoise_step(model, in.z_t, 3, in.masks, in.emb, ucfg, without);
  CHECK(a.to_vector() == b.to_vector());
}

TEST_CASE("denoise_step input validation") {
  const TrainConfig cfg = small_config();
  const ToyDenoiser model = init_denoiser(cfg);
  const Inputs in = make_inputs(cfg, 44);
  const AblationFlags flags;
  try {
    denoise_step(model, in.z_t, cfg.T, in.masks, in.emb, cfg, flags);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StepOutOfRange);
  }
  Rng rng(1);
  const Tensor bad = Tensor::randn({1, cfg.f, cfg.h, cfg.w, cfg.d + 1}, rng);
  try {
    denoise_step(model, bad, 0, in.masks, in.emb, cfg, flags);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimMismatch);
  }
}

TEST_CASE("denoised output reacts to the timestep and the identity") {
  const TrainConfig cfg = small_config();
  const ToyDenoiser model = init_denoiser(cfg);
  const Inputs in = make_inputs(cfg, 45, 0.7);
  const AblationFlags flags;
  const Tensor at3 = denoise_step(model, in.z_t, 3, in.masks, in.emb, cfg, flags);
  const Tensor at9 = denoise_step(model, in.z_t, 9, in.masks, in.emb, cfg, flags);
  CHECK(at3.to_vector() != at9.to_vector());

  Rng rng(77);
  FaceEmbedding other{Tensor::randn({1, cfg.d_face}, rng)};
  const Tensor swapped = denoise_step(model, in.z_t, 3, in.masks, other, cfg, flags);
  CHECK(at3.to_vector() != swapped.to_vector());
}
