#include "interlat/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "interlat/checkpoint.hpp"
#include "interlat/error.hpp"
#include "interlat/rng.hpp"
#include "json.hpp"

namespace interlat {
namespace {

using nlohmann::json;

constexpr double kMaskThreshold = 0.35;

struct Motion {
  bool swipe;        // horizontal pass across the whole face
  bool from_left;    // approach side (or swipe start side)
  double ty_off;     // target offset from face center, in face-sigma units
  double tx_off;
  double sigma;      // hand blob width in cell units at an 8-wide grid
};

Motion motion_for_class(const std::string& label) {
  static const std::map<std::string, Motion> table = {
      {"LH-NP", {false, true, 0.0, 0.0, 0.9}},
      {"RH-NP", {false, false, 0.0, 0.0, 0.9}},
      {"LH-EB", {false, true, -1.0, -0.6, 1.0}},
      {"LH-FH", {false, true, -1.4, 0.0, 1.2}},
      {"LH-CH", {false, true, 1.4, 0.0, 1.1}},
      {"LH-ER", {false, true, 0.0, -1.8, 1.0}},
      {"RH-EB", {false, false, -1.0, 0.6, 1.0}},
      {"RH-FH", {false, false, -1.4, 0.0, 1.2}},
      {"RH-CH", {false, false, 1.4, 0.0, 1.1}},
      {"RH-ER", {false, false, 0.0, 1.8, 1.0}},
      {"LC-SF", {false, true, 0.4, -1.2, 0.8}},
      {"RC-SF", {false, false, 0.4, 1.2, 0.8}},
      {"LC-TF", {false, true, 0.4, -1.2, 1.1}},
      {"RC-TF", {false, false, 0.4, 1.2, 1.1}},
      {"LC-TH", {false, true, 0.4, -1.2, 1.4}},
      {"RC-TH", {false, false, 0.4, 1.2, 1.4}},
      {"LR-FS", {true, true, 0.2, 0.0, 1.6}},
      {"RL-FS", {true, false, 0.2, 0.0, 1.6}},
  };
  auto it = table.find(label);
  if (it == table.end()) fail(ErrorKind::UnknownClass, "unknown interaction class '" + label + "'");
  return it->second;
}

size_t env_threads() {
  const char* raw = std::getenv("IA_THREADS");
  if (!raw || !*raw) return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 1)
    fail(ErrorKind::ConfigInvalid, std::string("IA_THREADS must be a positive integer, got '") + raw + "'");
  return static_cast<size_t>(v);
}

void check_dims(const ClipDims& dims) {
  if (dims.f < 2) fail(ErrorKind::InvalidDimension, "clip needs f >= 2 frames");
  if (dims.h < 4 || dims.w < 4) fail(ErrorKind::InvalidDimension, "clip needs h, w >= 4");
  if (dims.c < 1) fail(ErrorKind::InvalidDimension, "clip needs c >= 1 channels");
  if (dims.d_face < 1) fail(ErrorKind::InvalidDimension, "clip needs d_face >= 1");
}

}  // namespace

const std::vector<std::string>& interaction_classes() {
  static const std::vector<std::string> labels = {
      "LH-NP", "RH-NP",
      "LH-EB", "LH-FH", "LH-CH", "LH-ER",
      "RH-EB", "RH-FH", "RH-CH", "RH-ER",
      "LC-SF", "RC-SF", "LC-TF", "RC-TF", "LC-TH", "RC-TH",
      "LR-FS", "RL-FS",
  };
  return labels;
}

size_t class_index(const std::string& label) {
  const auto& labels = interaction_classes();
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return i;
  fail(ErrorKind::UnknownClass, "unknown interaction class '" + label + "'");
}

SynthClip generate_clip(const std::string& label, uint64_t seed, const ClipDims& dims) {
  check_dims(dims);
  const Motion motion = motion_for_class(label);
  const double grid = static_cast<double>(std::min(dims.h, dims.w));

  Rng rng(seed);
  // Face placement and appearance.
  const double fcy = (static_cast<double>(dims.h) - 1.0) / 2.0 + (rng.uniform() - 0.5) * 0.8;
  const double fcx = (static_cast<double>(dims.w) - 1.0) / 2.0 + (rng.uniform() - 0.5) * 0.8;
  const double face_sigma = 0.22 * grid * (1.0 + 0.2 * (rng.uniform() - 0.5));
  std::vector<double> face_profile(dims.c), hand_profile(dims.c);
  for (size_t ch = 0; ch < dims.c; ++ch) face_profile[ch] = 0.35 + 0.6 * rng.uniform();
  for (size_t ch = 0; ch < dims.c; ++ch) hand_profile[ch] = 0.35 + 0.6 * rng.uniform();
  const double hand_sigma = motion.sigma * (grid / 8.0) * (1.0 + 0.2 * (rng.uniform() - 0.5));

  // Contact target, kept inside the grid interior.
  auto clamp_to = [](double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); };
  const double ty = clamp_to(fcy + motion.ty_off * face_sigma, 1.2, static_cast<double>(dims.h) - 2.2);
  const double tx = clamp_to(fcx + motion.tx_off * face_sigma, 1.2, static_cast<double>(dims.w) - 2.2);

  // Start position: far enough off-grid that the thresholded hand mask is
  // empty on the first frame.
  const double margin = 1.6 * hand_sigma + 0.8;
  const double start_x = motion.from_left ? -margin : static_cast<double>(dims.w) - 1.0 + margin;
  const double end_x = motion.from_left ? static_cast<double>(dims.w) - 1.0 + margin : -margin;
  const double start_y = ty;  // approach along the target row

  std::vector<double> frames(dims.f * dims.h * dims.w * dims.c);
  std::vector<double> hand_mask(dims.f * dims.h * dims.w);
  std::vector<double> face_mask(dims.f * dims.h * dims.w);

  for (size_t fi = 0; fi < dims.f; ++fi) {
    const double phase = static_cast<double>(fi) / static_cast<double>(dims.f - 1);
    double hcy, hcx;
    if (motion.swipe) {
      hcy = start_y;
      hcx = start_x + (end_x - start_x) * phase;
    } else {
      const double u = std::min(1.0, std::max(0.0, 1.5 * (1.0 - std::fabs(1.0 - 2.0 * phase))));
      hcy = start_y + (ty - start_y) * u;
      hcx = start_x + (tx - start_x) * u;
    }

    const size_t plane = fi * dims.h * dims.w;
    size_t overlap_cells = 0;
    for (size_t y = 0; y < dims.h; ++y) {
      for (size_t x = 0; x < dims.w; ++x) {
        const double dyf = static_cast<double>(y) - fcy;
        const double dxf = static_cast<double>(x) - fcx;
        const double face_blob = std::exp(-(dyf * dyf + dxf * dxf) / (2.0 * face_sigma * face_sigma));
        const double dyh = static_cast<double>(y) - hcy;
        const double dxh = static_cast<double>(x) - hcx;
        const double hand_blob = std::exp(-(dyh * dyh + dxh * dxh) / (2.0 * hand_sigma * hand_sigma));
        const double fm = face_blob > kMaskThreshold ? 1.0 : 0.0;
        const double hm = hand_blob > kMaskThreshold ? 1.0 : 0.0;
        face_mask[plane + y * dims.w + x] = fm;
        hand_mask[plane + y * dims.w + x] = hm;
        if (fm > 0.0 && hm > 0.0) ++overlap_cells;
      }
    }

    // Contact dent: the face appearance dips around the press point, with
    // depth growing with the measured mask overlap.
    const double dent_amp = 0.7 * std::min(1.0, static_cast<double>(overlap_cells) / 6.0);
    const double dent_sigma = 0.75 * hand_sigma;
    for (size_t y = 0; y < dims.h; ++y) {
      for (size_t x = 0; x < dims.w; ++x) {
        const double dyf = static_cast<double>(y) - fcy;
        const double dxf = static_cast<double>(x) - fcx;
        const double face_blob = std::exp(-(dyf * dyf + dxf * dxf) / (2.0 * face_sigma * face_sigma));
        const double dyh = static_cast<double>(y) - hcy;
        const double dxh = static_cast<double>(x) - hcx;
        const double hand_blob = std::exp(-(dyh * dyh + dxh * dxh) / (2.0 * hand_sigma * hand_sigma));
        const double dent = dent_amp * std::exp(-(dyh * dyh + dxh * dxh) / (2.0 * dent_sigma * dent_sigma));
        for (size_t ch = 0; ch < dims.c; ++ch) {
          const double value =
              face_profile[ch] * (face_blob - dent) + hand_profile[ch] * hand_blob;
          frames[((plane + y * dims.w + x)) * dims.c + ch] = clamp_to(value, -1.0, 1.0);
        }
      }
    }
  }

  std::vector<double> identity(dims.d_face);
  double norm_sq = 0.0;
  for (size_t i = 0; i < dims.d_face; ++i) {
    identity[i] = rng.normal();
    norm_sq += identity[i] * identity[i];
  }
  if (norm_sq < 1e-24) identity[0] = 1.0, norm_sq = 1.0;
  const double inv_norm = 1.0 / std::sqrt(norm_sq);
  for (double& v : identity) v *= inv_norm;

  SynthClip clip;
  clip.frames = Tensor::from_data({dims.f, dims.h, dims.w, dims.c}, frames);
  clip.hand_mask = Tensor::from_data({dims.f, dims.h, dims.w, 1}, hand_mask);
  clip.face_mask = Tensor::from_data({dims.f, dims.h, dims.w, 1}, face_mask);
  clip.identity = Tensor::from_data({dims.d_face}, identity);
  clip.class_label = label;
  clip.seed = seed;
  return clip;
}

Dataset build_dataset(size_t num_clips, uint64_t seed, const ClipDims& dims,
                      const std::string& out_dir) {
  check_dims(dims);
  const auto& labels = interaction_classes();
  if (num_clips < labels.size())
    fail(ErrorKind::ConfigInvalid, "need at least " + std::to_string(labels.size()) +
                                       " clips (one per class), got " + std::to_string(num_clips));

  Dataset ds;
  ds.dims = dims;
  ds.clips.resize(num_clips);
  ds.records.resize(num_clips);

  const size_t threads = std::min(env_threads(), num_clips);
  auto worker = [&](size_t first) {
    for (size_t i = first; i < num_clips; i += threads) {
      const std::string& label = labels[i % labels.size()];
      const uint64_t clip_seed = Rng::mix(seed, i);
      ds.clips[i] = generate_clip(label, clip_seed, dims);
      ds.records[i] = ClipRecord{i, label, (i % 10 == 9) ? "test" : "train", clip_seed};
    }
  };
  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (size_t k = 0; k < threads; ++k) pool.emplace_back(worker, k);
    for (auto& th : pool) th.join();
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create dataset dir " + out_dir + ": " + ec.message());

  CheckpointEntries entries;
  entries.reserve(num_clips * 4);
  for (size_t i = 0; i < num_clips; ++i) {
    const std::string base = "clip" + std::to_string(i);
    entries.emplace_back(base + ".frames", ds.clips[i].frames);
    entries.emplace_back(base + ".hand", ds.clips[i].hand_mask);
    entries.emplace_back(base + ".face", ds.clips[i].face_mask);
    entries.emplace_back(base + ".identity", ds.clips[i].identity);
  }
  save_checkpoint(out_dir + "/clips.bin", entries);

  json manifest;
  manifest["version"] = 1;
  manifest["dims"] = {{"f", dims.f}, {"h", dims.h}, {"w", dims.w}, {"c", dims.c}, {"d_face", dims.d_face}};
  json clip_list = json::array();
  std::map<std::string, size_t> histogram;
  for (const ClipRecord& rec : ds.records) {
    clip_list.push_back({{"id", rec.id}, {"class", rec.class_label}, {"split", rec.split}, {"seed", rec.seed}});
    ++histogram[rec.class_label];
  }
  manifest["clips"] = std::move(clip_list);
  manifest["histogram"] = histogram;

  std::ofstream out(out_dir + "/manifest.json");
  if (!out) fail(ErrorKind::IoError, "cannot write manifest in " + out_dir);
  out << manifest.dump(2) << "\n";
  if (!out) fail(ErrorKind::IoError, "manifest write failed in " + out_dir);
  return ds;
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) fail(ErrorKind::IoError, "cannot open manifest in " + dir);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigInvalid, std::string("manifest parse error: ") + e.what());
  }
  if (!manifest.is_object() || manifest.value("version", 0) != 1)
    fail(ErrorKind::FormatVersionMismatch, "unsupported manifest version in " + dir);

  Dataset ds;
  try {
    const json& jd = manifest.at("dims");
    ds.dims.f = jd.at("f").get<size_t>();
    ds.dims.h = jd.at("h").get<size_t>();
    ds.dims.w = jd.at("w").get<size_t>();
    ds.dims.c = jd.at("c").get<size_t>();
    ds.dims.d_face = jd.at("d_face").get<size_t>();
    for (const json& jc : manifest.at("clips")) {
      ClipRecord rec;
      rec.id = jc.at("id").get<uint64_t>();
      rec.class_label = jc.at("class").get<std::string>();
      rec.split = jc.at("split").get<std::string>();
      rec.seed = jc.at("seed").get<uint64_t>();
      ds.records.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigInvalid, std::string("manifest missing fields: ") + e.what());
  }
  check_dims(ds.dims);
  if (ds.records.empty()) fail(ErrorKind::DatasetEmpty, "manifest lists no clips in " + dir);

  const CheckpointEntries entries = load_checkpoint(dir + "/clips.bin");
  ds.clips.resize(ds.records.size());
  for (size_t i = 0; i < ds.records.size(); ++i) {
    const std::string base = "clip" + std::to_string(ds.records[i].id);
    SynthClip& clip = ds.clips[i];
    clip.frames = checkpoint_get(entries, base + ".frames");
    clip.hand_mask = checkpoint_get(entries, base + ".hand");
    clip.face_mask = checkpoint_get(entries, base + ".face");
    clip.identity = checkpoint_get(entries, base + ".identity");
    clip.class_label = ds.records[i].class_label;
    clip.seed = ds.records[i].seed;
    const Shape want_frames = {ds.dims.f, ds.dims.h, ds.dims.w, ds.dims.c};
    const Shape want_mask = {ds.dims.f, ds.dims.h, ds.dims.w, 1};
    if (clip.frames.shape() != want_frames || clip.hand_mask.shape() != want_mask ||
        clip.face_mask.shape() != want_mask || clip.identity.shape() != Shape{ds.dims.d_face})
      fail(ErrorKind::ConfigInvalid, "clip payload shapes disagree with manifest dims");
  }
  return ds;
}

std::vector<size_t> split_indices(const Dataset& ds, const std::string& split) {
  std::vector<size_t> out;
  for (size_t i = 0; i < ds.records.size(); ++i)
    if (ds.records[i].split == split) out.push_back(i);
  return out;
}

}  // namespace interlat
