#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "interlat/tensor.hpp"

namespace interlat {

// Hand/face interaction sub-classes: pinching (NP), stroking (EB eyebrow,
// FH forehead, CH chin, ER ear), poking the cheek (SF single / TF two /
// TH three fingers), and full-face swipes (FS, by direction). The leading
// letters give handedness or swipe direction.
const std::vector<std::string>& interaction_classes();  // 18 labels

size_t class_index(const std::string& label);  // UnknownClass if not listed

struct SynthClip {
  Tensor frames;     // (f, h, w, c), values in [-1, 1]
  Tensor hand_mask;  // (f, h, w, 1), binary
  Tensor face_mask;  // (f, h, w, 1), binary
  Tensor identity;   // (d_face,), unit norm
  std::string class_label;
  uint64_t seed = 0;
};

struct ClipDims {
  size_t f = 4;
  size_t h = 8;
  size_t w = 8;
  size_t c = 16;
  size_t d_face = 16;
};

// Deterministic per (label, seed, dims): a static face blob with per-channel
// appearance, a hand blob that approaches the class target, holds contact,
// and retreats, plus a contact dent in the face appearance scaled by the
// measured mask overlap. Frame 0 masks are disjoint; the face mask is
// non-empty in every frame. dims need f >= 2, h/w >= 4, c >= 1, d_face >= 1.
SynthClip generate_clip(const std::string& label, uint64_t seed, const ClipDims& dims);

struct ClipRecord {
  uint64_t id = 0;
  std::string class_label;
  std::string split;  // "train" or "test"
  uint64_t seed = 0;
};

struct Dataset {
  ClipDims dims;
  std::vector<SynthClip> clips;
  std::vector<ClipRecord> records;  // parallel to clips
};

// Generates num_clips clips (class = index mod 18, per-clip seed mixed from
// the dataset seed, every 10th index starting at 9 goes to the test split)
// and writes <out_dir>/clips.bin plus <out_dir>/manifest.json. num_clips must
// cover every class at least once (>= 18). Honors IA_THREADS for generation;
// output is identical for any thread count.
Dataset build_dataset(size_t num_clips, uint64_t seed, const ClipDims& dims,
                      const std::string& out_dir);

Dataset load_dataset(const std::string& dir);

// Convenience: indices of clips in a split ("train" or "test").
std::vector<size_t> split_indices(const Dataset& ds, const std::string& split);

}  // namespace interlat
