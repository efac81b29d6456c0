#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "interlat/error.hpp"
#include "interlat/rng.hpp"
#include "interlat/synthdata.hpp"

using namespace interlat;

namespace {

std::filesystem::path temp_dir(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  return p;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::UnknownClass;  // sentinel: no throw
}

}  // namespace

TEST_CASE("the taxonomy has 18 distinct labels") {
  const auto& labels = interaction_classes();
  CHECK(labels.size() == 18);
  std::set<std::string> uniq(labels.begin(), labels.end());
  CHECK(uniq.size() == 18);
  for (size_t i = 0; i < labels.size(); ++i) CHECK(class_index(labels[i]) == i);
  CHECK(kind_of([] { class_index("XX-YY"); }) == ErrorKind::UnknownClass);
  CHECK(kind_of([] { generate_clip("LH-??", 1, ClipDims{}); }) == ErrorKind::UnknownClass);
}

TEST_CASE("clip invariants hold for every class") {
  ClipDims dims;
  dims.f = 6;  // enough frames to see approach/contact/retreat
  for (const std::string& label : interaction_classes()) {
    CAPTURE(label);
    const SynthClip clip = generate_clip(label, 31337, dims);
    REQUIRE(clip.frames.shape() == Shape{dims.f, dims.h, dims.w, dims.c});
    REQUIRE(clip.hand_mask.shape() == Shape{dims.f, dims.h, dims.w, 1});
    REQUIRE(clip.face_mask.shape() == Shape{dims.f, dims.h, dims.w, 1});
    REQUIRE(clip.identity.shape() == Shape{dims.d_face});
    CHECK(clip.class_label == label);

    const std::vector<double> frames = clip.frames.to_vector();
    for (double v : frames) {
      CHECK(v <= 1.0);
      CHECK(v >= -1.0);
    }
    const std::vector<double> hand = clip.hand_mask.to_vector();
    const std::vector<double> face = clip.face_mask.to_vector();
    for (double v : hand) CHECK((v == 0.0 || v == 1.0));
    for (double v : face) CHECK((v == 0.0 || v == 1.0));

    const size_t plane = dims.h * dims.w;
    // frame 0: pre-contact, masks disjoint
    for (size_t p = 0; p < plane; ++p) CHECK(hand[p] * face[p] == 0.0);
    // face support in every frame; at least one contact frame in the clip
    size_t contact_frames = 0;
    for (size_t fi = 0; fi < dims.f; ++fi) {
      double face_cells = 0.0;
      size_t overlap = 0;
      for (size_t p = 0; p < plane; ++p) {
        face_cells += face[fi * plane + p];
        if (face[fi * plane + p] > 0.0 && hand[fi * plane + p] > 0.0) ++overlap;
      }
      CHECK(face_cells > 0.0);
      if (overlap > 0) ++contact_frames;
    }
    CHECK(contact_frames > 0);

    // identity is unit norm
    double norm = 0.0;
    for (double v : clip.identity.to_vector()) norm += v * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));

    // motion: the mid-clip contact frame differs from the pre-contact frame
    double mid_dyn = 0.0;
    const size_t mid = dims.f / 2;
    for (size_t i = 0; i < plane * dims.c; ++i)
      mid_dyn = std::max(mid_dyn, std::fabs(frames[mid * plane * dims.c + i] - frames[i]));
    CHECK(mid_dyn > 0.05);
  }
}

TEST_CASE("clips are deterministic per (label, seed) and vary across seeds") {
  ClipDims dims;
  const SynthClip a = generate_clip("RC-TF", 99, dims);
  const SynthClip b = generate_clip("RC-TF", 99, dims);
  CHECK(a.frames.to_vector() == b.frames.to_vector());
  CHECK(a.hand_mask.to_vector() == b.hand_mask.to_vector());
  CHECK(a.face_mask.to_vector() == b.face_mask.to_vector());
  CHECK(a.identity.to_vector() == b.identity.to_vector());

  const SynthClip c = generate_clip("RC-TF", 100, dims);
  CHECK(a.frames.to_vector() != c.frames.to_vector());
}

TEST_CASE("clip dimension validation") {
  ClipDims dims;
  dims.f = 1;
  CHECK(kind_of([&] { generate_clip("LH-NP", 1, dims); }) == ErrorKind::InvalidDimension);
  dims = ClipDims{};
  dims.h = 3;
  CHECK(kind_of([&] { generate_clip("LH-NP", 1, dims); }) == ErrorKind::InvalidDimension);
  dims = ClipDims{};
  dims.c = 0;
  CHECK(kind_of([&] { generate_clip("LH-NP", 1, dims); }) == ErrorKind::InvalidDimension);
}

TEST_CASE("dataset build: classes cycle, split is every tenth clip, files round-trip") {
  const auto dir = temp_dir("interlat_ds_roundtrip");
  ClipDims dims;
  dims.f = 2;
  dims.h = 6;
  dims.w = 6;
  dims.c = 3;
  dims.d_face = 5;
  const Dataset ds = build_dataset(36, 123, dims, dir.string());
  REQUIRE(ds.clips.size() == 36);
  REQUIRE(ds.records.size() == 36);

  const auto& labels = interaction_classes();
  for (size_t i = 0; i < 36; ++i) {
    CHECK(ds.records[i].class_label == labels[i % 18]);
    CHECK(ds.records[i].split == ((i % 10 == 9) ? "test" : "train"));
    CHECK(ds.records[i].seed == Rng::mix(123, i));
    CHECK(ds.clips[i].seed == ds.records[i].seed);
  }
  CHECK(split_indices(ds, "test") == std::vector<size_t>{9, 19, 29});
  CHECK(split_indices(ds, "train").size() == 33);

  // generation is literally generate_clip at the recorded seed
  const SynthClip direct = generate_clip(labels[4], Rng::mix(123, 4), dims);
  CHECK(ds.clips[4].frames.to_vector() == direct.frames.to_vector());

  const Dataset back = load_dataset(dir.string());
  REQUIRE(back.clips.size() == 36);
  CHECK(back.dims.f == dims.f);
  CHECK(back.dims.d_face == dims.d_face);
  for (size_t i : {size_t(0), size_t(9), size_t(35)}) {
    CHECK(back.clips[i].frames.to_vector() == ds.clips[i].frames.to_vector());
    CHECK(back.clips[i].hand_mask.to_vector() == ds.clips[i].hand_mask.to_vector());
    CHECK(back.clips[i].face_mask.to_vector() == ds.clips[i].face_mask.to_vector());
    CHECK(back.clips[i].identity.to_vector() == ds.clips[i].identity.to_vector());
    CHECK(back.records[i].split == ds.records[i].split);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset of 180 clips splits 162/18 with a uniform histogram") {
  const auto dir = temp_dir("interlat_ds_180");
  ClipDims dims;
  dims.f = 2;
  dims.h = 4;
  dims.w = 4;
  dims.c = 1;
  dims.d_face = 2;
  const Dataset ds = build_dataset(180, 5, dims, dir.string());
  CHECK(split_indices(ds, "train").size() == 162);
  CHECK(split_indices(ds, "test").size() == 18);
  std::map<std::string, int> hist;
  for (const auto& rec : ds.records) ++hist[rec.class_label];
  for (const auto& [label, count] : hist) CHECK(count == 10);
  CHECK(hist.size() == 18);
  std::filesystem::remove_all(dir);
}

TEST_CASE("too few clips is a configuration error") {
  const auto dir = temp_dir("interlat_ds_small");
  CHECK(kind_of([&] { build_dataset(5, 1, ClipDims{}, dir.string()); }) ==
        ErrorKind::ConfigInvalid);
}

TEST_CASE("parallel generation produces identical bytes") {
  const auto dir_a = temp_dir("interlat_ds_t1");
  const auto dir_b = temp_dir("interlat_ds_t3");
  ClipDims dims;
  dims.f = 2;
  dims.h = 5;
  dims.w = 5;
  dims.c = 2;
  dims.d_face = 3;

  setenv("IA_THREADS", "1", 1);
  build_dataset(20, 999, dims, dir_a.string());
  setenv("IA_THREADS", "3", 1);
  build_dataset(20, 999, dims, dir_b.string());
  unsetenv("IA_THREADS");

  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir_a / "clips.bin") == slurp(dir_b / "clips.bin"));
  CHECK(slurp(dir_a / "manifest.json") == slurp(dir_b / "manifest.json"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("bad IA_THREADS value is rejected") {
  const auto dir = temp_dir("interlat_ds_badthreads");
  setenv("IA_THREADS", "zero", 1);
  CHECK(kind_of([&] { build_dataset(18, 1, ClipDims{}, dir.string()); }) ==
        ErrorKind::ConfigInvalid);
  unsetenv("IA_THREADS");
}

TEST_CASE("load_dataset failure modes") {
  CHECK(kind_of([] { load_dataset("/nonexistent/interlat"); }) == ErrorKind::IoError);

  const auto dir = temp_dir("interlat_ds_corrupt");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "manifest.json") << "{broken";
  CHECK(kind_of([&] { load_dataset(dir.string()); }) == ErrorKind::ConfigInvalid);

  std::ofstream(dir / "manifest.json") << "{\"version\": 7}";
  CHECK(kind_of([&] { load_dataset(dir.string()); }) == ErrorKind::FormatVersionMismatch);

  std::ofstream(dir / "manifest.json")
      << "{\"version\": 1, \"dims\": {\"f\": 2, \"h\": 4, \"w\": 4, \"c\": 1, \"d_face\": 2}, "
         "\"clips\": []}";
  CHECK(kind_of([&] { load_dataset(dir.string()); }) == ErrorKind::DatasetEmpty);
  std::filesystem::remove_all(dir);
}
