// Python bindings for the main operations: quantization, the attention block,
// the identity path, losses, metrics, the noise schedule, and clip synthesis.
// Everything crosses the boundary as float64 numpy arrays by value.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "interlat/attention.hpp"
#include "interlat/denoiser.hpp"
#include "interlat/error.hpp"
#include "interlat/id_preserver.hpp"
#include "interlat/latents.hpp"
#include "interlat/losses.hpp"
#include "interlat/metrics.hpp"
#include "interlat/quantize.hpp"
#include "interlat/schedule.hpp"
#include "interlat/synthdata.hpp"
#include "interlat/tensor.hpp"

namespace py = pybind11;
using namespace interlat;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const DoubleArray& arr) {
  Shape shape(arr.ndim());
  for (py::ssize_t i = 0; i < arr.ndim(); ++i)
    shape[i] = static_cast<size_t>(arr.shape(i));
  std::vector<double> data(arr.data(), arr.data() + arr.size());
  return Tensor::from_data(shape, data);
}

py::array_t<double> to_numpy(const Tensor& t) {
  const Shape& shape = t.shape();
  std::vector<py::ssize_t> dims(shape.begin(), shape.end());
  py::array_t<double> arr(dims);
  std::vector<double> data = t.to_vector();
  std::copy(data.begin(), data.end(), arr.mutable_data());
  return arr;
}

MaskCombine combine_from(const std::string& mode) {
  if (mode == "product") return MaskCombine::Product;
  if (mode == "union") return MaskCombine::Union;
  fail(ErrorKind::ConfigInvalid, "mask_combine must be 'product' or 'union'");
}

RegionMasks masks_from(const DoubleArray& hand, const DoubleArray& face) {
  return RegionMasks{to_tensor(hand), to_tensor(face)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "interaction-latent ops: quantization, region attention, losses, "
            "metrics, synthetic clips";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(PyExc_RuntimeError, e.what());
    }
  });

  m.def(
      "soft_quantize",
      [](const DoubleArray& states, const DoubleArray& codebook, double tau) {
        Tensor weights;
        const Tensor quantized = soft_quantize(
            to_tensor(states), to_tensor(codebook), QuantConfig{tau}, &weights);
        return py::make_tuple(to_numpy(quantized), to_numpy(weights));
      },
      py::arg("states"), py::arg("codebook"), py::arg("tau") = 1.0);

  m.def(
      "spatial_cross_attn",
      [](const DoubleArray& states, const DoubleArray& codebook) {
        return to_numpy(spatial_cross_attn(to_tensor(states), to_tensor(codebook)));
      },
      py::arg("states"), py::arg("codebook"));

  m.def(
      "temporal_cross_attn",
      [](const DoubleArray& states, const DoubleArray& codebook) {
        return to_numpy(temporal_cross_attn(to_tensor(states), to_tensor(codebook)));
      },
      py::arg("states"), py::arg("codebook"));

  m.def(
      "mixer",
      [](const DoubleArray& spatial_out, const DoubleArray& temporal_out,
         double alpha) {
        return to_numpy(mixer(to_tensor(spatial_out), to_tensor(temporal_out), alpha));
      },
      py::arg("spatial_out"), py::arg("temporal_out"), py::arg("alpha") = 0.5);

  m.def(
      "apply_region_mask",
      [](const DoubleArray& states, const DoubleArray& hand,
         const DoubleArray& face, const std::string& combine) {
        return to_numpy(apply_region_mask(to_tensor(states),
                                          masks_from(hand, face),
                                          combine_from(combine)));
      },
      py::arg("states"), py::arg("hand"), py::arg("face"),
      py::arg("combine") = "product");

  m.def(
      "region_attention_block",
      [](const DoubleArray& states, const DoubleArray& spatial,
         const DoubleArray& temporal, const DoubleArray& hand,
         const DoubleArray& face, double tau, double alpha,
         const std::string& combine, bool quantize) {
        InteractionLatents lat{to_tensor(spatial), to_tensor(temporal)};
        return to_numpy(region_attention_block(
            to_tensor(states), lat, masks_from(hand, face), QuantConfig{tau},
            MixerConfig{alpha, combine_from(combine)}, quantize));
      },
      py::arg("states"), py::arg("spatial"), py::arg("temporal"),
      py::arg("hand"), py::arg("face"), py::arg("tau") = 1.0,
      py::arg("alpha") = 0.5, py::arg("combine") = "product",
      py::arg("quantize") = true);

  m.def(
      "project_embedding",
      [](const DoubleArray& vectors, const DoubleArray& weights,
         const DoubleArray& bias) {
        return to_numpy(project_embedding(FaceEmbedding{to_tensor(vectors)},
                                          IdProjection{to_tensor(weights),
                                                       to_tensor(bias)}));
      },
      py::arg("vectors"), py::arg("weights"), py::arg("bias"));

  m.def(
      "id_attend",
      [](const DoubleArray& states, const DoubleArray& projected,
         const DoubleArray& hand, const DoubleArray& face, double alpha) {
        return to_numpy(id_attend(to_tensor(states), to_tensor(projected),
                                  masks_from(hand, face), alpha));
      },
      py::arg("states"), py::arg("projected"), py::arg("hand"), py::arg("face"),
      py::arg("alpha") = 0.5);

  m.def(
      "orthogonality_loss",
      [](const DoubleArray& latents, bool normalize_rows) {
        return orthogonality_loss(to_tensor(latents), normalize_rows).item();
      },
      py::arg("latents"), py::arg("normalize_rows") = false);

  m.def(
      "diffusion_loss",
      [](const DoubleArray& target, const DoubleArray& prediction,
         const DoubleArray& hand, const DoubleArray& face, double lambda_hand,
         double lambda_face, bool weighted_mean) {
        LossConfig cfg;
        cfg.lambda_hand = lambda_hand;
        cfg.lambda_face = lambda_face;
        cfg.weighted_mean = weighted_mean;
        LatentPair pair{to_tensor(target), to_tensor(prediction),
                        masks_from(hand, face)};
        return diffusion_loss(pair, cfg).item();
      },
      py::arg("target"), py::arg("prediction"), py::arg("hand"),
      py::arg("face"), py::arg("lambda_hand") = 5.0,
      py::arg("lambda_face") = 2.0, py::arg("weighted_mean") = false);

  m.def(
      "total_loss",
      [](double diff, double ortho, double beta) {
        return total_loss(Tensor::scalar(diff), Tensor::scalar(ortho), beta).item();
      },
      py::arg("diff"), py::arg("ortho"), py::arg("beta") = 0.0001);

  m.def(
      "amplification_weights",
      [](const DoubleArray& mask, double lambda_r) {
        return to_numpy(amplification_weights(to_tensor(mask), lambda_r));
      },
      py::arg("mask"), py::arg("lambda_r"));

  m.def(
      "max_pool_mask",
      [](const DoubleArray& mask, size_t factor) {
        return to_numpy(max_pool_mask(to_tensor(mask), factor));
      },
      py::arg("mask"), py::arg("factor"));

  m.def(
      "timestep_embedding",
      [](size_t t, size_t dim) { return to_numpy(timestep_embedding(t, dim)); },
      py::arg("t"), py::arg("dim"));

  m.def(
      "linear_schedule",
      [](size_t T, double beta_start, double beta_end) {
        NoiseSchedule s = make_linear_schedule(T, beta_start, beta_end);
        py::dict out;
        out["betas"] = s.betas;
        out["alphas"] = s.alphas;
        out["alpha_bars"] = s.alpha_bars;
        return out;
      },
      py::arg("T"), py::arg("beta_start") = 1e-4, py::arg("beta_end") = 0.02);

  m.def(
      "add_noise",
      [](const DoubleArray& z0, const DoubleArray& eps, size_t t, size_t T,
         double beta_start, double beta_end) {
        NoiseSchedule s = make_linear_schedule(T, beta_start, beta_end);
        return to_numpy(add_noise(s, to_tensor(z0), to_tensor(eps), t));
      },
      py::arg("z0"), py::arg("eps"), py::arg("t"), py::arg("T"),
      py::arg("beta_start") = 1e-4, py::arg("beta_end") = 0.02);

  m.def(
      "psnr",
      [](const DoubleArray& a, const DoubleArray& b, double range, double cap_db) {
        return psnr(to_tensor(a), to_tensor(b), range, cap_db);
      },
      py::arg("a"), py::arg("b"), py::arg("range") = 2.0,
      py::arg("cap_db") = 100.0);

  m.def(
      "ssim",
      [](const DoubleArray& a, const DoubleArray& b, double range) {
        return ssim(to_tensor(a), to_tensor(b), range);
      },
      py::arg("a"), py::arg("b"), py::arg("range") = 2.0);

  m.def(
      "l1_distance",
      [](const DoubleArray& a, const DoubleArray& b) {
        return l1_distance(to_tensor(a), to_tensor(b));
      },
      py::arg("a"), py::arg("b"));

  m.def("interaction_classes", []() { return interaction_classes(); });

  m.def(
      "generate_clip",
      [](const std::string& label, uint64_t seed, size_t f, size_t h, size_t w,
         size_t c, size_t d_face) {
        SynthClip clip = generate_clip(label, seed, ClipDims{f, h, w, c, d_face});
        py::dict out;
        out["frames"] = to_numpy(clip.frames);
        out["hand_mask"] = to_numpy(clip.hand_mask);
        out["face_mask"] = to_numpy(clip.face_mask);
        out["identity"] = to_numpy(clip.identity);
        out["class_label"] = clip.class_label;
        return out;
      },
      py::arg("label"), py::arg("seed"), py::arg("f") = 4, py::arg("h") = 8,
      py::arg("w") = 8, py::arg("c") = 16, py::arg("d_face") = 16);
}
