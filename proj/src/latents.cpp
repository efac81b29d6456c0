#include "interlat/latents.hpp"

namespace interlat {

InteractionLatents init_latents(size_t n, size_t m, size_t d, uint64_t seed,
                                double scale) {
  if (n < 1 || m < 1 || d < 1) {
    fail(ErrorKind::InvalidDimension,
         "init_latents: counts and dimension must be >= 1");
  }
  if (scale < 0.0) {
    fail(ErrorKind::InvalidDimension, "init_latents: scale must be >= 0");
  }
  Rng rng(seed);
  InteractionLatents lat;
  lat.spatial = Tensor::randn({n, d}, rng, scale);
  lat.temporal = Tensor::randn({m, d}, rng, scale);
  return lat;
}

Tensor orthogonality_loss(const Tensor& latents, bool normalize_rows) {
  if (latents.rank() != 2) {
    fail(ErrorKind::DimMismatch, "orthogonality_loss: expected (k,d) matrix, got " +
                                     shape_str(latents.shape()));
  }
  size_t k = latents.shape()[0];
  if (k < 2) {
    fail(ErrorKind::TooFewLatents,
         "orthogonality_loss: need at least 2 rows, got " + std::to_string(k));
  }
  Tensor rows = latents;
  if (normalize_rows) {
    Tensor norms = sqrt_elem(reduce_sum(mul(rows, rows), 1, /*keepdim=*/true));
    rows = divide(rows, norms);  // (k,d) / (k,1)
  }
  Tensor gram = matmul(rows, transpose(rows, {1, 0}));  // (k,k)
  // Constant off-diagonal selector: 1 everywhere except the diagonal.
  std::vector<double> selector(k * k, 1.0);
  for (size_t i = 0; i < k; ++i) selector[i * k + i] = 0.0;
  Tensor off = mul(gram, Tensor::from_data({k, k}, selector, latents.dtype()));
  double denom = static_cast<double>(k) * static_cast<double>(k - 1);
  return scale(sum_all(mul(off, off)), 1.0 / denom);
}

Tensor combined_ortho_loss(const InteractionLatents& lat,
                           bool normalize_rows) {
  return add(orthogonality_loss(lat.spatial, normalize_rows),
             orthogonality_loss(lat.temporal, normalize_rows));
}

}  // namespace interlat
