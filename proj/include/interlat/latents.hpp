#pragma once

#include <cstdint>

#include "interlat/tensor.hpp"

namespace interlat {

// Two learnable codebooks of interaction vectors: spatial rows attend within a
// frame, temporal rows across frames. Both matrices are optimizer state.
struct InteractionLatents {
  Tensor spatial;   // (n, d)
  Tensor temporal;  // (m, d)
};

// Seeded normal(0, scale^2) initialization; deterministic per argument tuple.
// scale = 0 yields all-zero latents.
InteractionLatents init_latents(size_t n, size_t m, size_t d, uint64_t seed,
                                double scale = 0.02);

// Mean squared off-diagonal of the Gram matrix S = L L^T, averaged over the
// k(k-1) off-diagonal slots. normalize_rows switches to the row-normalized
// Gram (cosine similarities) instead of raw dot products.
Tensor orthogonality_loss(const Tensor& latents, bool normalize_rows = false);

// Sum of the spatial and temporal orthogonality terms.
Tensor combined_ortho_loss(const InteractionLatents& lat,
                           bool normalize_rows = false);

}  // namespace interlat
