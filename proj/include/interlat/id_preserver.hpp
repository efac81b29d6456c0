#pragma once

#include "interlat/attention.hpp"
#include "interlat/tensor.hpp"

namespace interlat {

// Opaque identity embedding rows (e, d_face); the generator of these vectors
// is outside this library's scope.
struct FaceEmbedding {
  Tensor vectors;
};

// Affine map from embedding space into the hidden-state channel space.
struct IdProjection {
  Tensor weights;  // (d_face, d)
  Tensor bias;     // (d)
};

// rows * weights + bias -> (e, d)
Tensor project_embedding(const FaceEmbedding& emb, const IdProjection& proj);

// Spatial and temporal cross-attention of the hidden states against the
// projected embedding rows, mixed with alpha, then gated by the face mask
// only. Returns the identity contribution (zero wherever the face mask is 0).
Tensor id_attend(const Tensor& states, const Tensor& projected,
                 const RegionMasks& masks, double alpha);

// Elementwise sum of the region-attention output and the identity path.
Tensor fuse_outputs(const Tensor& attention_out, const Tensor& identity_out);

}  // namespace interlat
