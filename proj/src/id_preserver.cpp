#include "interlat/id_preserver.hpp"

namespace interlat {

Tensor project_embedding(const FaceEmbedding& emb, const IdProjection& proj) {
  if (emb.vectors.rank() != 2 || proj.weights.rank() != 2 ||
      proj.bias.rank() != 1) {
    fail(ErrorKind::DimMismatch,
         "project_embedding: expected (e,d_face) rows, (d_face,d) weights, "
         "(d) bias");
  }
  if (emb.vectors.shape()[1] != proj.weights.shape()[0] ||
      proj.weights.shape()[1] != proj.bias.shape()[0]) {
    fail(ErrorKind::DimMismatch,
         "project_embedding: rows " + shape_str(emb.vectors.shape()) +
             " weights " + shape_str(proj.weights.shape()) + " bias " +
             shape_str(proj.bias.shape()));
  }
  return add(matmul(emb.vectors, proj.weights), proj.bias);
}

Tensor id_attend(const Tensor& states, const Tensor& projected,
                 const RegionMasks& masks, double alpha) {
  check_hidden_states(states, "id_attend");
  check_region_masks(masks, states.shape(), "id_attend");
  if (projected.rank() != 2 ||
      projected.shape()[1] != states.shape()[4]) {
    fail(ErrorKind::DimMismatch,
         "id_attend: embedding " + shape_str(projected.shape()) +
             " does not match channel dim " +
             std::to_string(states.shape()[4]));
  }
  Tensor spatial_out = spatial_cross_attn(states, projected);
  Tensor temporal_out = temporal_cross_attn(states, projected);
  Tensor mixed = mixer(spatial_out, temporal_out, alpha);
  return mul(mixed, masks.face);
}

Tensor fuse_outputs(const Tensor& attention_out, const Tensor& identity_out) {
  if (attention_out.shape() != identity_out.shape()) {
    fail(ErrorKind::ShapeMismatch,
         "fuse_outputs: " + shape_str(attention_out.shape()) + " vs " +
             shape_str(identity_out.shape()));
  }
  return add(attention_out, identity_out);
}

}  // namespace interlat
