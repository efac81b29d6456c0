"""Interaction-latent ops over float64 numpy arrays (thin wrapper over _core)."""

from ._core import (
    add_noise,
    amplification_weights,
    apply_region_mask,
    diffusion_loss,
    generate_clip,
    id_attend,
    interaction_classes,
    l1_distance,
    linear_schedule,
    max_pool_mask,
    mixer,
    orthogonality_loss,
    project_embedding,
    psnr,
    region_attention_block,
    soft_quantize,
    spatial_cross_attn,
    ssim,
    temporal_cross_attn,
    timestep_embedding,
    total_loss,
)

__all__ = [
    "add_noise",
    "amplification_weights",
    "apply_region_mask",
    "diffusion_loss",
    "generate_clip",
    "id_attend",
    "interaction_classes",
    "l1_distance",
    "linear_schedule",
    "max_pool_mask",
    "mixer",
    "orthogonality_loss",
    "project_embedding",
    "psnr",
    "region_attention_block",
    "soft_quantize",
    "spatial_cross_attn",
    "ssim",
    "temporal_cross_attn",
    "timestep_embedding",
    "total_loss",
]
