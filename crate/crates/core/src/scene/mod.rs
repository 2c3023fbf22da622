//! Ground-truth radiance fields standing in for a pre-trained teacher, plus a
//! quadrature volume renderer and pseudo-image generation.

mod camera;
mod fields;
mod pseudo;
mod ray;
mod volume;

pub use camera::{sample_camera_poses, BoundingSphere, Camera, Intrinsics};
pub use fields::{AnalyticScene, BoxGrid, HomogeneousSlab, RadianceField, TexturedSphere};
pub use pseudo::{
    generate_pseudo_images, render_oracle_image, shade_ray, GenerationMeta, PseudoImageSet, PseudoOptions,
    PseudoRecord, RenderMode, PSEUDO_MAGIC, PSEUDO_VERSION,
};
pub use ray::Ray;
pub use volume::{volume_render, volume_render_segment, Segment};
