//! Distill an analytic radiance field into a collision mesh plus four quantized
//! light-field embedding atlases, and render the result without evaluating any
//! network.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`scene`] provides ground-truth radiance fields and renders pseudo-images.
//! 2. [`geometry`] extracts a collision mesh from the field's density and answers
//!    first-hit queries.
//! 3. [`field`] fits a factorized light field (position and direction MLPs whose
//!    embeddings combine through a sigmoid of their inner product).
//! 4. [`baking`] tabulates the embeddings per mesh texel and per view direction,
//!    quantizes them to 8 bits and writes an asset package that [`render`]
//!    consumes.
//!
//! [`pipeline`] wires the stages together from a flat key-value config.

pub mod baking;
pub mod error;
pub mod field;
pub mod geometry;
pub mod math;
pub mod par;
pub mod pipeline;
pub mod render;
pub mod scene;
pub mod seed;

pub use error::{Error, ErrorKind, Result};
pub use math::{Aabb, Rgb, Vec3};
