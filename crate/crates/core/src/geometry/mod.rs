//! Collision-mesh extraction and conditioning, plus first-hit ray queries.

mod bvh;
mod decimate;
mod dome;
mod grid;
mod marching;
mod mc_tables;
pub(crate) mod mesh;
mod obj;

pub use bvh::{intersect_triangle, Bvh, BvhNode, Hit, DET_EPSILON, MAX_LEAF_FACES};
pub use decimate::{decimate, Decimated};
pub use dome::{dome_face_count, enclose_dome};
pub use grid::{sample_density_grid, DensityGrid};
pub use marching::{default_iso, marching_cubes};
pub use mesh::{remove_small_components, validate_mesh, MeshReport, TriMesh};
pub use obj::{obj_string, parse_obj, read_obj, write_obj};
