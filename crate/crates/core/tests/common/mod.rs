#![allow(dead_code)]

use lfbake::field::FactorizedField;
use lfbake::geometry::TriMesh;
use lfbake::pipeline::{self, PipelineConfig};
use lfbake::scene::{Camera, Intrinsics};
use lfbake::Vec3;

/// Coarse sphere mesh, an untrained D=8 field and a small direction grid.
pub fn small() -> (PipelineConfig, TriMesh, FactorizedField) {
    let mut cfg = PipelineConfig::default();
    for (k, v) in [
        ("grid_k", "24"),
        ("decimate_faces", "400"),
        ("dim", "8"),
        ("pos_width", "16"),
        ("dir_width", "16"),
        ("p", "4"),
        ("dir_elev", "9"),
        ("dir_azim", "16"),
        ("eval_cameras", "2"),
        ("eval_size", "24"),
    ] {
        cfg.set(k, v).unwrap();
    }
    let scene = pipeline::build_scene(&cfg);
    let (mesh, _) = pipeline::distill_mesh(&cfg, &scene).unwrap();
    let field = pipeline::initial_field(&cfg).unwrap();
    (cfg, mesh, field)
}

pub fn camera(eye: Vec3, size: u32) -> Camera {
    Camera::look_at(eye, Vec3::zeros(), Vec3::y(), Intrinsics::from_fov(size, size, 40.0)).unwrap()
}
