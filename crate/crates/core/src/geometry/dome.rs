use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::Vec3;

use super::TriMesh;

/// Faces appended by [`enclose_dome`]: `4s(2s-1)` on the hemisphere (an apex
/// fan plus `s-1` bands of `4s` quads) and a `4s`-triangle floor fan, `8s²` in
/// total.
pub fn dome_face_count(subdivisions: usize) -> usize {
    8 * subdivisions * subdivisions
}

/// Appends a hemisphere of `radius` over a disc floor at `floor_y`, both facing
/// inward, so every ray leaving the scene terminates on geometry.
///
/// The dome is centered above the horizontal center of the mesh bounds (the
/// origin for an empty mesh); `subdivisions` rings span pole to rim, each with
/// `4·subdivisions` segments. The rim ring is shared with the floor, so the
/// enclosure is closed.
pub fn enclose_dome(mesh: &TriMesh, radius: f64, floor_y: f64, subdivisions: usize) -> Result<TriMesh> {
    if subdivisions < 1 {
        return Err(Error::invalid("dome needs at least one subdivision"));
    }
    if !(radius.is_finite() && radius > 0.0) || !floor_y.is_finite() {
        return Err(Error::invalid(format!(
            "dome radius {radius} and floor {floor_y} must be finite with a positive radius"
        )));
    }
    let center = if mesh.vertices.is_empty() {
        Vec3::new(0.0, floor_y, 0.0)
    } else {
        let c = mesh.bounds().center();
        Vec3::new(c.x, floor_y, c.z)
    };
    let reach = mesh.vertices.iter().map(|v| (v - center).norm()).fold(0.0, f64::max);
    if radius <= reach {
        return Err(Error::invalid(format!(
            "dome radius {radius} does not exceed the scene extent {reach} around {center:?}"
        )));
    }

    let s = subdivisions;
    let seg = 4 * s;
    let mut vertices = vec![center + Vec3::new(0.0, radius, 0.0)];
    for i in 1..=s {
        let theta = i as f64 * 0.5 * PI / s as f64;
        let (y, r) = if i == s {
            (floor_y, radius)
        } else {
            (center.y + radius * theta.cos(), radius * theta.sin())
        };
        for j in 0..seg {
            let phi = j as f64 * 2.0 * PI / seg as f64;
            vertices.push(Vec3::new(center.x + r * phi.cos(), y, center.z + r * phi.sin()));
        }
    }
    let floor_center = vertices.len();
    vertices.push(center);
    let ring = |i: usize, j: usize| 1 + (i - 1) * seg + j % seg;

    let mut faces = Vec::with_capacity(dome_face_count(s));
    for j in 0..seg {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..s {
        for j in 0..seg {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
            faces.push([a, c, d]);
            faces.push([a, d, b]);
        }
    }
    let dome_faces = faces.len();
    for j in 0..seg {
        faces.push([floor_center, ring(s, j), ring(s, j + 1)]);
    }

    // Dome faces look toward the center, floor faces look up.
    for (fi, f) in faces.iter_mut().enumerate() {
        let p = f.map(|i| vertices[i]);
        let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let inward = if fi < dome_faces {
            center - (p[0] + p[1] + p[2]) / 3.0
        } else {
            Vec3::y()
        };
        if n.dot(&inward) < 0.0 {
            f.swap(1, 2);
        }
    }

    let mut out = mesh.clone();
    out.corner_uvs = None;
    out.append(&TriMesh::new(vertices, faces)?);
    Ok(out)
}
