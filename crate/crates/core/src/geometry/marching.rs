use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::math::Vec3;

use super::mc_tables::TRI_TABLE;
use super::{DensityGrid, TriMesh};

const CORNERS: [(usize, usize, usize); 8] = [
    (0, 0, 0),
    (1, 0, 0),
    (1, 1, 0),
    (0, 1, 0),
    (0, 0, 1),
    (1, 0, 1),
    (1, 1, 1),
    (0, 1, 1),
];

const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 0),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 4),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Midpoint of the grid's value range.
pub fn default_iso(grid: &DensityGrid) -> f64 {
    let (lo, hi) = grid.min_max();
    0.5 * (lo + hi)
}

/// Extracts the `iso` level set with linear edge interpolation. Vertices on
/// shared lattice edges are welded, and triangles are wound so normals point
/// from high density toward low density (outward for a solid).
pub fn marching_cubes(grid: &DensityGrid, iso: f64) -> Result<TriMesh> {
    let (lo, hi) = grid.min_max();
    if !(iso > lo && iso < hi) {
        return Err(Error::invalid(format!(
            "iso level {iso} not strictly inside the grid value range [{lo}, {hi}]"
        )));
    }
    let n = grid.side;
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    // Keyed by (lower lattice index, axis).
    let mut edge_vertex: HashMap<(usize, u8), usize> = HashMap::new();

    for k in 0..n - 1 {
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let lattice = |c: usize| {
                    let (dx, dy, dz) = CORNERS[c];
                    (i + dx, j + dy, k + dz)
                };
                let mut values = [0.0; 8];
                let mut case = 0usize;
                for c in 0..8 {
                    let (x, y, z) = lattice(c);
                    values[c] = grid.value(x, y, z);
                    if values[c] < iso {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                let row = &TRI_TABLE[case];
                let mut t = 0;
                while t < 16 && row[t] >= 0 {
                    let mut tri = [0usize; 3];
                    for (slot, &e) in tri.iter_mut().zip(&row[t..t + 3]) {
                        let (ca, cb) = EDGES[e as usize];
                        let (a, b) = (lattice(ca), lattice(cb));
                        let (lo_pt, axis) = if a <= b {
                            (a, axis_between(a, b))
                        } else {
                            (b, axis_between(b, a))
                        };
                        let key = (grid.index(lo_pt.0, lo_pt.1, lo_pt.2), axis);
                        *slot = *edge_vertex.entry(key).or_insert_with(|| {
                            let (va, vb) = (values[ca], values[cb]);
                            let pa = grid.point(a.0, a.1, a.2);
                            let pb = grid.point(b.0, b.1, b.2);
                            let s = ((iso - va) / (vb - va)).clamp(0.0, 1.0);
                            vertices.push(pa + (pb - pa) * s);
                            vertices.len() - 1
                        });
                    }
                    if tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2] {
                        faces.push(tri);
                    }
                    t += 3;
                }
            }
        }
    }
    let mesh = TriMesh::new(vertices, faces)?;
    // Drop zero-area slivers produced when iso passes exactly through a lattice point.
    Ok(mesh.retain_faces(|f| mesh.face_area(f) > 1e-14))
}

fn axis_between(a: (usize, usize, usize), b: (usize, usize, usize)) -> u8 {
    if a.0 != b.0 {
        0
    } else if a.1 != b.1 {
        1
    } else {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_density_grid, validate_mesh};
    use crate::math::Aabb;
    use crate::scene::TexturedSphere;

    #[test]
    fn one_corner_above_iso_gives_one_triangle() {
        let mut values = vec![0.0; 8];
        values[0] = 1.0;
        let grid = DensityGrid {
            side: 2,
            bounds: Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)),
            values,
        };
        let m = marching_cubes(&grid, 0.5).unwrap();
        assert_eq!(m.faces.len(), 1);
        let n = m.face_normal(0).unwrap();
        // Points away from the dense corner at the origin.
        assert!(n.dot(&Vec3::repeat(1.0)) > 0.0);
        for v in &m.vertices {
            assert!((v.sum() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_grid_rejected() {
        let grid = DensityGrid {
            side: 3,
            bounds: Aabb::cube(1.0),
            values: vec![2.0; 27],
        };
        assert!(marching_cubes(&grid, 2.0).is_err());
        assert!(marching_cubes(&grid, 1.0).is_err());
    }

    #[test]
    fn sphere_indicator_surface() {
        let s = TexturedSphere::indicator(1.0, 10.0);
        let grid = sample_density_grid(&s, 64, Aabb::cube(1.5)).unwrap();
        let m = marching_cubes(&grid, 5.0).unwrap();
        let cell = grid.cell_size().x;
        let mut hist = [0usize; 4];
        for v in &m.vertices {
            let dev = (v.norm() - 1.0).abs();
            assert!(dev <= 2.0 * cell, "vertex {v:?} deviates by {dev}");
            hist[((dev / cell) * 2.0).floor().min(3.0) as usize] += 1;
        }
        // Most vertices sit within one cell of the analytic surface.
        assert!(hist[0] + hist[1] > m.vertices.len() * 9 / 10, "{hist:?}");
        let r = validate_mesh(&m);
        assert_eq!(r.boundary_edges, 0);
        assert_eq!(r.non_manifold_edges, 0);
        assert_eq!(r.components, 1);
        assert!(m.signed_volume() > 0.0, "outward winding");
    }
}
