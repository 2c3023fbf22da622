use crate::error::{Error, Result};
use crate::geometry::TriMesh;
use crate::math::Vec3;

/// Texels owned by one face: `⌈p²/2⌉`.
pub fn texel_count(p: usize) -> usize {
    (p * p).div_ceil(2)
}

pub const DEFAULT_MAX_ATLAS_WIDTH: usize = 8192;

/// Per-face texel packing. Faces `2q` and `2q + 1` share quad `q`, a `p`-wide
/// cell (`p + 1` tall for odd `p`), laid out row-major with `quads_per_row`
/// quads per atlas row.
///
/// Inside a face, with `s = b1·p` and `t = b2·p` (`b1`, `b2` the barycentric
/// weights of corners 1 and 2), texels are numbered as:
/// 1. the full unit squares `(x, y)` with `x + y ≤ p - 2`, row by row;
/// 2. the `p` half squares cut by the hypotenuse, `k = 0..p`, paired as
///    `(0, 1), (2, 3), ...` into `⌈p/2⌉` texels (odd `p` leaves `k = p-1` alone).
///
/// The even face of a quad stores square `(x, y)` at quad pixel `(x, y)` and
/// diagonal texel `j` at `(j, p-1-j)`. The odd face is rotated by 180°: square
/// `(x, y)` at `(p-1-x, p-1-y)` and diagonal texel `j` at `(p-1-j, j)`, except
/// that for odd `p` its last diagonal texel sits at `(0, p)` in the extra row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TexelLayout {
    pub p: usize,
    pub texels_per_face: usize,
    pub n_faces: usize,
    pub quads_per_row: usize,
    pub width: usize,
    pub height: usize,
}

/// Which part of a face a texel covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TexelCell {
    Square { x: usize, y: usize },
    Diagonal { j: usize },
}

/// Packs `n_faces` faces with `p` texels per triangle side into an atlas no
/// wider or taller than `max_width`.
pub fn layout_atlas(n_faces: usize, p: usize, max_width: usize) -> Result<TexelLayout> {
    if n_faces == 0 || p == 0 {
        return Err(Error::invalid(format!(
            "atlas layout needs faces and texels (n_faces={n_faces}, p={p})"
        )));
    }
    let n_quads = n_faces.div_ceil(2);
    let fit = max_width / p;
    let rows_fit = max_width / (p + p % 2);
    let narrowest = if rows_fit == 0 { fit } else { n_quads.div_ceil(rows_fit) };
    let quads_per_row = ((n_quads as f64).sqrt().ceil() as usize).max(narrowest).min(fit).max(1);
    TexelLayout::with_quads_per_row(n_faces, p, quads_per_row, max_width)
}

impl TexelLayout {
    /// Layout with an explicit row width, as recorded in a manifest.
    pub fn with_quads_per_row(n_faces: usize, p: usize, quads_per_row: usize, max_width: usize) -> Result<TexelLayout> {
        if n_faces == 0 || p == 0 || quads_per_row == 0 {
            return Err(Error::invalid(format!(
                "degenerate atlas layout (n_faces={n_faces}, p={p}, quads_per_row={quads_per_row})"
            )));
        }
        let n_quads = n_faces.div_ceil(2);
        let cell_h = if p.is_multiple_of(2) { p } else { p + 1 };
        let width = quads_per_row * p;
        let height = n_quads.div_ceil(quads_per_row) * cell_h;
        if width > max_width || height > max_width {
            return Err(Error::invalid(format!(
                "atlas of {width}x{height} pixels for {n_faces} faces at p={p} exceeds {max_width}; use a smaller p or fewer faces"
            )));
        }
        Ok(TexelLayout {
            p,
            texels_per_face: texel_count(p),
            n_faces,
            quads_per_row,
            width,
            height,
        })
    }

    pub fn cell_height(&self) -> usize {
        if self.p.is_multiple_of(2) {
            self.p
        } else {
            self.p + 1
        }
    }

    fn squares(&self) -> usize {
        self.p * (self.p - 1) / 2
    }

    /// Geometric cell of texel `texel` of a face.
    pub fn cell(&self, texel: usize) -> TexelCell {
        let p = self.p;
        let sq = self.squares();
        if texel >= sq {
            return TexelCell::Diagonal { j: texel - sq };
        }
        let mut rem = texel;
        let mut y = 0;
        while rem >= p - 1 - y {
            rem -= p - 1 - y;
            y += 1;
        }
        TexelCell::Square { x: rem, y }
    }

    fn texel_of_cell(&self, c: TexelCell) -> usize {
        match c {
            TexelCell::Square { x, y } => y * (self.p - 1) - y * y.saturating_sub(1) / 2 + x,
            TexelCell::Diagonal { j } => self.squares() + j,
        }
    }

    fn quad_origin(&self, face: usize) -> (usize, usize) {
        let q = face / 2;
        (
            (q % self.quads_per_row) * self.p,
            (q / self.quads_per_row) * self.cell_height(),
        )
    }

    /// Atlas pixel `(x, y)` holding `texel` of `face`.
    pub fn texel_pixel(&self, face: usize, texel: usize) -> (usize, usize) {
        let p = self.p;
        let (ox, oy) = self.quad_origin(face);
        let (lx, ly) = match (face % 2, self.cell(texel)) {
            (0, TexelCell::Square { x, y }) => (x, y),
            (0, TexelCell::Diagonal { j }) => (j, p - 1 - j),
            (_, TexelCell::Square { x, y }) => (p - 1 - x, p - 1 - y),
            (_, TexelCell::Diagonal { j }) => {
                if p % 2 == 1 && j == p / 2 {
                    (0, p)
                } else {
                    (p - 1 - j, j)
                }
            }
        };
        (ox + lx, oy + ly)
    }

    /// Inverse of [`texel_pixel`](Self::texel_pixel); `None` for padding.
    pub fn pixel_texel(&self, x: usize, y: usize) -> Option<(usize, usize)> {
        let p = self.p;
        let (qx, lx) = (x / p, x % p);
        let ch = self.cell_height();
        let (qy, ly) = (y / ch, y % ch);
        if qx >= self.quads_per_row {
            return None;
        }
        let q = qy * self.quads_per_row + qx;
        let (face, cell) = if ly == p {
            (lx == 0).then_some((2 * q + 1, TexelCell::Diagonal { j: p / 2 }))?
        } else if lx + ly + 2 <= p {
            (2 * q, TexelCell::Square { x: lx, y: ly })
        } else if lx + ly >= p {
            (
                2 * q + 1,
                TexelCell::Square {
                    x: p - 1 - lx,
                    y: p - 1 - ly,
                },
            )
        } else if 2 * lx < p {
            (2 * q, TexelCell::Diagonal { j: lx })
        } else {
            (2 * q + 1, TexelCell::Diagonal { j: p - 1 - lx })
        };
        (face < self.n_faces).then(|| (face, self.texel_of_cell(cell)))
    }

    /// Texel of a face containing the point with barycentric weights `bary`.
    pub fn texel_at(&self, bary: &[f64; 3]) -> usize {
        let p = self.p;
        let pf = p as f64;
        let x = ((bary[1] * pf).floor().max(0.0) as usize).min(p - 1);
        let y = ((bary[2] * pf).floor().max(0.0) as usize).min(p - 1);
        if x + y >= p - 1 {
            self.squares() + x / 2
        } else {
            self.texel_of_cell(TexelCell::Square { x, y })
        }
    }

    /// Barycentric weights of the texel's sample point: the center of a full
    /// square, or the centroid of the one or two half squares of a diagonal
    /// texel. Every sample is strictly inside the face.
    pub fn texel_barycentric(&self, texel: usize) -> [f64; 3] {
        let pf = self.p as f64;
        let (s, t) = match self.cell(texel) {
            TexelCell::Square { x, y } => (x as f64 + 0.5, y as f64 + 0.5),
            TexelCell::Diagonal { j } => {
                let k = 2 * j;
                if k + 1 < self.p {
                    (k as f64 + 5.0 / 6.0, pf - k as f64 - 7.0 / 6.0)
                } else {
                    (k as f64 + 1.0 / 3.0, pf - 1.0 - k as f64 + 1.0 / 3.0)
                }
            }
        };
        let (b1, b2) = (s / pf, t / pf);
        [1.0 - b1 - b2, b1, b2]
    }

    /// Normalized OBJ texture coordinates (origin bottom-left) of the three
    /// corners of `face`.
    pub fn corner_uvs(&self, face: usize) -> [[f64; 2]; 3] {
        let p = self.p;
        let (ox, oy) = self.quad_origin(face);
        let local = if face.is_multiple_of(2) {
            [(0, 0), (p, 0), (0, p)]
        } else {
            [(p, p), (0, p), (p, 0)]
        };
        let (w, h) = (self.width as f64, self.height as f64);
        local.map(|(lx, ly)| [(ox + lx) as f64 / w, 1.0 - (oy + ly) as f64 / h])
    }

    pub fn total_texels(&self) -> usize {
        self.n_faces * self.texels_per_face
    }

    /// Used-pixel mask, row-major.
    pub fn used_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.width * self.height];
        for f in 0..self.n_faces {
            for t in 0..self.texels_per_face {
                let (x, y) = self.texel_pixel(f, t);
                m[y * self.width + x] = true;
            }
        }
        m
    }
}

/// World position sampled by `texel` of `face`.
pub fn texel_world_position(mesh: &TriMesh, face: usize, texel: usize, layout: &TexelLayout) -> Result<Vec3> {
    if face >= mesh.faces.len() || texel >= layout.texels_per_face {
        return Err(Error::invalid(format!(
            "texel {texel} of face {face} is outside {} faces x {} texels",
            mesh.faces.len(),
            layout.texels_per_face
        )));
    }
    let b = layout.texel_barycentric(texel);
    let [a, bb, c] = mesh.corners(face);
    Ok(a * b[0] + bb * b[1] + c * b[2])
}

/// Copy of `mesh` whose corner uvs address its atlas slots.
pub fn with_atlas_uvs(mesh: &TriMesh, layout: &TexelLayout) -> Result<TriMesh> {
    if mesh.faces.len() != layout.n_faces {
        return Err(Error::DimensionMismatch(format!(
            "mesh has {} faces, layout {}",
            mesh.faces.len(),
            layout.n_faces
        )));
    }
    let mut m = mesh.clone();
    m.corner_uvs = Some((0..layout.n_faces).map(|f| layout.corner_uvs(f)).collect());
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn texel_counts() {
        assert_eq!(texel_count(6), 18);
        assert_eq!(texel_count(12), 72);
        assert_eq!(texel_count(1), 1);
        assert_eq!(texel_count(7), 25);
        for p in 1..=64 {
            assert_eq!(texel_count(p), (p * p).div_ceil(2));
        }
    }

    #[test]
    fn small_layouts() {
        let l = layout_atlas(2, 6, 8192).unwrap();
        assert_eq!((l.width, l.height), (6, 6));
        let l = layout_atlas(3, 6, 8192).unwrap();
        assert_eq!(l.quads_per_row, 2);
        assert_eq!((l.width, l.height), (12, 6));
        assert!(layout_atlas(100_000, 12, 256).is_err());
        assert!(layout_atlas(0, 6, 8192).is_err());
    }

    #[test]
    fn packing_is_a_bijection() {
        for p in 1..=9 {
            let l = layout_atlas(100, p, 8192).unwrap();
            let mut used = HashSet::new();
            for f in 0..100 {
                for t in 0..l.texels_per_face {
                    let (x, y) = l.texel_pixel(f, t);
                    assert!(x < l.width && y < l.height);
                    assert!(used.insert((x, y)), "p={p} pixel reused");
                    assert_eq!(l.pixel_texel(x, y), Some((f, t)), "p={p} f={f} t={t}");
                }
            }
            let mut mapped = 0;
            for y in 0..l.height {
                for x in 0..l.width {
                    if let Some((f, t)) = l.pixel_texel(x, y) {
                        assert_eq!(l.texel_pixel(f, t), (x, y));
                        mapped += 1;
                    }
                }
            }
            assert_eq!(mapped, l.total_texels());
        }
    }

    #[test]
    fn samples_lie_inside_and_map_back() {
        for p in 1..=12 {
            let l = layout_atlas(2, p, 8192).unwrap();
            for t in 0..l.texels_per_face {
                let b = l.texel_barycentric(t);
                assert!(b.iter().all(|&x| x > 0.0), "p={p} t={t} {b:?}");
                match l.cell(t) {
                    TexelCell::Square { .. } => assert_eq!(l.texel_at(&b), t, "p={p} t={t}"),
                    TexelCell::Diagonal { j } => {
                        for k in (2 * j..2 * j + 2).filter(|&k| k < p) {
                            let pf = p as f64;
                            let (s, tt) = ((k as f64 + 1.0 / 3.0) / pf, (pf - 1.0 - k as f64 + 1.0 / 3.0) / pf);
                            assert_eq!(l.texel_at(&[1.0 - s - tt, s, tt]), t, "p={p} half {k}");
                        }
                    }
                }
            }
        }
        let l = layout_atlas(2, 1, 8192).unwrap();
        let b = l.texel_barycentric(0);
        for x in b {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn texel_mean_near_centroid() {
        let mesh = TriMesh::new(
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.3, 0.8, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let l = layout_atlas(1, 6, 8192).unwrap();
        let mean = (0..18)
            .map(|t| texel_world_position(&mesh, 0, t, &l).unwrap())
            .sum::<Vec3>()
            / 18.0;
        let centroid = mesh.centroid(0);
        let shortest = (mesh.vertices[1] - mesh.vertices[2]).norm().min(0.8544);
        assert!((mean - centroid).norm() < 0.02 * shortest, "{mean:?} {centroid:?}");
        assert!(texel_world_position(&mesh, 0, 18, &l).is_err());
        assert!(texel_world_position(&mesh, 1, 0, &l).is_err());
    }

    #[test]
    fn corner_uvs_frame_each_half_quad() {
        let l = layout_atlas(4, 6, 8192).unwrap();
        let uv = l.corner_uvs(3);
        // Face 3 is the odd half of quad 1 (top right of a 2x1 quad grid).
        assert_eq!(uv[0], [1.0, 0.0]);
        assert_eq!(uv[1], [0.5, 0.0]);
        assert_eq!(uv[2], [1.0, 1.0]);
    }
}
