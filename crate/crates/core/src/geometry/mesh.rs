use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};

/// Indexed triangle mesh. `corner_uvs`, when present, holds one normalized
/// atlas coordinate per face corner.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub corner_uvs: Option<Vec<[[f64; 2]; 3]>>,
}

const DEGENERATE_AREA: f64 = 1e-14;

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<TriMesh> {
        let m = TriMesh {
            vertices,
            faces,
            corner_uvs: None,
        };
        m.check_indices()?;
        Ok(m)
    }

    pub fn check_indices(&self) -> Result<()> {
        let n = self.vertices.len();
        if let Some((fi, f)) = self.faces.iter().enumerate().find(|(_, f)| f.iter().any(|&v| v >= n)) {
            return Err(Error::invalid(format!(
                "face {fi} {f:?} references a vertex outside 0..{n}"
            )));
        }
        if let Some(uvs) = &self.corner_uvs {
            if uvs.len() != self.faces.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} corner uv triples for {} faces",
                    uvs.len(),
                    self.faces.len()
                )));
            }
        }
        Ok(())
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    #[inline]
    pub fn corners(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.corners(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Unit normal following the right-hand rule, `None` for degenerate faces.
    pub fn face_normal(&self, face: usize) -> Option<Vec3> {
        let [a, b, c] = self.corners(face);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        (len > 2.0 * DEGENERATE_AREA).then(|| n / len)
    }

    pub fn centroid(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.corners(face);
        (a + b + c) / 3.0
    }

    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::empty();
        for v in &self.vertices {
            b.grow(v);
        }
        b
    }

    /// Signed volume enclosed by the mesh; positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.corners(f);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Appends `other`, offsetting its indices. Corner uvs are kept only if
    /// both meshes have them.
    pub fn append(&mut self, other: &TriMesh) {
        let offset = self.vertices.len();
        let had_faces = !self.faces.is_empty();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces.extend(other.faces.iter().map(|f| f.map(|v| v + offset)));
        self.corner_uvs = match (self.corner_uvs.take(), &other.corner_uvs) {
            (Some(mut a), Some(b)) => {
                a.extend_from_slice(b);
                Some(a)
            }
            (None, Some(b)) if !had_faces => Some(b.clone()),
            _ => None,
        };
    }

    /// Keeps faces for which `keep` holds and drops unreferenced vertices.
    /// Surviving faces and vertices keep their relative order.
    pub fn retain_faces(&self, keep: impl Fn(usize) -> bool) -> TriMesh {
        let kept: Vec<usize> = (0..self.faces.len()).filter(|&f| keep(f)).collect();
        let mut remap = vec![usize::MAX; self.vertices.len()];
        for &f in &kept {
            for &v in &self.faces[f] {
                remap[v] = 0;
            }
        }
        let mut vertices = Vec::new();
        for (v, slot) in remap.iter_mut().enumerate() {
            if *slot == 0 {
                *slot = vertices.len();
                vertices.push(self.vertices[v]);
            }
        }
        let faces = kept.iter().map(|&f| self.faces[f].map(|v| remap[v])).collect();
        let corner_uvs = self
            .corner_uvs
            .as_ref()
            .map(|uvs| kept.iter().map(|&f| uvs[f]).collect());
        TriMesh {
            vertices,
            faces,
            corner_uvs,
        }
    }

    /// Face count per undirected edge.
    pub(crate) fn edge_face_counts(&self) -> HashMap<(usize, usize), u32> {
        let mut edges: HashMap<(usize, usize), u32> = HashMap::with_capacity(self.faces.len() * 2);
        for f in &self.faces {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                if a == b {
                    continue;
                }
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    /// Connected component id per face (faces linked through shared edges),
    /// numbered in order of first appearance.
    pub fn face_components(&self) -> (Vec<usize>, usize) {
        let n = self.faces.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut first_face: HashMap<(usize, usize), usize> = HashMap::with_capacity(n * 2);
        for (fi, f) in self.faces.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                if a == b {
                    continue;
                }
                match first_face.entry((a.min(b), a.max(b))) {
                    std::collections::hash_map::Entry::Occupied(o) => {
                        let (ra, rb) = (find(&mut parent, *o.get()), find(&mut parent, fi));
                        if ra != rb {
                            parent[ra.max(rb)] = ra.min(rb);
                        }
                    }
                    std::collections::hash_map::Entry::Vacant(v) => {
                        v.insert(fi);
                    }
                }
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut ids = vec![usize::MAX; n];
        let mut count = 0;
        for f in 0..n {
            let r = find(&mut parent, f);
            if ids[r] == usize::MAX {
                ids[r] = count;
                count += 1;
            }
            label[f] = ids[r];
        }
        (label, count)
    }
}

/// Structural health of a mesh.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct MeshReport {
    pub vertices: usize,
    pub faces: usize,
    pub boundary_edges: usize,
    pub non_manifold_edges: usize,
    pub degenerate_faces: usize,
    pub components: usize,
}

impl MeshReport {
    pub fn is_closed_manifold(&self) -> bool {
        self.boundary_edges == 0 && self.non_manifold_edges == 0 && self.degenerate_faces == 0
    }
}

pub fn validate_mesh(mesh: &TriMesh) -> MeshReport {
    let edges = mesh.edge_face_counts();
    let degenerate_faces = (0..mesh.faces.len())
        .filter(|&f| {
            let [a, b, c] = mesh.faces[f];
            a == b || b == c || a == c || mesh.face_area(f) <= DEGENERATE_AREA
        })
        .count();
    MeshReport {
        vertices: mesh.vertices.len(),
        faces: mesh.faces.len(),
        boundary_edges: edges.values().filter(|&&c| c == 1).count(),
        non_manifold_edges: edges.values().filter(|&&c| c > 2).count(),
        degenerate_faces,
        components: mesh.face_components().1,
    }
}

/// Drops connected components whose face count is below
/// `min_face_fraction * total_faces`.
pub fn remove_small_components(mesh: &TriMesh, min_face_fraction: f64) -> Result<TriMesh> {
    if !(0.0..1.0).contains(&min_face_fraction) {
        return Err(Error::invalid(format!(
            "min_face_fraction must lie in [0, 1), got {min_face_fraction}"
        )));
    }
    let (label, count) = mesh.face_components();
    let mut sizes = vec![0usize; count];
    for &l in &label {
        sizes[l] += 1;
    }
    let threshold = min_face_fraction * mesh.faces.len() as f64;
    Ok(mesh.retain_faces(|f| sizes[label[f]] as f64 >= threshold))
}
