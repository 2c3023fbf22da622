use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use nalgebra::{Matrix3, Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::math::Vec3;

use super::TriMesh;

/// Result of [`decimate`]. `stalled` is set when no legal collapse remained
/// before the target was reached; the mesh is then the best effort so far.
#[derive(Debug, Clone)]
pub struct Decimated {
    pub mesh: TriMesh,
    pub stalled: bool,
}

/// Smallest cosine allowed between a face normal before and after a collapse.
const MIN_NORMAL_COS: f64 = 0.2;

#[derive(Debug)]
struct Candidate {
    cost: f64,
    a: usize,
    b: usize,
    stamp_a: u32,
    stamp_b: u32,
    target: Vec3,
}

impl PartialEq for Candidate {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Candidate {
    // Reversed so the max-heap pops the cheapest edge; ties go to lower ids.
    fn cmp(&self, o: &Self) -> Ordering {
        o.cost
            .total_cmp(&self.cost)
            .then_with(|| (o.a, o.b).cmp(&(self.a, self.b)))
    }
}

struct State {
    pos: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vert_faces: Vec<Vec<usize>>,
    quadric: Vec<Matrix4<f64>>,
    stamp: Vec<u32>,
    alive: Vec<bool>,
    locked: Vec<bool>,
}

impl State {
    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self.vert_faces[v]
            .iter()
            .flat_map(|&f| self.faces[f])
            .filter(|&x| x != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn candidate(&self, a: usize, b: usize) -> Candidate {
        let (a, b) = (a.min(b), a.max(b));
        let q = self.quadric[a] + self.quadric[b];
        let (pa, pb) = (self.pos[a], self.pos[b]);
        let mid = (pa + pb) * 0.5;
        let err = |p: &Vec3| {
            let h = Vector4::new(p.x, p.y, p.z, 1.0);
            (h.transpose() * q * h)[0].max(0.0)
        };
        let a3: Matrix3<f64> = q.fixed_view::<3, 3>(0, 0).into();
        let rhs = -Vec3::new(q[(0, 3)], q[(1, 3)], q[(2, 3)]);
        let edge = (pb - pa).norm();
        let optimal = a3
            .lu()
            .solve(&rhs)
            .filter(|p| p.iter().all(|x| x.is_finite()) && (p - mid).norm() <= edge);
        let mut best = (err(&mid), mid);
        for p in optimal.into_iter().chain([pa, pb]) {
            let e = err(&p);
            if e < best.0 {
                best = (e, p);
            }
        }
        Candidate {
            cost: best.0,
            a,
            b,
            stamp_a: self.stamp[a],
            stamp_b: self.stamp[b],
            target: best.1,
        }
    }

    fn try_collapse(&mut self, c: &Candidate) -> bool {
        let (a, b) = (c.a, c.b);
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let common: Vec<usize> = na.iter().copied().filter(|x| nb.binary_search(x).is_ok()).collect();
        if common.len() != 2 {
            return false;
        }
        // The merged vertex and both wing vertices must keep degree >= 3.
        if na.len() + nb.len() - 4 < 3 || common.iter().any(|&w| self.neighbors(w).len() < 4) {
            return false;
        }
        let shared: Vec<usize> = self.vert_faces[a]
            .iter()
            .copied()
            .filter(|&f| self.faces[f].contains(&b))
            .collect();
        if shared.len() != 2 {
            return false;
        }
        for &v in &[a, b] {
            for &f in &self.vert_faces[v] {
                if shared.contains(&f) {
                    continue;
                }
                let old = self.faces[f].map(|i| self.pos[i]);
                let new = self.faces[f].map(|i| if i == a || i == b { c.target } else { self.pos[i] });
                let n_old = (old[1] - old[0]).cross(&(old[2] - old[0]));
                let n_new = (new[1] - new[0]).cross(&(new[2] - new[0]));
                let (lo, ln) = (n_old.norm(), n_new.norm());
                if ln <= 1e-12 * lo.max(1e-300) || n_old.dot(&n_new) < MIN_NORMAL_COS * lo * ln {
                    return false;
                }
            }
        }

        self.pos[a] = c.target;
        let qb = self.quadric[b];
        self.quadric[a] += qb;
        for &f in &shared {
            self.face_alive[f] = false;
        }
        let moved: Vec<usize> = std::mem::take(&mut self.vert_faces[b]);
        for f in moved {
            if !self.face_alive[f] {
                continue;
            }
            for i in self.faces[f].iter_mut() {
                if *i == b {
                    *i = a;
                }
            }
            self.vert_faces[a].push(f);
        }
        for &w in &common {
            self.vert_faces[w].retain(|f| !shared.contains(f));
        }
        let alive = &self.face_alive;
        self.vert_faces[a].retain(|&f| alive[f]);
        self.alive[b] = false;
        self.stamp[a] += 1;
        self.stamp[b] += 1;
        true
    }
}

fn plane_quadric(p: [Vec3; 3]) -> Matrix4<f64> {
    let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let twice_area = n.norm();
    if twice_area == 0.0 {
        return Matrix4::zeros();
    }
    let unit = n / twice_area;
    let plane = Vector4::new(unit.x, unit.y, unit.z, -unit.dot(&p[0]));
    plane * plane.transpose() * (0.5 * twice_area)
}

/// Quadric-error-metric edge collapse down to at most `target_faces` faces.
///
/// Boundary vertices are locked, collapses must satisfy the link condition and
/// may not flip or degenerate any surrounding face. Per-corner uvs are dropped.
pub fn decimate(mesh: &TriMesh, target_faces: usize) -> Result<Decimated> {
    if target_faces < 4 {
        return Err(Error::invalid(format!(
            "decimation target must be at least 4 faces, got {target_faces}"
        )));
    }
    mesh.check_indices()?;
    if target_faces >= mesh.faces.len() {
        return Ok(Decimated {
            mesh: mesh.clone(),
            stalled: false,
        });
    }
    let nv = mesh.vertices.len();
    let mut st = State {
        pos: mesh.vertices.clone(),
        faces: mesh.faces.clone(),
        face_alive: vec![true; mesh.faces.len()],
        vert_faces: vec![Vec::new(); nv],
        quadric: vec![Matrix4::zeros(); nv],
        stamp: vec![0; nv],
        alive: vec![true; nv],
        locked: vec![false; nv],
    };
    for (fi, f) in mesh.faces.iter().enumerate() {
        let q = plane_quadric(f.map(|i| mesh.vertices[i]));
        for &v in f {
            st.vert_faces[v].push(fi);
            st.quadric[v] += q;
        }
    }
    let edge_counts: HashMap<(usize, usize), u32> = mesh.edge_face_counts();
    for (&(a, b), &n) in &edge_counts {
        if n != 2 {
            st.locked[a] = true;
            st.locked[b] = true;
        }
    }
    let mut edges: Vec<(usize, usize)> = edge_counts.keys().copied().collect();
    edges.sort_unstable();
    let mut heap: BinaryHeap<Candidate> = edges
        .iter()
        .filter(|(a, b)| !st.locked[*a] && !st.locked[*b])
        .map(|&(a, b)| st.candidate(a, b))
        .collect();

    let mut face_count = mesh.faces.len();
    while face_count > target_faces {
        let Some(c) = heap.pop() else { break };
        if !st.alive[c.a] || !st.alive[c.b] || st.stamp[c.a] != c.stamp_a || st.stamp[c.b] != c.stamp_b {
            continue;
        }
        if !st.try_collapse(&c) {
            continue;
        }
        face_count -= 2;
        for n in st.neighbors(c.a) {
            if !st.locked[n] {
                heap.push(st.candidate(c.a, n));
            }
        }
    }

    let stalled = face_count > target_faces;
    let faces: Vec<[usize; 3]> = st
        .faces
        .iter()
        .zip(&st.face_alive)
        .filter(|(_, &alive)| alive)
        .map(|(f, _)| *f)
        .collect();
    let compact = TriMesh {
        vertices: st.pos,
        faces,
        corner_uvs: None,
    };
    let out = compact.retain_faces(|_| true);
    Ok(Decimated { mesh: out, stalled })
}
