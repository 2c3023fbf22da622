use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};
use crate::scene::Ray;

use super::TriMesh;

/// Determinant magnitude below which a ray is treated as parallel to a triangle.
pub const DET_EPSILON: f64 = 1e-9;
pub const MAX_LEAF_FACES: usize = 4;

/// First intersection of a ray with the mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub face: usize,
    /// Weights of the face's three vertices, in face order.
    pub bary: [f64; 3],
    pub t: f64,
    pub point: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BvhNode {
    Interior {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
    /// Faces `order[start..start + count]`.
    Leaf {
        bounds: Aabb,
        start: usize,
        count: usize,
    },
}

impl BvhNode {
    pub fn bounds(&self) -> &Aabb {
        match self {
            BvhNode::Interior { bounds, .. } | BvhNode::Leaf { bounds, .. } => bounds,
        }
    }
}

/// Median-split bounding volume hierarchy over the faces of a mesh. Node 0 is
/// the root.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    order: Vec<usize>,
    triangles: Vec<[Vec3; 3]>,
}

/// Per-ray constants of the watertight ray/triangle test.
struct Shear {
    origin: Vec3,
    kx: usize,
    ky: usize,
    kz: usize,
    sx: f64,
    sy: f64,
    sz: f64,
}

impl Shear {
    fn new(ray: &Ray) -> Shear {
        let d = ray.direction;
        let kz = d.iamax();
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if d[kz] < 0.0 {
            std::mem::swap(&mut kx, &mut ky);
        }
        Shear {
            origin: ray.origin,
            kx,
            ky,
            kz,
            sx: d[kx] / d[kz],
            sy: d[ky] / d[kz],
            sz: 1.0 / d[kz],
        }
    }

    fn intersect(&self, tri: &[Vec3; 3]) -> Option<(f64, [f64; 3])> {
        let a = tri[0] - self.origin;
        let b = tri[1] - self.origin;
        let c = tri[2] - self.origin;
        let (kx, ky, kz) = (self.kx, self.ky, self.kz);
        let ax = a[kx] - self.sx * a[kz];
        let ay = a[ky] - self.sy * a[kz];
        let bx = b[kx] - self.sx * b[kz];
        let by = b[ky] - self.sy * b[kz];
        let cx = c[kx] - self.sx * c[kz];
        let cy = c[ky] - self.sy * c[kz];
        let u = cx * by - cy * bx;
        let v = ax * cy - ay * cx;
        let w = bx * ay - by * ax;
        if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
            return None;
        }
        let det = u + v + w;
        if det.abs() < DET_EPSILON {
            return None;
        }
        let t = (u * a[kz] + v * b[kz] + w * c[kz]) * self.sz / det;
        if !(t > 0.0) {
            return None;
        }
        Some((t, [u / det, v / det, w / det]))
    }
}

/// Watertight ray/triangle intersection. Returns the ray parameter and the
/// barycentric weights of the three corners for hits at `t > 0`.
pub fn intersect_triangle(ray: &Ray, tri: &[Vec3; 3]) -> Option<(f64, [f64; 3])> {
    Shear::new(ray).intersect(tri)
}

fn tri_bounds(t: &[Vec3; 3]) -> Aabb {
    let mut b = Aabb::empty();
    for p in t {
        b.grow(p);
    }
    b
}

impl Bvh {
    pub fn build(mesh: &TriMesh) -> Result<Bvh> {
        if mesh.faces.is_empty() {
            return Err(Error::invalid("cannot build a BVH over an empty mesh"));
        }
        mesh.check_indices()?;
        let triangles: Vec<[Vec3; 3]> = (0..mesh.faces.len()).map(|f| mesh.corners(f)).collect();
        let centroids: Vec<Vec3> = triangles.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * triangles.len() / MAX_LEAF_FACES + 1),
            order: (0..triangles.len()).collect(),
            triangles,
        };
        bvh.build_node(0, bvh.order.len(), &centroids);
        Ok(bvh)
    }

    fn build_node(&mut self, start: usize, end: usize, centroids: &[Vec3]) -> usize {
        let bounds = self.order[start..end]
            .iter()
            .fold(Aabb::empty(), |b, &f| b.union(&tri_bounds(&self.triangles[f])));
        let id = self.nodes.len();
        let count = end - start;
        if count <= MAX_LEAF_FACES {
            self.nodes.push(BvhNode::Leaf { bounds, start, count });
            return id;
        }
        let mut cb = Aabb::empty();
        for &f in &self.order[start..end] {
            cb.grow(&centroids[f]);
        }
        let axis = cb.longest_axis();
        let mid = start + count / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
        });
        self.nodes.push(BvhNode::Leaf { bounds, start, count });
        let left = self.build_node(start, mid, centroids);
        let right = self.build_node(mid, end, centroids);
        self.nodes[id] = BvhNode::Interior { bounds, left, right };
        id
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    /// Face ids in leaf order; leaves index into this slice.
    pub fn face_order(&self) -> &[usize] {
        &self.order
    }

    pub fn face_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle(&self, face: usize) -> &[Vec3; 3] {
        &self.triangles[face]
    }

    pub fn bounds(&self) -> &Aabb {
        self.nodes[0].bounds()
    }

    /// Nearest hit with `t > 0`. Equal distances resolve to the lower face id.
    pub fn first_hit(&self, ray: &Ray) -> Option<Hit> {
        let shear = Shear::new(ray);
        let inv = ray.inv_direction();
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(n) = stack.pop() {
            let limit = best.map_or(f64::INFINITY, |b| b.0);
            match &self.nodes[n] {
                BvhNode::Leaf { bounds, start, count } => {
                    if bounds.intersect(&ray.origin, &inv, 0.0, limit).is_none() {
                        continue;
                    }
                    for &f in &self.order[*start..start + count] {
                        if let Some((t, bary)) = shear.intersect(&self.triangles[f]) {
                            let better = match best {
                                None => true,
                                Some((bt, bf, _)) => t < bt || (t == bt && f < bf),
                            };
                            if better {
                                best = Some((t, f, bary));
                            }
                        }
                    }
                }
                BvhNode::Interior { left, right, .. } => {
                    let tl = self.nodes[*left].bounds().intersect(&ray.origin, &inv, 0.0, limit);
                    let tr = self.nodes[*right].bounds().intersect(&ray.origin, &inv, 0.0, limit);
                    match (tl, tr) {
                        (Some(a), Some(b)) => {
                            // Push the farther child first so the nearer pops next.
                            if a.0 <= b.0 {
                                stack.push(*right);
                                stack.push(*left);
                            } else {
                                stack.push(*left);
                                stack.push(*right);
                            }
                        }
                        (Some(_), None) => stack.push(*left),
                        (None, Some(_)) => stack.push(*right),
                        (None, None) => {}
                    }
                }
            }
        }
        best.map(|(t, face, bary)| {
            let tri = &self.triangles[face];
            Hit {
                face,
                bary,
                t,
                point: tri[0] * bary[0] + tri[1] * bary[1] + tri[2] * bary[2],
            }
        })
    }
}
