//! Small shared math types.

use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;
pub type Rgb = Vector3<f64>;

/// Logistic function, kept inside the open interval `(0, 1)` for every finite
/// input.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    (1.0 / (1.0 + (-x).exp())).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn cube(half: f64) -> Self {
        Aabb::new(Vec3::repeat(-half), Vec3::repeat(half))
    }

    pub fn empty() -> Self {
        Aabb::new(Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY))
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb::new(self.min.inf(&other.min), self.max.sup(&other.max))
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.contains(&other.min) && self.contains(&other.max)
    }

    pub fn longest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Slab test. Returns the parametric overlap `[t0, t1]` of the ray with the
    /// box clipped to `[t_min, t_max]`.
    pub fn intersect(&self, origin: &Vec3, inv_dir: &Vec3, t_min: f64, t_max: f64) -> Option<(f64, f64)> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for i in 0..3 {
            if inv_dir[i].is_infinite() {
                // Ray parallel to this slab: inside it for all t or never.
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let a = (self.min[i] - origin[i]) * inv_dir[i];
            let b = (self.max[i] - origin[i]) * inv_dir[i];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            t0 = t0.max(near);
            t1 = t1.min(far);
            if !(t0 <= t1) {
                return None;
            }
        }
        Some((t0, t1))
    }
}

/// Unit vector from elevation (measured from +y) and azimuth (from +x toward +z).
pub fn direction_from_angles(elevation: f64, azimuth: f64) -> Vec3 {
    let (se, ce) = elevation.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    Vec3::new(se * ca, ce, se * sa)
}

/// Inverse of [`direction_from_angles`] for any nonzero `d`; azimuth is
/// returned in `[0, 2π)`.
pub fn angles_from_direction(d: &Vec3) -> (f64, f64) {
    let elevation = (d.y / d.norm()).clamp(-1.0, 1.0).acos();
    let mut azimuth = d.z.atan2(d.x);
    if azimuth < 0.0 {
        azimuth += std::f64::consts::TAU;
    }
    if azimuth >= std::f64::consts::TAU {
        azimuth -= std::f64::consts::TAU;
    }
    (elevation, azimuth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_round_trip() {
        for &(e, a) in &[(0.3, 0.1), (1.2, 4.0), (2.9, 6.1), (1.57, 3.1)] {
            let d = direction_from_angles(e, a);
            assert!((d.norm() - 1.0).abs() < 1e-12);
            let (e2, a2) = angles_from_direction(&d);
            assert!((e - e2).abs() < 1e-9 && (a - a2).abs() < 1e-9);
        }
    }

    #[test]
    fn slab_test_hits_and_misses() {
        let b = Aabb::cube(1.0);
        let o = Vec3::new(0.0, 0.0, -3.0);
        let d = Vec3::new(0.0, 0.0, 1.0);
        let inv = d.map(|x| 1.0 / x);
        let (t0, t1) = b.intersect(&o, &inv, 0.0, f64::INFINITY).unwrap();
        assert_eq!((t0, t1), (2.0, 4.0));
        let o2 = Vec3::new(2.0, 0.0, -3.0);
        assert!(b.intersect(&o2, &inv, 0.0, f64::INFINITY).is_none());
    }

    #[test]
    fn slab_test_ray_on_box_face() {
        // Ray lying in the plane x = 0 of a box touching that plane.
        let b = Aabb::new(Vec3::new(0.0, 3.0, 0.0), Vec3::new(0.5, 4.0, 0.2));
        let inv = Vec3::y().map(|x| 1.0 / x);
        let (t0, t1) = b
            .intersect(&Vec3::new(0.0, -1.0, 0.0), &inv, 0.0, f64::INFINITY)
            .unwrap();
        assert_eq!((t0, t1), (4.0, 5.0));
    }
}
