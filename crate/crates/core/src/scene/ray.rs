use crate::error::{Error, Result};
use crate::math::Vec3;

/// `r(t) = origin + t * direction` with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    pub const UNIT_TOLERANCE: f64 = 1e-6;

    /// Builds a ray, rejecting directions that are not unit length.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Ray> {
        let n = direction.norm();
        if !origin.iter().all(|x| x.is_finite()) || !n.is_finite() {
            return Err(Error::NonFinite {
                what: "ray",
                location: format!("origin {origin:?} direction {direction:?}"),
            });
        }
        if (n - 1.0).abs() > Self::UNIT_TOLERANCE {
            return Err(Error::invalid(format!("ray direction has length {n}, expected 1")));
        }
        Ok(Ray { origin, direction })
    }

    /// Builds a ray, normalizing the direction.
    pub fn through(origin: Vec3, toward: Vec3) -> Ray {
        Ray {
            origin,
            direction: toward.normalize(),
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    #[inline]
    pub fn inv_direction(&self) -> Vec3 {
        self.direction.map(|x| 1.0 / x)
    }
}
