use nalgebra::Matrix3;
use rand::Rng;

use crate::error::{Error, Result};
use crate::math::Vec3;

use super::Ray;

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    /// Centered principal point with the given horizontal field of view.
    pub fn from_fov(width: u32, height: u32, fov_x_deg: f64) -> Self {
        let focal = 0.5 * width as f64 / (0.5 * fov_x_deg.to_radians()).tan();
        Intrinsics {
            focal,
            cx: 0.5 * width as f64,
            cy: 0.5 * height as f64,
            width,
            height,
        }
    }
}

/// Sphere on which cameras are placed, looking at its center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingSphere {
    pub center: Vec3,
    pub radius: f64,
}

/// Pinhole camera. `rotation` maps camera axes to world axes; the camera looks
/// down its local -z with +y up.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub rotation: Matrix3<f64>,
    pub position: Vec3,
    pub intrinsics: Intrinsics,
}

impl Camera {
    pub fn new(rotation: Matrix3<f64>, position: Vec3, intrinsics: Intrinsics) -> Result<Camera> {
        let should_be_identity = rotation.transpose() * rotation;
        if (should_be_identity - Matrix3::identity()).amax() > 1e-9 || (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("camera rotation is not a proper rotation"));
        }
        Ok(Camera {
            rotation,
            position,
            intrinsics,
        })
    }

    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, intrinsics: Intrinsics) -> Result<Camera> {
        let forward = target - eye;
        if forward.norm() < 1e-12 {
            return Err(Error::invalid("camera eye coincides with target"));
        }
        let back = -forward.normalize();
        let mut right = up.cross(&back);
        if right.norm() < 1e-9 {
            // Looking along `up`; pick another reference axis.
            right = Vec3::z().cross(&back);
        }
        let right = right.normalize();
        let true_up = back.cross(&right);
        let rotation = Matrix3::from_columns(&[right, true_up, back]);
        Camera::new(rotation, eye, intrinsics)
    }

    pub fn width(&self) -> u32 {
        self.intrinsics.width
    }

    pub fn height(&self) -> u32 {
        self.intrinsics.height
    }

    /// Ray through the center of pixel `(x, y)`; `y` grows downward.
    pub fn pixel_ray(&self, x: u32, y: u32) -> Ray {
        let k = &self.intrinsics;
        let cam = Vec3::new(
            (x as f64 + 0.5 - k.cx) / k.focal,
            -(y as f64 + 0.5 - k.cy) / k.focal,
            -1.0,
        );
        Ray::through(self.position, self.rotation * cam)
    }
}

/// `n` cameras with positions uniform on the sphere surface, all looking at
/// its center. Deterministic for a fixed seed.
pub fn sample_camera_poses(
    n: usize,
    sphere: &BoundingSphere,
    intrinsics: Intrinsics,
    seed: u64,
) -> Result<Vec<Camera>> {
    if n == 0 {
        return Err(Error::invalid("need at least one camera"));
    }
    if !(sphere.radius > 0.0) {
        return Err(Error::invalid("camera sphere radius must be positive"));
    }
    let mut rng = crate::seed::rng(seed);
    (0..n)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..=1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).max(0.0).sqrt();
            let dir = Vec3::new(s * phi.cos(), z, s * phi.sin());
            let eye = sphere.center + dir * sphere.radius;
            Camera::look_at(eye, sphere.center, Vec3::y(), intrinsics)
        })
        .collect()
}
