use crate::math::{Aabb, Rgb, Vec3};

use super::Ray;

/// A radiance field `(position, direction) -> (color, density)`.
///
/// Implementations must return `density >= 0` and colors in `[0, 1]^3`.
pub trait RadianceField: Send + Sync {
    fn density(&self, p: &Vec3) -> f64;
    fn color(&self, p: &Vec3, d: &Vec3) -> Rgb;
    /// Region outside which density is zero.
    fn bounds(&self) -> Aabb;
    /// Ray parameter of the first surface crossing, for fields whose occupied
    /// region has an analytic boundary.
    fn surface_hit(&self, _ray: &Ray) -> Option<f64> {
        None
    }
}

/// Box of constant density and color.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousSlab {
    pub region: Aabb,
    pub sigma: f64,
    pub color: Rgb,
}

impl RadianceField for HomogeneousSlab {
    fn density(&self, p: &Vec3) -> f64 {
        if self.region.contains(p) {
            self.sigma
        } else {
            0.0
        }
    }

    fn color(&self, _p: &Vec3, _d: &Vec3) -> Rgb {
        self.color
    }

    fn bounds(&self) -> Aabb {
        self.region
    }

    fn surface_hit(&self, ray: &Ray) -> Option<f64> {
        box_entry(&self.region, ray)
    }
}

/// Solid sphere with a smooth albedo pattern, Lambertian shading and a
/// Phong-style specular lobe around the mirror direction, which makes its
/// appearance view dependent.
#[derive(Debug, Clone, PartialEq)]
pub struct TexturedSphere {
    pub center: Vec3,
    pub radius: f64,
    pub sigma: f64,
    /// Half-width of a linear density ramp centered on `radius`; zero gives a
    /// hard indicator. The density equals `sigma / 2` exactly at `radius`.
    pub shell: f64,
    pub base: Rgb,
    pub stripe: Rgb,
    pub frequency: f64,
    pub light_dir: Vec3,
    pub ambient: f64,
    pub diffuse: f64,
    pub specular: f64,
    pub shininess: f64,
}

impl Default for TexturedSphere {
    fn default() -> Self {
        TexturedSphere {
            center: Vec3::zeros(),
            radius: 1.0,
            sigma: 10.0,
            shell: 0.1,
            base: Rgb::new(0.85, 0.35, 0.2),
            stripe: Rgb::new(0.15, 0.45, 0.8),
            frequency: 2.5,
            light_dir: Vec3::new(0.4, 0.8, 0.45).normalize(),
            ambient: 0.3,
            diffuse: 0.6,
            specular: 0.5,
            shininess: 6.0,
        }
    }
}

impl TexturedSphere {
    /// Matte sphere with density `sigma` inside `radius`.
    pub fn indicator(radius: f64, sigma: f64) -> Self {
        TexturedSphere {
            radius,
            sigma,
            shell: 0.0,
            specular: 0.0,
            ..Default::default()
        }
    }

    pub fn normal_at(&self, p: &Vec3) -> Vec3 {
        let q = p - self.center;
        let n = q.norm();
        if n < 1e-12 {
            Vec3::y()
        } else {
            q / n
        }
    }

    pub fn albedo(&self, n: &Vec3) -> Rgb {
        let f = self.frequency;
        let a = 0.5 + 0.5 * (f * (n.x + 0.5 * n.z)).sin() * (f * n.y).cos();
        self.base * (1.0 - a) + self.stripe * a
    }
}

impl RadianceField for TexturedSphere {
    fn density(&self, p: &Vec3) -> f64 {
        let r = (p - self.center).norm();
        if self.shell > 0.0 {
            self.sigma * ((self.radius + self.shell - r) / (2.0 * self.shell)).clamp(0.0, 1.0)
        } else if r <= self.radius {
            self.sigma
        } else {
            0.0
        }
    }

    fn color(&self, p: &Vec3, d: &Vec3) -> Rgb {
        let n = self.normal_at(p);
        let l = self.light_dir;
        let lambert = n.dot(&l).max(0.0);
        let mirrored = d - n * (2.0 * d.dot(&n));
        let lobe = mirrored.dot(&l).max(0.0).powf(self.shininess);
        let c = self.albedo(&n) * (self.ambient + self.diffuse * lambert) + Rgb::repeat(self.specular * lobe);
        c.map(|x| x.clamp(0.0, 1.0))
    }

    fn bounds(&self) -> Aabb {
        let r = self.radius + self.shell;
        Aabb::new(self.center - Vec3::repeat(r), self.center + Vec3::repeat(r))
    }

    fn surface_hit(&self, ray: &Ray) -> Option<f64> {
        let oc = ray.origin - self.center;
        let b = oc.dot(&ray.direction);
        let c = oc.norm_squared() - self.radius * self.radius;
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        let t0 = -b - s;
        let t1 = -b + s;
        if t0 > 0.0 {
            Some(t0)
        } else if t1 > 0.0 {
            Some(t1)
        } else {
            None
        }
    }
}

/// Box of constant density colored as a 3D checkerboard.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid {
    pub region: Aabb,
    pub sigma: f64,
    pub cell: f64,
    pub color_a: Rgb,
    pub color_b: Rgb,
}

impl RadianceField for BoxGrid {
    fn density(&self, p: &Vec3) -> f64 {
        if self.region.contains(p) {
            self.sigma
        } else {
            0.0
        }
    }

    fn color(&self, p: &Vec3, _d: &Vec3) -> Rgb {
        let q = (p - self.region.min) / self.cell;
        let parity = q.iter().map(|x| x.floor() as i64).sum::<i64>().rem_euclid(2);
        if parity == 0 {
            self.color_a
        } else {
            self.color_b
        }
    }

    fn bounds(&self) -> Aabb {
        self.region
    }

    fn surface_hit(&self, ray: &Ray) -> Option<f64> {
        box_entry(&self.region, ray)
    }
}

fn box_entry(b: &Aabb, ray: &Ray) -> Option<f64> {
    let (t0, t1) = b.intersect(&ray.origin, &ray.inv_direction(), 0.0, f64::INFINITY)?;
    if t0 > 0.0 {
        Some(t0)
    } else if t1 > 0.0 && !b.contains(&ray.origin) {
        Some(t1)
    } else {
        None
    }
}

/// Closed set of scenes selectable from a config file.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticScene {
    Slab(HomogeneousSlab),
    Sphere(TexturedSphere),
    BoxGrid(BoxGrid),
}

impl AnalyticScene {
    pub fn as_field(&self) -> &dyn RadianceField {
        match self {
            AnalyticScene::Slab(s) => s,
            AnalyticScene::Sphere(s) => s,
            AnalyticScene::BoxGrid(s) => s,
        }
    }
}

impl RadianceField for AnalyticScene {
    fn density(&self, p: &Vec3) -> f64 {
        self.as_field().density(p)
    }
    fn color(&self, p: &Vec3, d: &Vec3) -> Rgb {
        self.as_field().color(p, d)
    }
    fn bounds(&self) -> Aabb {
        self.as_field().bounds()
    }
    fn surface_hit(&self, ray: &Ray) -> Option<f64> {
        self.as_field().surface_hit(ray)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_colors_in_range_and_view_dependent() {
        let s = TexturedSphere::default();
        let p = Vec3::new(0.0, 1.0, 0.0);
        let mut seen = Vec::new();
        for k in 0..64 {
            let a = k as f64 * 0.1;
            let d = -Vec3::new(a.cos() * 0.6, 0.5, a.sin() * 0.6).normalize();
            let c = s.color(&p, &d);
            assert!(c.iter().all(|x| (0.0..=1.0).contains(x)));
            seen.push(c.x);
        }
        let spread = seen.iter().cloned().fold(f64::MIN, f64::max) - seen.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 0.05, "specular lobe should vary with direction");
    }

    #[test]
    fn sphere_surface_hit() {
        let s = TexturedSphere::default();
        let r = Ray::new(Vec3::new(0.0, 0.0, -3.0), Vec3::z()).unwrap();
        assert!((s.surface_hit(&r).unwrap() - 2.0).abs() < 1e-12);
        let away = Ray::new(Vec3::new(0.0, 0.0, -3.0), -Vec3::z()).unwrap();
        assert!(s.surface_hit(&away).is_none());
    }

    #[test]
    fn checkerboard_alternates() {
        let g = BoxGrid {
            region: Aabb::cube(1.0),
            sigma: 5.0,
            cell: 0.5,
            color_a: Rgb::new(1.0, 1.0, 1.0),
            color_b: Rgb::zeros(),
        };
        let d = Vec3::z();
        let a = g.color(&Vec3::new(-0.9, -0.9, -0.9), &d);
        let b = g.color(&Vec3::new(-0.4, -0.9, -0.9), &d);
        assert_ne!(a, b);
        assert_eq!(g.density(&Vec3::new(2.0, 0.0, 0.0)), 0.0);
    }
}
