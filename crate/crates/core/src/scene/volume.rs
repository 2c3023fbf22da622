use rand::Rng;

use crate::error::{Error, Result};
use crate::math::Rgb;

use super::{RadianceField, Ray};

/// Emitted color over a ray interval and the transmittance left at its end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub color: Rgb,
    pub transmittance: f64,
}

impl Segment {
    /// Front-to-back compositing of `self` followed by `back`.
    pub fn then(&self, back: &Segment) -> Segment {
        Segment {
            color: self.color + back.color * self.transmittance,
            transmittance: self.transmittance * back.transmittance,
        }
    }

    pub fn over(&self, background: &Rgb) -> Rgb {
        self.color + background * self.transmittance
    }
}

/// Integrates emission along `ray` over `[t_near, t_far]` with `n_samples`
/// stratified midpoints and the discrete transmittance product
/// `T_i = prod_{j<i} exp(-sigma_j * delta)`.
pub fn volume_render(field: &dyn RadianceField, ray: &Ray, t_near: f64, t_far: f64, n_samples: usize) -> Result<Rgb> {
    volume_render_segment::<rand_chacha::ChaCha8Rng>(field, ray, t_near, t_far, n_samples, None).map(|s| s.color)
}

/// Like [`volume_render`] but also returns the remaining transmittance. With
/// `jitter`, each sample is drawn uniformly inside its stratum instead of at
/// the midpoint.
pub fn volume_render_segment<R: Rng>(
    field: &dyn RadianceField,
    ray: &Ray,
    t_near: f64,
    t_far: f64,
    n_samples: usize,
    mut jitter: Option<&mut R>,
) -> Result<Segment> {
    if !(t_near < t_far) {
        return Err(Error::invalid(format!(
            "volume_render needs t_near < t_far, got [{t_near}, {t_far}]"
        )));
    }
    if n_samples < 2 {
        return Err(Error::invalid("volume_render needs at least 2 samples"));
    }
    let delta = (t_far - t_near) / n_samples as f64;
    let mut color = Rgb::zeros();
    let mut transmittance = 1.0;
    for i in 0..n_samples {
        let offset = match jitter.as_deref_mut() {
            Some(rng) => rng.gen::<f64>(),
            None => 0.5,
        };
        let t = t_near + (i as f64 + offset) * delta;
        let p = ray.at(t);
        let sigma = field.density(&p);
        if !sigma.is_finite() {
            return Err(Error::NonFinite {
                what: "density",
                location: format!("t={t} p={p:?}"),
            });
        }
        if sigma <= 0.0 {
            continue;
        }
        let c = field.color(&p, &ray.direction);
        if !c.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                what: "color",
                location: format!("t={t} p={p:?}"),
            });
        }
        let step = (-sigma * delta).exp();
        color += c * (transmittance * (1.0 - step));
        transmittance *= step;
    }
    Ok(Segment {
        color: color.map(|x| x.clamp(0.0, 1.0)),
        transmittance,
    })
}
