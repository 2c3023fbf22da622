use ndarray::Array2;

use crate::error::{Error, Result};
use crate::math::{sigmoid, Rgb, Vec3};
use crate::par;
use crate::scene::Ray;

use super::mlp::{Mlp, MlpSpec};

/// Network sizes of a [`FactorizedField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldConfig {
    pub dim: usize,
    pub pos_depth: usize,
    pub pos_width: usize,
    pub pos_freqs: usize,
    pub dir_depth: usize,
    pub dir_width: usize,
    pub dir_freqs: usize,
    /// Residual blocks; `None` enables them for networks of depth 8 or more.
    pub residual: Option<bool>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            dim: 32,
            pos_depth: 8,
            pos_width: 128,
            pos_freqs: 6,
            dir_depth: 8,
            dir_width: 128,
            dir_freqs: 4,
            residual: None,
        }
    }
}

impl FieldConfig {
    pub fn pos_spec(&self) -> MlpSpec {
        MlpSpec {
            input_dim: 3,
            freqs: self.pos_freqs,
            width: self.pos_width,
            depth: self.pos_depth,
            output_dim: 3 * self.dim,
            residual: self.residual.unwrap_or(self.pos_depth >= 8),
        }
    }

    pub fn dir_spec(&self) -> MlpSpec {
        MlpSpec {
            input_dim: 3,
            freqs: self.dir_freqs,
            width: self.dir_width,
            depth: self.dir_depth,
            output_dim: self.dim,
            residual: self.residual.unwrap_or(self.dir_depth >= 8),
        }
    }
}

/// Position embedding `[u, v, w]`, one `D`-vector per color channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTriplet {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

/// Direction weights β.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionWeights {
    pub beta: Vec<f64>,
}

/// Light field `c(p, d) = Sig([u, v, w](p)ᵀ β(d))` with one network for the
/// surface point and one for the viewing direction.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedField {
    pub dim: usize,
    pub pos: Mlp,
    pub dir: Mlp,
}

impl FactorizedField {
    /// Seeded He-uniform initialization. The output layers are scaled by
    /// `D^(-1/4)` so the initial logits `uᵀβ` have roughly unit variance.
    pub fn init(cfg: &FieldConfig, seed: u64) -> Result<FactorizedField> {
        if cfg.dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        let gain = (cfg.dim as f64).powf(-0.25);
        let mut rng = crate::seed::rng(seed);
        let pos = Mlp::init(cfg.pos_spec(), gain, &mut rng)?;
        let dir = Mlp::init(cfg.dir_spec(), gain, &mut rng)?;
        Ok(FactorizedField { dim: cfg.dim, pos, dir })
    }

    pub fn zeros(cfg: &FieldConfig) -> Result<FactorizedField> {
        if cfg.dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        Ok(FactorizedField {
            dim: cfg.dim,
            pos: Mlp::zeros(cfg.pos_spec())?,
            dir: Mlp::zeros(cfg.dir_spec())?,
        })
    }

    pub fn param_count(&self) -> usize {
        self.pos.params.len() + self.dir.params.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.pos.spec;
        let d = self.dir.spec;
        if p.input_dim != 3 || d.input_dim != 3 || p.output_dim != 3 * self.dim || d.output_dim != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "networks {p:?} / {d:?} do not produce D={} embeddings",
                self.dim
            )));
        }
        if self.pos.params.len() != p.param_count() || self.dir.params.len() != d.param_count() {
            return Err(Error::DimensionMismatch(
                "parameter count does not match layer shapes".into(),
            ));
        }
        if let Some(i) = self
            .pos
            .params
            .iter()
            .chain(&self.dir.params)
            .position(|x| !x.is_finite())
        {
            return Err(Error::NonFinite {
                what: "parameter",
                location: format!("flat index {i}"),
            });
        }
        Ok(())
    }

    /// `n x 3D` position embeddings, rows `[u | v | w]`.
    pub fn pos_embed_batch(&self, points: &[Vec3]) -> Result<Array2<f64>> {
        let raw = Array2::from_shape_fn((points.len(), 3), |(i, j)| points[i][j]);
        let out = self.pos.forward(&raw);
        check_finite(&out, "position embedding")?;
        Ok(out)
    }

    /// `n x D` direction weights.
    pub fn dir_embed_batch(&self, dirs: &[Vec3]) -> Result<Array2<f64>> {
        let raw = Array2::from_shape_fn((dirs.len(), 3), |(i, j)| dirs[i][j]);
        let out = self.dir.forward(&raw);
        check_finite(&out, "direction embedding")?;
        Ok(out)
    }

    pub fn pos_embed(&self, p: &Vec3) -> Result<EmbeddingTriplet> {
        if !p.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                what: "position",
                location: format!("{p:?}"),
            });
        }
        let row = self.pos_embed_batch(std::slice::from_ref(p))?;
        let r = row.row(0);
        let d = self.dim;
        Ok(EmbeddingTriplet {
            u: r.slice(ndarray::s![0..d]).to_vec(),
            v: r.slice(ndarray::s![d..2 * d]).to_vec(),
            w: r.slice(ndarray::s![2 * d..3 * d]).to_vec(),
        })
    }

    pub fn dir_embed(&self, d: &Vec3) -> Result<DirectionWeights> {
        let n = d.norm();
        if !((n - 1.0).abs() <= Ray::UNIT_TOLERANCE) {
            return Err(Error::invalid(format!("direction {d:?} has length {n}, expected 1")));
        }
        let row = self.dir_embed_batch(std::slice::from_ref(d))?;
        Ok(DirectionWeights {
            beta: row.row(0).to_vec(),
        })
    }

    /// Colors for matching lists of surface points and unit directions,
    /// evaluated in parallel chunks.
    pub fn predict_batch(&self, points: &[Vec3], dirs: &[Vec3]) -> Result<Vec<Rgb>> {
        if points.len() != dirs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} points and {} directions",
                points.len(),
                dirs.len()
            )));
        }
        const CHUNK: usize = 256;
        let chunks = par::try_map_range(points.len().div_ceil(CHUNK), |c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(points.len());
            let uvw = self.pos_embed_batch(&points[range.clone()])?;
            let beta = self.dir_embed_batch(&dirs[range])?;
            Ok::<_, Error>(combine_rows(&uvw, &beta, self.dim))
        })?;
        Ok(chunks.into_iter().flatten().collect())
    }
}

fn check_finite(m: &Array2<f64>, what: &'static str) -> Result<()> {
    if let Some(i) = m.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            what,
            location: format!("row {} column {}", i / m.ncols(), i % m.ncols()),
        });
    }
    Ok(())
}

/// Sigmoid of the per-row inner products of `[u | v | w]` with β.
pub(crate) fn combine_rows(uvw: &Array2<f64>, beta: &Array2<f64>, dim: usize) -> Vec<Rgb> {
    uvw.outer_iter()
        .zip(beta.outer_iter())
        .map(|(e, b)| {
            let e = e.as_slice().expect("standard layout");
            let b = b.as_slice().expect("standard layout");
            let l = |c: usize| dot(&e[c * dim..(c + 1) * dim], b);
            Rgb::new(sigmoid(l(0)), sigmoid(l(1)), sigmoid(l(2)))
        })
        .collect()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pre-sigmoid logits `(u·β, v·β, w·β)`.
pub fn logits(t: &EmbeddingTriplet, b: &DirectionWeights) -> Result<[f64; 3]> {
    let d = b.beta.len();
    if t.u.len() != d || t.v.len() != d || t.w.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "embedding lengths {}/{}/{} against {d} direction weights",
            t.u.len(),
            t.v.len(),
            t.w.len()
        )));
    }
    Ok([dot(&t.u, &b.beta), dot(&t.v, &b.beta), dot(&t.w, &b.beta)])
}

pub fn predict_color(t: &EmbeddingTriplet, b: &DirectionWeights) -> Result<Rgb> {
    let l = logits(t, b)?;
    Ok(Rgb::new(sigmoid(l[0]), sigmoid(l[1]), sigmoid(l[2])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn small() -> FieldConfig {
        FieldConfig {
            dim: 8,
            pos_depth: 4,
            pos_width: 16,
            pos_freqs: 3,
            dir_depth: 3,
            dir_width: 16,
            dir_freqs: 2,
            residual: None,
        }
    }

    #[test]
    fn init_is_deterministic_and_shaped() {
        let a = FactorizedField::init(&small(), 3).unwrap();
        let b = FactorizedField::init(&small(), 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, FactorizedField::init(&small(), 4).unwrap());
        let big = FieldConfig {
            dim: 32,
            pos_width: 128,
            pos_depth: 8,
            ..FieldConfig::default()
        };
        assert_eq!(big.pos_spec().output_dim, 96);
        assert!(big.pos_spec().residual);
        assert!(a.pos.params[a.pos.layer_offsets()[0].1..]
            .iter()
            .take(16)
            .all(|&b| b == 0.0));
    }

    #[test]
    fn zero_parameters_give_zero_embeddings_and_gray() {
        let f = FactorizedField::zeros(&small()).unwrap();
        let t = f.pos_embed(&Vec3::new(0.3, -0.2, 0.9)).unwrap();
        assert!(t.u.iter().chain(&t.v).chain(&t.w).all(|&x| x == 0.0));
        let b = f.dir_embed(&Vec3::y()).unwrap();
        assert!(b.beta.iter().all(|&x| x == 0.0));
        assert_eq!(predict_color(&t, &b).unwrap(), Rgb::repeat(0.5));
    }

    #[test]
    fn one_hot_beta_selects_component() {
        let t = EmbeddingTriplet {
            u: vec![0.1, -2.0, 0.3],
            v: vec![1.0, 0.5, -0.3],
            w: vec![0.0, 3.0, 0.2],
        };
        let b = DirectionWeights {
            beta: vec![0.0, 1.0, 0.0],
        };
        let c = predict_color(&t, &b).unwrap();
        assert_eq!(c, Rgb::new(sigmoid(-2.0), sigmoid(0.5), sigmoid(3.0)));
        let bad = DirectionWeights { beta: vec![1.0] };
        assert!(matches!(predict_color(&t, &bad), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn logits_are_bilinear_in_beta() {
        let mut rng = crate::seed::rng(9);
        let mut vecn = |n: usize| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
        let t = EmbeddingTriplet {
            u: vecn(16),
            v: vecn(16),
            w: vecn(16),
        };
        let b1 = DirectionWeights { beta: vecn(16) };
        let b2 = DirectionWeights { beta: vecn(16) };
        let sum = DirectionWeights {
            beta: b1.beta.iter().zip(&b2.beta).map(|(a, b)| a + b).collect(),
        };
        let (l1, l2, ls) = (
            logits(&t, &b1).unwrap(),
            logits(&t, &b2).unwrap(),
            logits(&t, &sum).unwrap(),
        );
        for c in 0..3 {
            assert!((ls[c] - l1[c] - l2[c]).abs() < 1e-6);
        }
        // Independent dot-product oracle.
        let oracle: f64 = (0..16).map(|k| t.u[k] * b1.beta[k]).sum();
        assert!((l1[0] - oracle).abs() < 1e-7);
    }

    #[test]
    fn embeddings_match_scalar_reference() {
        let f = FactorizedField::init(&small(), 11).unwrap();
        let p = Vec3::new(0.2, -0.7, 0.4);
        let t = f.pos_embed(&p).unwrap();
        let r = f.pos.forward_scalar(&[p.x, p.y, p.z]);
        let flat: Vec<f64> = t.u.iter().chain(&t.v).chain(&t.w).copied().collect();
        for (a, b) in flat.iter().zip(&r) {
            assert!((a - b).abs() < 1e-6);
        }
        let d = Vec3::new(1.0, 2.0, -2.0) / 3.0;
        let b = f.dir_embed(&d).unwrap();
        for (a, b) in b.beta.iter().zip(&f.dir.forward_scalar(&[d.x, d.y, d.z])) {
            assert!((a - b).abs() < 1e-6);
        }
        assert_eq!(f.dir_embed(&d).unwrap(), b);
        let t2 = f.pos_embed(&(p + Vec3::new(0.05, 0.0, 0.0))).unwrap();
        assert_ne!(t, t2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = FactorizedField::init(&small(), 1).unwrap();
        assert!(f.dir_embed(&Vec3::new(1.0, 1.0, 0.0)).is_err());
        assert!(f.pos_embed(&Vec3::new(f64::NAN, 0.0, 0.0)).is_err());
    }

    #[test]
    fn fresh_field_colors_vary() {
        let f = FactorizedField::init(&small(), 5).unwrap();
        let mut rng = crate::seed::rng(6);
        let pts: Vec<Vec3> = (0..1000)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let dirs: Vec<Vec3> = (0..1000)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.1..1.0),
                )
                .normalize()
            })
            .collect();
        let c = f.predict_batch(&pts, &dirs).unwrap();
        let mean = c.iter().map(|x| x.x).sum::<f64>() / 1000.0;
        let var = c.iter().map(|x| (x.x - mean).powi(2)).sum::<f64>() / 1000.0;
        assert!(var.is_finite() && var > 1e-6, "variance {var}");
        assert!(c.iter().all(|x| x.iter().all(|&v| v > 0.0 && v < 1.0)));
    }
}
