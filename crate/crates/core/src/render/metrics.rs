use crate::error::{Error, Result};

use super::ImageBuffer;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn check_dims(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::DimensionMismatch(format!(
            "images are {}x{} and {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// Mean squared error over every channel of every pixel.
pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_dims(a, b)?;
    let sum: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data.len().max(1) as f64)
}

/// Peak signal-to-noise ratio for unit peak. Identical images give
/// `f64::INFINITY`; see [`psnr_json`] for reporting.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / m).log10()
    })
}

/// JSON value for a PSNR: infinite values become the string `"inf"`.
pub fn psnr_json(v: f64) -> serde_json::Value {
    if v.is_infinite() && v > 0.0 {
        serde_json::Value::String("inf".into())
    } else {
        serde_json::json!(v)
    }
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - c;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

pub(crate) fn luminance(img: &ImageBuffer) -> Vec<f64> {
    img.data
        .chunks_exact(3)
        .map(|p| (p[0] as f64 + p[1] as f64 + p[2] as f64) / 3.0)
        .collect()
}

/// Separable "valid" filtering of a `w x h` plane with the SSIM window.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean structural similarity of the RGB-mean luminance over every fully
/// contained 11x11 Gaussian window (σ = 1.5, K1 = 0.01, K2 = 0.03, unit range).
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_dims(a, b)?;
    let (w, h) = (a.width as usize, a.height as usize);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let k = gaussian_kernel();
    let la = luminance(a);
    let lb = luminance(b);
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mu_a = filter_valid(&la, w, h, &k);
    let mu_b = filter_valid(&lb, w, h, &k);
    let aa = filter_valid(&prod(&la, &la), w, h, &k);
    let bb = filter_valid(&prod(&lb, &lb), w, h, &k);
    let ab = filter_valid(&prod(&la, &lb), w, h, &k);
    let c1 = K1 * K1;
    let c2 = K2 * K2;
    let total: f64 = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    Ok(total / mu_a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rgb;
    use rand::Rng;

    fn uniform(v: f64) -> ImageBuffer {
        ImageBuffer::filled(16, 16, Rgb::repeat(v))
    }

    fn random(seed: u64, w: u32, h: u32) -> ImageBuffer {
        let mut rng = crate::seed::rng(seed);
        let px = (0..w * h).map(|_| Rgb::new(rng.gen(), rng.gen(), rng.gen())).collect();
        ImageBuffer::from_pixels(w, h, px).unwrap()
    }

    #[test]
    fn psnr_reference_values() {
        assert_eq!(psnr(&uniform(0.3), &uniform(0.3)).unwrap(), f64::INFINITY);
        assert!((psnr(&uniform(0.0), &uniform(1.0)).unwrap()).abs() < 1e-12);
        assert!((psnr(&uniform(0.0), &uniform(0.5)).unwrap() - 6.0206).abs() < 1e-4);
        assert_eq!(psnr_json(f64::INFINITY), serde_json::json!("inf"));
        assert!(psnr(&uniform(0.0), &ImageBuffer::filled(3, 3, Rgb::zeros())).is_err());
    }

    /// Direct 2-D windowed statistics with no separable filtering.
    fn reference_ssim(a: &ImageBuffer, b: &ImageBuffer) -> f64 {
        let (w, h) = (a.width as usize, a.height as usize);
        let lum = |img: &ImageBuffer, x: usize, y: usize| {
            let p = img.pixel(x as u32, y as u32);
            (p[0] as f64 + p[1] as f64 + p[2] as f64) / 3.0
        };
        let mut weights = [[0.0; 11]; 11];
        let mut norm = 0.0;
        for (i, row) in weights.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let (dx, dy) = (i as f64 - 5.0, j as f64 - 5.0);
                *v = (-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5)).exp();
                norm += *v;
            }
        }
        let mut total = 0.0;
        let mut count = 0.0;
        for y0 in 0..=h - 11 {
            for x0 in 0..=w - 11 {
                let (mut ma, mut mb) = (0.0, 0.0);
                for j in 0..11 {
                    for i in 0..11 {
                        let g = weights[i][j] / norm;
                        ma += g * lum(a, x0 + i, y0 + j);
                        mb += g * lum(b, x0 + i, y0 + j);
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for j in 0..11 {
                    for i in 0..11 {
                        let g = weights[i][j] / norm;
                        let (da, db) = (lum(a, x0 + i, y0 + j) - ma, lum(b, x0 + i, y0 + j) - mb);
                        va += g * da * da;
                        vb += g * db * db;
                        cov += g * da * db;
                    }
                }
                let (c1, c2) = (0.0001, 0.0009);
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1.0;
            }
        }
        total / count
    }

    #[test]
    fn ssim_matches_direct_reference() {
        for seed in 0..5 {
            let a = random(seed, 24, 19);
            let mut b = random(seed + 100, 24, 19);
            // Blend so the pair is correlated.
            for (x, y) in b.data.iter_mut().zip(&a.data) {
                *x = 0.7 * y + 0.3 * *x;
            }
            let fast = ssim(&a, &b).unwrap();
            let slow = reference_ssim(&a, &b);
            assert!((fast - slow).abs() < 1e-4, "{fast} vs {slow}");
        }
    }

    #[test]
    fn ssim_identity_and_negative() {
        let a = random(3, 32, 32);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let mut neg = a.clone();
        for v in neg.data.iter_mut() {
            *v = 1.0 - *v;
        }
        assert!(ssim(&a, &neg).unwrap() < 0.2);
        assert!(ssim(&uniform(0.1), &ImageBuffer::filled(8, 8, Rgb::zeros())).is_err());
        assert!(ssim(
            &ImageBuffer::filled(8, 8, Rgb::zeros()),
            &ImageBuffer::filled(8, 8, Rgb::zeros())
        )
        .is_err());
    }
}
