use serde::Serialize;

use super::image::ImageBuffer;
use super::metrics::{psnr, psnr_json, ssim};
use crate::baking::{
    bake_rgb_baseline_atlases, dequantize_atlas, AssetPackage, AtlasRole, ChannelAtlas, DirectionFetch, PackageVariant,
    TexelLayout, BASELINE_GRID,
};
use crate::error::{Error, Result};
use crate::field::FactorizedField;
use crate::geometry::{Bvh, Hit, TriMesh};
use crate::math::{sigmoid, Rgb, Vec3};
use crate::par;
use crate::scene::{render_oracle_image, Camera, PseudoOptions, RadianceField};

/// View-independent baseline handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaselineMode {
    #[default]
    Off,
    /// Ignore the viewing direction and read the first direction cell.
    RgbNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RenderConfig {
    /// Miss color; `None` takes the package background (white for
    /// [`render_float`]).
    pub background: Option<Rgb>,
    pub direction_fetch: DirectionFetch,
    pub baseline: BaselineMode,
}

/// An asset package with dequantized tables and a BVH, ready to render many
/// views.
#[derive(Debug)]
pub struct PreparedPackage {
    pub package: AssetPackage,
    bvh: Bvh,
    tables: [ChannelAtlas<f64>; 4],
}

impl PreparedPackage {
    /// Checks the package for internal consistency and dequantizes it.
    pub fn new(package: AssetPackage) -> Result<PreparedPackage> {
        let l = &package.layout;
        let d = package.dim();
        if package.mesh.faces.len() != l.n_faces {
            return Err(Error::DimensionMismatch(format!(
                "package mesh has {} faces, layout {}",
                package.mesh.faces.len(),
                l.n_faces
            )));
        }
        for (a, role) in package.atlases.iter().zip(AtlasRole::ALL) {
            let (w, h) = if role == AtlasRole::MBeta {
                (package.grid.n_azim, package.grid.n_elev)
            } else {
                (l.width, l.height)
            };
            if a.channels != d || (a.width, a.height) != (w, h) || a.data.len() != w * h * d {
                return Err(Error::DimensionMismatch(format!(
                    "{} atlas is {}x{}x{}, package expects {w}x{h}x{d}",
                    role.key(),
                    a.width,
                    a.height,
                    a.channels
                )));
            }
        }
        let bvh = Bvh::build(&package.mesh)?;
        let t: Vec<ChannelAtlas<f64>> = package
            .atlases
            .iter()
            .zip(&package.quant)
            .map(|(a, q)| dequantize_atlas(a, q))
            .collect::<Result<_>>()?;
        Ok(PreparedPackage {
            package,
            bvh,
            tables: t.try_into().expect("four tables"),
        })
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    /// Dequantized `(M_u, M_v, M_w)` texels at the hit and `β` along `dir`.
    pub fn fetch(&self, hit: &Hit, dir: &Vec3, cfg: &RenderConfig) -> ([&[f64]; 3], Vec<f64>) {
        let l = &self.package.layout;
        let texel = l.texel_at(&hit.bary);
        let (x, y) = l.texel_pixel(hit.face, texel);
        let uvw = [0, 1, 2].map(|i| self.tables[i].texel(x, y));
        let beta_tab = &self.tables[3];
        let view_independent =
            cfg.baseline == BaselineMode::RgbNormal || self.package.variant == PackageVariant::RgbNormal;
        let beta = if view_independent {
            beta_tab.texel(0, 0).to_vec()
        } else {
            let mut b = vec![0.0; beta_tab.channels];
            for ((row, col), w) in self.package.grid.lookup(dir, cfg.direction_fetch) {
                if w != 0.0 {
                    for (acc, v) in b.iter_mut().zip(beta_tab.texel(col, row)) {
                        *acc += w * v;
                    }
                }
            }
            b
        };
        (uvw, beta)
    }

    fn shade(&self, hit: &Hit, dir: &Vec3, cfg: &RenderConfig) -> Rgb {
        let (uvw, beta) = self.fetch(hit, dir, cfg);
        let l = uvw.map(|e| e.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>());
        Rgb::new(sigmoid(l[0]), sigmoid(l[1]), sigmoid(l[2]))
    }

    /// First hit, nearest texel fetch, direction fetch, then
    /// `(Sig(u·β), Sig(v·β), Sig(w·β))`; misses take the background.
    pub fn render(&self, camera: &Camera, cfg: &RenderConfig) -> Result<ImageBuffer> {
        let bg = cfg.background.unwrap_or(self.package.background);
        let (w, h) = (camera.width(), camera.height());
        let rows = par::map_range(h as usize, |y| {
            (0..w)
                .map(|x| {
                    let ray = camera.pixel_ray(x, y as u32);
                    match self.bvh.first_hit(&ray) {
                        Some(hit) => self.shade(&hit, &ray.direction, cfg),
                        None => bg,
                    }
                })
                .collect::<Vec<_>>()
        });
        ImageBuffer::from_pixels(w, h, rows.into_iter().flatten().collect())
    }
}

/// Renders a package from one camera. Prepare the package once with
/// [`PreparedPackage::new`] when rendering several views.
pub fn render(pkg: &AssetPackage, camera: &Camera, cfg: &RenderConfig) -> Result<ImageBuffer> {
    PreparedPackage::new(pkg.clone())?.render(camera, cfg)
}

/// The same pipeline with the networks evaluated at the exact hit point and
/// viewing direction.
pub fn render_float(field: &FactorizedField, bvh: &Bvh, camera: &Camera, cfg: &RenderConfig) -> Result<ImageBuffer> {
    let bg = cfg.background.unwrap_or(Rgb::repeat(1.0));
    let (w, h) = (camera.width(), camera.height());
    let n = (w * h) as usize;
    let hits = par::map_range(n, |i| {
        let ray = camera.pixel_ray(i as u32 % w, i as u32 / w);
        bvh.first_hit(&ray).map(|hit| (hit.point, ray.direction))
    });
    let (points, dirs): (Vec<Vec3>, Vec<Vec3>) = hits.iter().flatten().copied().unzip();
    let colors = field.predict_batch(&points, &dirs)?;
    let mut it = colors.into_iter();
    let pixels = hits
        .iter()
        .map(|h| match h {
            Some(_) => it.next().expect("one color per hit"),
            None => bg,
        })
        .collect();
    ImageBuffer::from_pixels(w, h, pixels)
}

/// View-independent baseline package: every texel stores the color the field
/// shows when the face is viewed head-on along its normal.
pub fn bake_rgb_baseline(
    field: &FactorizedField,
    mesh: &TriMesh,
    layout: &TexelLayout,
    background: Rgb,
) -> Result<AssetPackage> {
    let floats = bake_rgb_baseline_atlases(field, mesh, layout)?;
    AssetPackage::assemble(
        PackageVariant::RgbNormal,
        mesh,
        *layout,
        BASELINE_GRID,
        background,
        &floats,
    )
}

/// PSNR and SSIM of one camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalRow {
    pub camera_id: usize,
    #[serde(serialize_with = "ser_psnr")]
    pub psnr: f64,
    pub ssim: f64,
}

fn ser_psnr<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    psnr_json(*v).serialize(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanMetrics {
    #[serde(serialize_with = "ser_psnr")]
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Baked render against the analytic scene; empty without an oracle.
    pub vs_oracle: Vec<EvalRow>,
    /// Baked render against [`render_float`].
    pub vs_float: Vec<EvalRow>,
    pub mean_vs_oracle: Option<MeanMetrics>,
    pub mean_vs_float: MeanMetrics,
}

fn compare(rows: &mut Vec<EvalRow>, id: usize, a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    rows.push(EvalRow {
        camera_id: id,
        psnr: psnr(a, b)?,
        ssim: ssim(a, b)?,
    });
    Ok(())
}

/// Mean over rows; any infinite PSNR makes the mean infinite.
pub fn mean_metrics(rows: &[EvalRow]) -> Option<MeanMetrics> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    Some(MeanMetrics {
        psnr: rows.iter().map(|r| r.psnr).sum::<f64>() / n,
        ssim: rows.iter().map(|r| r.ssim).sum::<f64>() / n,
    })
}

/// Per-camera metrics of the baked renders against the continuous field and,
/// when given, the analytic oracle.
pub fn eval_package(
    pkg: &PreparedPackage,
    field: &FactorizedField,
    cameras: &[Camera],
    cfg: &RenderConfig,
    oracle: Option<(&dyn RadianceField, &PseudoOptions)>,
) -> Result<EvalReport> {
    if cameras.is_empty() {
        return Err(Error::invalid("evaluation needs at least one camera"));
    }
    let float_cfg = RenderConfig {
        background: Some(cfg.background.unwrap_or(pkg.package.background)),
        ..*cfg
    };
    let mut vs_oracle = Vec::new();
    let mut vs_float = Vec::new();
    for (id, cam) in cameras.iter().enumerate() {
        let baked = pkg.render(cam, cfg)?;
        let reference = render_float(field, pkg.bvh(), cam, &float_cfg)?;
        compare(&mut vs_float, id, &baked, &reference)?;
        if let Some((scene, opts)) = oracle {
            let truth = render_oracle_image(scene, cam, opts)?;
            compare(&mut vs_oracle, id, &baked, &truth)?;
        }
    }
    Ok(EvalReport {
        mean_vs_oracle: mean_metrics(&vs_oracle),
        mean_vs_float: mean_metrics(&vs_float).expect("at least one camera"),
        vs_oracle,
        vs_float,
    })
}
