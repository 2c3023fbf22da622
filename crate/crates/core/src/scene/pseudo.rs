use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::{Rgb, Vec3};
use crate::par;
use crate::render::ImageBuffer;

use super::{volume_render_segment, Camera, RadianceField, Ray};

pub const PSEUDO_MAGIC: [u8; 4] = *b"RRPS";
pub const PSEUDO_VERSION: u32 = 1;
const HEADER_BYTES: usize = 16;
const RECORD_BYTES: usize = 9 * 4;

/// How the teacher field is turned into pixel colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    /// Quadrature over the field's bounding box.
    Volume,
    /// Field color at the analytic first surface crossing.
    Surface,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoOptions {
    pub mode: RenderMode,
    pub background: Rgb,
    pub volume_samples: usize,
}

impl Default for PseudoOptions {
    fn default() -> Self {
        PseudoOptions {
            mode: RenderMode::Surface,
            background: Rgb::repeat(1.0),
            volume_samples: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoRecord {
    pub ray: Ray,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationMeta {
    pub seed: u64,
    pub camera_count: usize,
    pub width: u32,
    pub height: u32,
}

/// Supervision rays with their teacher colors, camera-major then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoImageSet {
    pub records: Vec<PseudoRecord>,
    /// Absent for sets loaded from disk; the file stores only records.
    pub meta: Option<GenerationMeta>,
}

/// Color seen along `ray` under `opts`, composited over the background.
pub fn shade_ray(field: &dyn RadianceField, ray: &Ray, opts: &PseudoOptions) -> Result<Rgb> {
    match opts.mode {
        RenderMode::Surface => Ok(match field.surface_hit(ray) {
            Some(t) => field.color(&ray.at(t), &ray.direction),
            None => opts.background,
        }),
        RenderMode::Volume => {
            let b = field.bounds();
            match b.intersect(&ray.origin, &ray.inv_direction(), 0.0, f64::INFINITY) {
                Some((t0, t1)) if t1 > t0 => {
                    let seg = volume_render_segment::<rand_chacha::ChaCha8Rng>(
                        field,
                        ray,
                        t0,
                        t1,
                        opts.volume_samples,
                        None,
                    )?;
                    Ok(seg.over(&opts.background).map(|x| x.clamp(0.0, 1.0)))
                }
                _ => Ok(opts.background),
            }
        }
    }
}

/// Renders one pixel record per pixel per camera.
pub fn generate_pseudo_images(
    field: &dyn RadianceField,
    cameras: &[Camera],
    opts: &PseudoOptions,
    seed: u64,
) -> Result<PseudoImageSet> {
    let first = cameras
        .first()
        .ok_or_else(|| Error::invalid("pseudo-image generation needs at least one camera"))?;
    let per_camera = par::try_map_range(cameras.len(), |ci| {
        let cam = &cameras[ci];
        let (w, h) = (cam.width(), cam.height());
        let mut out = Vec::with_capacity((w * h) as usize);
        for y in 0..h {
            for x in 0..w {
                let ray = cam.pixel_ray(x, y);
                let color = shade_ray(field, &ray, opts)?;
                out.push(PseudoRecord { ray, color });
            }
        }
        Ok::<_, Error>(out)
    })?;
    Ok(PseudoImageSet {
        records: per_camera.into_iter().flatten().collect(),
        meta: Some(GenerationMeta {
            seed,
            camera_count: cameras.len(),
            width: first.width(),
            height: first.height(),
        }),
    })
}

/// Ground-truth image of `field` from `camera`.
pub fn render_oracle_image(field: &dyn RadianceField, camera: &Camera, opts: &PseudoOptions) -> Result<ImageBuffer> {
    let (w, h) = (camera.width(), camera.height());
    let rows = par::try_map_range(h as usize, |y| {
        (0..w)
            .map(|x| shade_ray(field, &camera.pixel_ray(x, y as u32), opts))
            .collect::<Result<Vec<_>>>()
    })?;
    ImageBuffer::from_pixels(w, h, rows.into_iter().flatten().collect())
}

impl PseudoImageSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn mean_color(&self) -> Rgb {
        let sum: Rgb = self.records.iter().map(|r| r.color).sum();
        sum / self.records.len().max(1) as f64
    }

    /// Little-endian: `"RRPS"`, version `u32`, count `u64`, then per record
    /// `origin[3] direction[3] color[3]` as `f32`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + self.records.len() * RECORD_BYTES);
        out.extend_from_slice(&PSEUDO_MAGIC);
        out.extend_from_slice(&PSEUDO_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        for r in &self.records {
            for v in r.ray.origin.iter().chain(r.ray.direction.iter()).chain(r.color.iter()) {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<PseudoImageSet> {
        let bad = |reason: String| Error::Format {
            what: "pseudo-image file".into(),
            reason,
        };
        if bytes.len() < HEADER_BYTES {
            return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if bytes[..4] != PSEUDO_MAGIC {
            return Err(bad("bad magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != PSEUDO_VERSION {
            return Err(Error::Version {
                what: "pseudo-image file".into(),
                found: version,
                expected: PSEUDO_VERSION,
            });
        }
        let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let body = &bytes[HEADER_BYTES..];
        if body.len() != count * RECORD_BYTES {
            return Err(bad(format!(
                "header promises {count} records but body holds {} bytes",
                body.len()
            )));
        }
        let records = body
            .chunks_exact(RECORD_BYTES)
            .map(|chunk| {
                let f: Vec<f64> = chunk
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
                    .collect();
                let direction = Vec3::new(f[3], f[4], f[5]);
                let ray = Ray::new(Vec3::new(f[0], f[1], f[2]), direction)?;
                let color = Rgb::new(f[6], f[7], f[8]);
                if !color.iter().all(|c| (0.0..=1.0).contains(c)) {
                    return Err(bad(format!("color {color:?} outside [0, 1]")));
                }
                Ok(PseudoRecord {
                    ray: Ray::through(ray.origin, ray.direction),
                    color,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PseudoImageSet { records, meta: None })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<PseudoImageSet> {
        let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut buf = Vec::new();
        f.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
        PseudoImageSet::from_bytes(&buf)
    }
}
