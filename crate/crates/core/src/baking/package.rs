use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::atlas::{pad_unused, quantize_atlas, AtlasRole, ChannelAtlas, QuantParams};
use super::direction::DirectionGrid;
use super::layout::{with_atlas_uvs, TexelLayout, DEFAULT_MAX_ATLAS_WIDTH};
use super::tiling::{decode_channel_tiled_png, encode_channel_tiled_png, tile_grid};
use crate::error::{Error, Result};
use crate::geometry::{obj_string, parse_obj, TriMesh};
use crate::math::Rgb;

pub const PACKAGE_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MESH_FILE: &str = "mesh.obj";
pub const ELEVATION_CONVENTION: &str = "from+y";

/// Kind of content the atlases hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PackageVariant {
    Factorized,
    RgbNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantSet {
    pub m_u: QuantParams,
    pub m_v: QuantParams,
    pub m_w: QuantParams,
    pub m_beta: QuantParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PngFiles {
    pub m_u: String,
    pub m_v: String,
    pub m_w: String,
    pub m_beta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub variant: PackageVariant,
    #[serde(rename = "D")]
    pub d: usize,
    pub p: usize,
    pub texels_per_face: usize,
    pub n_faces: usize,
    pub atlas_width: usize,
    pub atlas_height: usize,
    pub quads_per_row: usize,
    pub dir_elev: usize,
    pub dir_azim: usize,
    pub elevation_convention: String,
    pub background: [f64; 3],
    pub quant: QuantSet,
    pub mesh_file: String,
    pub png_files: PngFiles,
}

/// Mesh plus four quantized atlases, ready to write or render.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetPackage {
    pub variant: PackageVariant,
    /// Mesh whose corner uvs address the atlas; face index = atlas slot.
    pub mesh: TriMesh,
    pub layout: TexelLayout,
    pub grid: DirectionGrid,
    pub background: Rgb,
    /// `M_u, M_v, M_w, M_β`.
    pub atlases: [ChannelAtlas<u8>; 4],
    pub quant: [QuantParams; 4],
}

impl AssetPackage {
    /// Quantizes float atlases (position statistics over used texels only).
    pub fn assemble(
        variant: PackageVariant,
        mesh: &TriMesh,
        layout: TexelLayout,
        grid: DirectionGrid,
        background: Rgb,
        floats: &[ChannelAtlas<f32>; 4],
    ) -> Result<AssetPackage> {
        let mesh = with_atlas_uvs(mesh, &layout)?;
        let used = layout.used_mask();
        let d = floats[0].channels;
        for (a, role) in floats.iter().zip(AtlasRole::ALL) {
            let (w, h) = if role == AtlasRole::MBeta {
                (grid.n_azim, grid.n_elev)
            } else {
                (layout.width, layout.height)
            };
            if a.channels != d || (a.width, a.height) != (w, h) {
                return Err(Error::DimensionMismatch(format!(
                    "{} atlas is {}x{}x{}, expected {w}x{h}x{d}",
                    role.key(),
                    a.width,
                    a.height,
                    a.channels
                )));
            }
        }
        tile_grid(d)?;
        let mut atlases = Vec::with_capacity(4);
        let mut quant = Vec::with_capacity(4);
        for (i, a) in floats.iter().enumerate() {
            let mask = (i < 3).then_some(used.as_slice());
            let (mut q, p) = quantize_atlas(a, mask)?;
            if let Some(m) = mask {
                pad_unused(&mut q, m);
            }
            q.role = AtlasRole::ALL[i];
            atlases.push(q);
            quant.push(p);
        }
        Ok(AssetPackage {
            variant,
            mesh,
            layout,
            grid,
            background,
            atlases: atlases.try_into().expect("four atlases"),
            quant: quant.try_into().expect("four quant sets"),
        })
    }

    pub fn dim(&self) -> usize {
        self.atlases[0].channels
    }

    pub fn manifest(&self) -> Manifest {
        let png = |r: AtlasRole| format!("{}.png", r.key());
        Manifest {
            version: PACKAGE_VERSION,
            variant: self.variant,
            d: self.dim(),
            p: self.layout.p,
            texels_per_face: self.layout.texels_per_face,
            n_faces: self.layout.n_faces,
            atlas_width: self.layout.width,
            atlas_height: self.layout.height,
            quads_per_row: self.layout.quads_per_row,
            dir_elev: self.grid.n_elev,
            dir_azim: self.grid.n_azim,
            elevation_convention: ELEVATION_CONVENTION.into(),
            background: [self.background.x, self.background.y, self.background.z],
            quant: QuantSet {
                m_u: self.quant[0].clone(),
                m_v: self.quant[1].clone(),
                m_w: self.quant[2].clone(),
                m_beta: self.quant[3].clone(),
            },
            mesh_file: MESH_FILE.into(),
            png_files: PngFiles {
                m_u: png(AtlasRole::MU),
                m_v: png(AtlasRole::MV),
                m_w: png(AtlasRole::MW),
                m_beta: png(AtlasRole::MBeta),
            },
        }
    }

    /// Uncompressed bytes of the three position atlases' texels: `3·n_faces·T·D`.
    pub fn position_payload_bytes(&self) -> usize {
        position_payload_bytes(&self.layout, self.dim())
    }
}

pub fn position_payload_bytes(layout: &TexelLayout, d: usize) -> usize {
    3 * layout.total_texels() * d
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `mesh.obj`, the four channel-tiled PNGs and `manifest.json` into
/// `dir` (created if needed).
pub fn write_asset_package(dir: &Path, pkg: &AssetPackage) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = pkg.manifest();
    write_file(&dir.join(&manifest.mesh_file), obj_string(&pkg.mesh).as_bytes())?;
    let names = [
        &manifest.png_files.m_u,
        &manifest.png_files.m_v,
        &manifest.png_files.m_w,
        &manifest.png_files.m_beta,
    ];
    for (a, name) in pkg.atlases.iter().zip(names) {
        write_file(&dir.join(name), &encode_channel_tiled_png(a)?)?;
    }
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format {
        what: MANIFEST_FILE.into(),
        reason: e.to_string(),
    })?;
    write_file(&dir.join(MANIFEST_FILE), json.as_bytes())?;
    Ok(manifest)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    match std::fs::read(path) {
        Ok(b) => Ok(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile(path.to_path_buf())),
        Err(e) => Err(Error::io(path, e)),
    }
}

fn mismatch(msg: String) -> Error {
    Error::DimensionMismatch(msg)
}

/// Reads and validates a package directory. Missing files, version
/// mismatches, inconsistent dimensions and undecodable files surface as
/// distinct error variants.
pub fn read_asset_package(dir: &Path) -> Result<AssetPackage> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let raw = read_file(&manifest_path)?;
    let value: serde_json::Value = serde_json::from_slice(&raw).map_err(|e| Error::Decode {
        path: manifest_path.clone(),
        reason: e.to_string(),
    })?;
    if let Some(v) = value.get("version").and_then(|v| v.as_u64()) {
        if v != PACKAGE_VERSION as u64 {
            return Err(Error::Version {
                what: MANIFEST_FILE.into(),
                found: v as u32,
                expected: PACKAGE_VERSION,
            });
        }
    }
    let m: Manifest = serde_json::from_value(value).map_err(|e| Error::Decode {
        path: manifest_path.clone(),
        reason: e.to_string(),
    })?;
    if m.elevation_convention != ELEVATION_CONVENTION {
        return Err(Error::Format {
            what: MANIFEST_FILE.into(),
            reason: format!("unsupported elevation convention {:?}", m.elevation_convention),
        });
    }
    if m.d == 0 || !m.d.is_multiple_of(4) {
        return Err(mismatch(format!("manifest D={} is not a positive multiple of 4", m.d)));
    }
    let layout = TexelLayout::with_quads_per_row(m.n_faces, m.p, m.quads_per_row, DEFAULT_MAX_ATLAS_WIDTH)?;
    if layout.texels_per_face != m.texels_per_face || (layout.width, layout.height) != (m.atlas_width, m.atlas_height) {
        return Err(mismatch(format!(
            "manifest atlas {}x{} with {} texels per face disagrees with p={} over {} faces ({}x{}, {})",
            m.atlas_width,
            m.atlas_height,
            m.texels_per_face,
            m.p,
            m.n_faces,
            layout.width,
            layout.height,
            layout.texels_per_face
        )));
    }
    let grid = DirectionGrid::new(m.dir_elev, m.dir_azim)?;
    if !m.background.iter().all(|c| (0.0..=1.0).contains(c)) {
        return Err(Error::Format {
            what: MANIFEST_FILE.into(),
            reason: format!("background {:?} outside [0, 1]", m.background),
        });
    }
    let quant = [&m.quant.m_u, &m.quant.m_v, &m.quant.m_w, &m.quant.m_beta];
    for (q, role) in quant.iter().zip(AtlasRole::ALL) {
        if q.ranges.len() != m.d {
            return Err(mismatch(format!(
                "quant.{} has {} ranges for D={}",
                role.key(),
                q.ranges.len(),
                m.d
            )));
        }
        q.validate(&format!("quant.{}", role.key()))?;
    }

    let mesh_path = dir.join(&m.mesh_file);
    let text = String::from_utf8(read_file(&mesh_path)?).map_err(|e| Error::Decode {
        path: mesh_path.clone(),
        reason: e.to_string(),
    })?;
    let mesh = parse_obj(&text).map_err(|reason| Error::Decode {
        path: mesh_path.clone(),
        reason,
    })?;
    if mesh.faces.len() != m.n_faces {
        return Err(mismatch(format!(
            "{} has {} faces, manifest says {}",
            m.mesh_file,
            mesh.faces.len(),
            m.n_faces
        )));
    }
    let uvs = mesh.corner_uvs.as_ref().ok_or_else(|| Error::Decode {
        path: mesh_path.clone(),
        reason: "faces carry no texture coordinates".into(),
    })?;
    for (f, corners) in uvs.iter().enumerate() {
        let want = layout.corner_uvs(f);
        let off = corners
            .iter()
            .zip(&want)
            .any(|(a, b)| (a[0] - b[0]).abs() > 1e-9 || (a[1] - b[1]).abs() > 1e-9);
        if off {
            return Err(mismatch(format!(
                "{} face {f} texture coordinates do not address atlas slot {f}",
                m.mesh_file
            )));
        }
    }

    let names = [
        &m.png_files.m_u,
        &m.png_files.m_v,
        &m.png_files.m_w,
        &m.png_files.m_beta,
    ];
    let mut atlases = Vec::with_capacity(4);
    for (name, role) in names.into_iter().zip(AtlasRole::ALL) {
        let path: PathBuf = dir.join(name);
        let bytes = read_file(&path)?;
        let (w, h) = if role == AtlasRole::MBeta {
            (grid.n_azim, grid.n_elev)
        } else {
            (layout.width, layout.height)
        };
        let a = decode_channel_tiled_png(&bytes, role, m.d, w, h).map_err(|e| match e {
            Error::Format { reason, .. } => Error::Decode {
                path: path.clone(),
                reason,
            },
            Error::DimensionMismatch(msg) => mismatch(format!("{name}: {msg}")),
            other => other,
        })?;
        atlases.push(a);
    }
    let background = Rgb::new(m.background[0], m.background[1], m.background[2]);
    Ok(AssetPackage {
        variant: m.variant,
        mesh,
        layout,
        grid,
        background,
        atlases: atlases.try_into().expect("four atlases"),
        quant: [
            m.quant.m_u.clone(),
            m.quant.m_v.clone(),
            m.quant.m_w.clone(),
            m.quant.m_beta.clone(),
        ],
    })
}

/// Total size of the files a package consists of.
pub fn package_bytes(dir: &Path) -> Result<u64> {
    let m = read_asset_package(dir)?.manifest();
    let mut total = 0;
    for name in [
        MANIFEST_FILE,
        &m.mesh_file,
        &m.png_files.m_u,
        &m.png_files.m_v,
        &m.png_files.m_w,
        &m.png_files.m_beta,
    ] {
        let p = dir.join(name);
        total += std::fs::metadata(&p).map_err(|e| Error::io(&p, e))?.len();
    }
    Ok(total)
}
