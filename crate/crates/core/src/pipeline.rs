//! End-to-end stages driven by a flat `key = value` config.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Every key is listed in [`CONFIG_KEYS`] with its default. Unknown keys,
//! repeated keys and unparsable values are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::baking::{
    bake_direction_map, bake_position_atlases, layout_atlas, package_bytes, write_asset_package, AssetPackage,
    DirectionFetch, DirectionGrid, PackageVariant,
};
use crate::error::{Error, Result};
use crate::field::{train, FactorizedField, FieldConfig, LossOptions, MissPolicy, TrainConfig, TrainOutcome};
use crate::geometry::{
    decimate, default_iso, enclose_dome, marching_cubes, remove_small_components, sample_density_grid, validate_mesh,
    Bvh, MeshReport, TriMesh,
};
use crate::math::{Aabb, Rgb, Vec3};
use crate::render::{eval_package, EvalReport, PreparedPackage, RenderConfig};
use crate::scene::{
    generate_pseudo_images, sample_camera_poses, AnalyticScene, BoundingSphere, BoxGrid, Camera, HomogeneousSlab,
    Intrinsics, PseudoOptions, RadianceField, RenderMode, TexturedSphere,
};
use crate::seed::stage_seed;

/// `(key, default, description)` for every accepted config key.
pub const CONFIG_KEYS: &[(&str, &str, &str)] = &[
    ("scene", "sphere", "analytic scene: sphere | box_grid | slab"),
    ("sphere_specular", "0.5", "specular strength of the sphere"),
    ("sphere_shininess", "6", "specular exponent of the sphere"),
    (
        "sphere_shell",
        "0.1",
        "half-width of the sphere's density ramp (0 = hard edge)",
    ),
    ("grid_k", "64", "density lattice points per axis for marching cubes"),
    (
        "grid_margin",
        "0.05",
        "lattice padding around the scene bounds, as a fraction of their extent",
    ),
    (
        "iso",
        "auto",
        "marching-cubes iso level; auto = midpoint of the sampled density range",
    ),
    (
        "min_component_fraction",
        "0.01",
        "drop mesh components smaller than this fraction of faces",
    ),
    ("decimate_faces", "0", "QEM decimation target face count (0 = keep all)"),
    ("unbounded", "false", "enclose the mesh in a dome and floor"),
    ("dome_radius", "6", "dome radius"),
    ("dome_floor_y", "-1.5", "height of the dome floor"),
    ("dome_subdivisions", "8", "dome rings from pole to rim"),
    ("cameras", "100", "training cameras"),
    ("image_size", "64", "training image width and height in pixels"),
    ("fov_deg", "40", "horizontal field of view of every camera"),
    ("camera_radius", "3.5", "distance of cameras from the scene center"),
    ("render_mode", "surface", "teacher rendering: surface | volume"),
    ("volume_samples", "256", "quadrature samples per ray in volume mode"),
    ("eval_cameras", "8", "evaluation cameras"),
    ("eval_size", "64", "evaluation image width and height in pixels"),
    ("dim", "32", "embedding dimension D (multiple of 4)"),
    ("pos_depth", "4", "position network linear layers"),
    ("pos_width", "64", "position network hidden width"),
    ("pos_freqs", "6", "position encoding frequencies"),
    ("dir_depth", "3", "direction network linear layers"),
    ("dir_width", "32", "direction network hidden width"),
    ("dir_freqs", "4", "direction encoding frequencies"),
    ("residual", "auto", "residual blocks: true | false | auto (depth >= 8)"),
    ("batch", "1024", "rays per training step"),
    ("steps", "20000", "training steps"),
    ("lr", "0.0005", "base learning rate"),
    ("warmup", "500", "linear warm-up steps"),
    ("cosine", "false", "cosine decay after warm-up"),
    (
        "hard_ratio",
        "0.5",
        "fraction of each batch drawn from the hardest decile",
    ),
    ("hard_refresh", "50", "steps between re-ranking hard rays"),
    ("log_every", "100", "steps between loss-history entries"),
    ("miss_policy", "background", "rays missing the mesh: background | drop"),
    ("detach_dir", "false", "stop gradients into the direction network"),
    ("p", "6", "texels per triangle side"),
    ("max_atlas_width", "8192", "largest allowed atlas side in pixels"),
    ("dir_elev", "32", "direction grid elevation rows"),
    ("dir_azim", "32", "direction grid azimuth columns"),
    ("direction_fetch", "nearest", "direction-map fetch: nearest | bilinear"),
    ("background", "1,1,1", "background color r,g,b in [0, 1]"),
    ("seed", "0", "root seed; stages derive their own seeds from it"),
    ("out_dir", "out", "output directory"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    Sphere,
    BoxGrid,
    Slab,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub scene: SceneKind,
    pub sphere_specular: f64,
    pub sphere_shininess: f64,
    pub sphere_shell: f64,
    pub grid_k: usize,
    pub grid_margin: f64,
    pub iso: Option<f64>,
    pub min_component_fraction: f64,
    pub decimate_faces: usize,
    pub unbounded: bool,
    pub dome_radius: f64,
    pub dome_floor_y: f64,
    pub dome_subdivisions: usize,
    pub cameras: usize,
    pub image_size: u32,
    pub fov_deg: f64,
    pub camera_radius: f64,
    pub render_mode: RenderMode,
    pub volume_samples: usize,
    pub eval_cameras: usize,
    pub eval_size: u32,
    pub field: FieldConfig,
    pub train: TrainConfig,
    pub p: usize,
    pub max_atlas_width: usize,
    pub grid: DirectionGrid,
    pub direction_fetch: DirectionFetch,
    pub background: Rgb,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut cfg = PipelineConfig {
            scene: SceneKind::Sphere,
            sphere_specular: 0.0,
            sphere_shininess: 0.0,
            sphere_shell: 0.0,
            grid_k: 0,
            grid_margin: 0.0,
            iso: None,
            min_component_fraction: 0.0,
            decimate_faces: 0,
            unbounded: false,
            dome_radius: 0.0,
            dome_floor_y: 0.0,
            dome_subdivisions: 0,
            cameras: 0,
            image_size: 0,
            fov_deg: 0.0,
            camera_radius: 0.0,
            render_mode: RenderMode::Surface,
            volume_samples: 0,
            eval_cameras: 0,
            eval_size: 0,
            field: FieldConfig::default(),
            train: TrainConfig::default(),
            p: 0,
            max_atlas_width: 0,
            grid: DirectionGrid::SYNTHETIC,
            direction_fetch: DirectionFetch::Nearest,
            background: Rgb::repeat(1.0),
            seed: 0,
            out_dir: PathBuf::new(),
        };
        for (k, v, _) in CONFIG_KEYS {
            cfg.set(k, v).expect("defaults parse");
        }
        cfg
    }
}

fn bad(key: &str, value: &str, expected: &str) -> Error {
    Error::Config(format!("key `{key}`: cannot parse {value:?} as {expected}"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str, expected: &str) -> Result<T> {
    v.parse().map_err(|_| bad(key, v, expected))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, v, "a boolean")),
    }
}

impl PipelineConfig {
    /// Parses a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got {line:?}", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: key `{k}` given twice", n + 1)));
            }
            cfg.set(k, v).map_err(|e| {
                Error::Config(format!(
                    "line {}: {}",
                    n + 1,
                    e.to_string().trim_start_matches("config error: ")
                ))
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::MissingFile(path.into())),
            Err(e) => return Err(Error::io(path, e)),
        };
        PipelineConfig::parse(&text)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let f = |what| num::<f64>(key, v, what);
        let u = |what| num::<usize>(key, v, what);
        match key {
            "scene" => {
                self.scene = match v {
                    "sphere" => SceneKind::Sphere,
                    "box_grid" => SceneKind::BoxGrid,
                    "slab" => SceneKind::Slab,
                    _ => return Err(bad(key, v, "sphere | box_grid | slab")),
                }
            }
            "sphere_specular" => self.sphere_specular = f("a number")?,
            "sphere_shininess" => self.sphere_shininess = f("a number")?,
            "sphere_shell" => self.sphere_shell = f("a number")?,
            "grid_k" => self.grid_k = u("a count")?,
            "grid_margin" => self.grid_margin = f("a number")?,
            "iso" => {
                self.iso = if v == "auto" {
                    None
                } else {
                    Some(f("a number or auto")?)
                }
            }
            "min_component_fraction" => self.min_component_fraction = f("a number")?,
            "decimate_faces" => self.decimate_faces = u("a count")?,
            "unbounded" => self.unbounded = boolean(key, v)?,
            "dome_radius" => self.dome_radius = f("a number")?,
            "dome_floor_y" => self.dome_floor_y = f("a number")?,
            "dome_subdivisions" => self.dome_subdivisions = u("a count")?,
            "cameras" => self.cameras = u("a count")?,
            "image_size" => self.image_size = num(key, v, "a pixel count")?,
            "fov_deg" => self.fov_deg = f("a number")?,
            "camera_radius" => self.camera_radius = f("a number")?,
            "render_mode" => {
                self.render_mode = match v {
                    "surface" => RenderMode::Surface,
                    "volume" => RenderMode::Volume,
                    _ => return Err(bad(key, v, "surface | volume")),
                }
            }
            "volume_samples" => self.volume_samples = u("a count")?,
            "eval_cameras" => self.eval_cameras = u("a count")?,
            "eval_size" => self.eval_size = num(key, v, "a pixel count")?,
            "dim" => self.field.dim = u("a count")?,
            "pos_depth" => self.field.pos_depth = u("a count")?,
            "pos_width" => self.field.pos_width = u("a count")?,
            "pos_freqs" => self.field.pos_freqs = u("a count")?,
            "dir_depth" => self.field.dir_depth = u("a count")?,
            "dir_width" => self.field.dir_width = u("a count")?,
            "dir_freqs" => self.field.dir_freqs = u("a count")?,
            "residual" => self.field.residual = if v == "auto" { None } else { Some(boolean(key, v)?) },
            "batch" => self.train.batch = u("a count")?,
            "steps" => self.train.steps = num(key, v, "a count")?,
            "lr" => self.train.base_lr = f("a number")?,
            "warmup" => self.train.warmup = num(key, v, "a count")?,
            "cosine" => self.train.cosine = boolean(key, v)?,
            "hard_ratio" => self.train.hard_ratio = f("a number")?,
            "hard_refresh" => self.train.hard_refresh = num(key, v, "a count")?,
            "log_every" => self.train.log_every = num(key, v, "a count")?,
            "miss_policy" => {
                self.train.loss.miss = match v {
                    "background" => MissPolicy::Background,
                    "drop" => MissPolicy::Drop,
                    _ => return Err(bad(key, v, "background | drop")),
                }
            }
            "detach_dir" => self.train.loss.detach_dir = boolean(key, v)?,
            "p" => self.p = u("a count")?,
            "max_atlas_width" => self.max_atlas_width = u("a count")?,
            "dir_elev" => self.grid.n_elev = u("a count")?,
            "dir_azim" => self.grid.n_azim = u("a count")?,
            "direction_fetch" => {
                self.direction_fetch = match v {
                    "nearest" => DirectionFetch::Nearest,
                    "bilinear" => DirectionFetch::Bilinear,
                    _ => return Err(bad(key, v, "nearest | bilinear")),
                }
            }
            "background" => {
                let c: Vec<f64> = v
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(key, v, "r,g,b"))?;
                if c.len() != 3 {
                    return Err(bad(key, v, "r,g,b"));
                }
                self.background = Rgb::new(c[0], c[1], c[2]);
            }
            "seed" => self.seed = num(key, v, "an unsigned integer")?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            _ => return Err(Error::Config(format!("unknown key `{key}` (see --help for the list)"))),
        }
        Ok(())
    }

    /// Re-checks every constraint the stages rely on.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.grid_k < 2 {
            return fail(format!("grid_k must be at least 2, got {}", self.grid_k));
        }
        if !(0.0..1.0).contains(&self.min_component_fraction) {
            return fail(format!(
                "min_component_fraction {} outside [0, 1)",
                self.min_component_fraction
            ));
        }
        if self.decimate_faces != 0 && self.decimate_faces < 4 {
            return fail("decimate_faces must be 0 or at least 4".into());
        }
        if self.unbounded && (self.dome_subdivisions == 0 || !(self.dome_radius > 0.0)) {
            return fail("unbounded scenes need dome_radius > 0 and dome_subdivisions >= 1".into());
        }
        if self.cameras == 0 || self.eval_cameras == 0 || self.image_size == 0 {
            return fail("camera and image counts must be positive".into());
        }
        if self.eval_size < 11 {
            return fail(format!(
                "eval_size {} is below the 11-pixel SSIM window",
                self.eval_size
            ));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return fail(format!("fov_deg {} outside (0, 180)", self.fov_deg));
        }
        if !(self.camera_radius > 0.0) {
            return fail("camera_radius must be positive".into());
        }
        if self.render_mode == RenderMode::Volume && self.volume_samples == 0 {
            return fail("volume_samples must be positive".into());
        }
        if self.field.dim == 0 || !self.field.dim.is_multiple_of(4) {
            return fail(format!("dim {} must be a positive multiple of 4", self.field.dim));
        }
        if self.field.pos_depth < 2 || self.field.dir_depth < 2 {
            return fail("networks need at least 2 linear layers".into());
        }
        if self.field.pos_width == 0 || self.field.dir_width == 0 {
            return fail("network widths must be positive".into());
        }
        if self.p == 0 {
            return fail("p must be at least 1".into());
        }
        if self.grid.n_elev < 2 || self.grid.n_azim == 0 {
            return fail("direction grid needs dir_elev >= 2 and dir_azim >= 1".into());
        }
        if !self.background.iter().all(|c| (0.0..=1.0).contains(c)) {
            return fail("background components must lie in [0, 1]".into());
        }
        self.train.validate()
    }

    /// Effective config in file syntax, one line per key.
    pub fn to_text(&self) -> String {
        let b = |x: bool| if x { "true" } else { "false" };
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line(
            "scene",
            match self.scene {
                SceneKind::Sphere => "sphere",
                SceneKind::BoxGrid => "box_grid",
                SceneKind::Slab => "slab",
            }
            .into(),
        );
        line("sphere_specular", self.sphere_specular.to_string());
        line("sphere_shininess", self.sphere_shininess.to_string());
        line("sphere_shell", self.sphere_shell.to_string());
        line("grid_k", self.grid_k.to_string());
        line("grid_margin", self.grid_margin.to_string());
        line("iso", self.iso.map_or("auto".into(), |x| x.to_string()));
        line("min_component_fraction", self.min_component_fraction.to_string());
        line("decimate_faces", self.decimate_faces.to_string());
        line("unbounded", b(self.unbounded).into());
        line("dome_radius", self.dome_radius.to_string());
        line("dome_floor_y", self.dome_floor_y.to_string());
        line("dome_subdivisions", self.dome_subdivisions.to_string());
        line("cameras", self.cameras.to_string());
        line("image_size", self.image_size.to_string());
        line("fov_deg", self.fov_deg.to_string());
        line("camera_radius", self.camera_radius.to_string());
        line(
            "render_mode",
            match self.render_mode {
                RenderMode::Surface => "surface",
                RenderMode::Volume => "volume",
            }
            .into(),
        );
        line("volume_samples", self.volume_samples.to_string());
        line("eval_cameras", self.eval_cameras.to_string());
        line("eval_size", self.eval_size.to_string());
        line("dim", self.field.dim.to_string());
        line("pos_depth", self.field.pos_depth.to_string());
        line("pos_width", self.field.pos_width.to_string());
        line("pos_freqs", self.field.pos_freqs.to_string());
        line("dir_depth", self.field.dir_depth.to_string());
        line("dir_width", self.field.dir_width.to_string());
        line("dir_freqs", self.field.dir_freqs.to_string());
        line("residual", self.field.residual.map_or("auto", b).into());
        line("batch", self.train.batch.to_string());
        line("steps", self.train.steps.to_string());
        line("lr", self.train.base_lr.to_string());
        line("warmup", self.train.warmup.to_string());
        line("cosine", b(self.train.cosine).into());
        line("hard_ratio", self.train.hard_ratio.to_string());
        line("hard_refresh", self.train.hard_refresh.to_string());
        line("log_every", self.train.log_every.to_string());
        line(
            "miss_policy",
            match self.train.loss.miss {
                MissPolicy::Background => "background",
                MissPolicy::Drop => "drop",
            }
            .into(),
        );
        line("detach_dir", b(self.train.loss.detach_dir).into());
        line("p", self.p.to_string());
        line("max_atlas_width", self.max_atlas_width.to_string());
        line("dir_elev", self.grid.n_elev.to_string());
        line("dir_azim", self.grid.n_azim.to_string());
        line(
            "direction_fetch",
            match self.direction_fetch {
                DirectionFetch::Nearest => "nearest",
                DirectionFetch::Bilinear => "bilinear",
            }
            .into(),
        );
        line(
            "background",
            format!("{},{},{}", self.background.x, self.background.y, self.background.z),
        );
        line("seed", self.seed.to_string());
        line("out_dir", self.out_dir.display().to_string());
        s
    }

    /// Training config with the stage seed and background filled in.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: stage_seed(self.seed, "train"),
            loss: LossOptions {
                background: self.background,
                ..self.train.loss
            },
            ..self.train
        }
    }

    pub fn render_config(&self) -> RenderConfig {
        RenderConfig {
            background: Some(self.background),
            direction_fetch: self.direction_fetch,
            ..RenderConfig::default()
        }
    }

    pub fn pseudo_options(&self) -> PseudoOptions {
        PseudoOptions {
            mode: self.render_mode,
            background: self.background,
            volume_samples: self.volume_samples,
        }
    }
}

/// The analytic scene selected by the config.
pub fn build_scene(cfg: &PipelineConfig) -> AnalyticScene {
    match cfg.scene {
        SceneKind::Sphere => AnalyticScene::Sphere(TexturedSphere {
            specular: cfg.sphere_specular,
            shininess: cfg.sphere_shininess,
            shell: cfg.sphere_shell,
            ..TexturedSphere::default()
        }),
        SceneKind::BoxGrid => AnalyticScene::BoxGrid(BoxGrid {
            region: Aabb::cube(0.8),
            sigma: 10.0,
            cell: 0.4,
            color_a: Rgb::new(0.9, 0.8, 0.3),
            color_b: Rgb::new(0.2, 0.3, 0.7),
        }),
        SceneKind::Slab => AnalyticScene::Slab(HomogeneousSlab {
            region: Aabb::new(Vec3::new(-1.0, -0.25, -1.0), Vec3::new(1.0, 0.25, 1.0)),
            sigma: 10.0,
            color: Rgb::new(0.3, 0.6, 0.4),
        }),
    }
}

/// Collision mesh: marching cubes, small-component removal, optional
/// decimation and optional dome enclosure.
pub fn distill_mesh(cfg: &PipelineConfig, scene: &dyn RadianceField) -> Result<(TriMesh, MeshReport)> {
    let b = scene.bounds();
    let pad = b.extent() * cfg.grid_margin;
    let bounds = Aabb::new(b.min - pad, b.max + pad);
    let grid = sample_density_grid(scene, cfg.grid_k, bounds)?;
    let iso = cfg.iso.unwrap_or_else(|| default_iso(&grid));
    let mut mesh = marching_cubes(&grid, iso)?;
    if cfg.min_component_fraction > 0.0 {
        mesh = remove_small_components(&mesh, cfg.min_component_fraction)?;
    }
    if cfg.decimate_faces > 0 {
        mesh = decimate(&mesh, cfg.decimate_faces)?.mesh;
    }
    if cfg.unbounded {
        mesh = enclose_dome(&mesh, cfg.dome_radius, cfg.dome_floor_y, cfg.dome_subdivisions)?;
    }
    let report = validate_mesh(&mesh);
    Ok((mesh, report))
}

fn cameras(cfg: &PipelineConfig, n: usize, size: u32, label: &str) -> Result<Vec<Camera>> {
    let sphere = BoundingSphere {
        center: Vec3::zeros(),
        radius: cfg.camera_radius,
    };
    sample_camera_poses(
        n,
        &sphere,
        Intrinsics::from_fov(size, size, cfg.fov_deg),
        stage_seed(cfg.seed, label),
    )
}

pub fn training_cameras(cfg: &PipelineConfig) -> Result<Vec<Camera>> {
    cameras(cfg, cfg.cameras, cfg.image_size, "cameras/train")
}

/// Held-out cameras, drawn from a separate seed stream.
pub fn evaluation_cameras(cfg: &PipelineConfig) -> Result<Vec<Camera>> {
    cameras(cfg, cfg.eval_cameras, cfg.eval_size, "cameras/eval")
}

pub fn initial_field(cfg: &PipelineConfig) -> Result<FactorizedField> {
    FactorizedField::init(&cfg.field, stage_seed(cfg.seed, "field/init"))
}

/// Pseudo-images from the training cameras, then the photometric fit.
pub fn train_field(cfg: &PipelineConfig, scene: &dyn RadianceField, mesh: &TriMesh) -> Result<TrainOutcome> {
    let cams = training_cameras(cfg)?;
    let pseudo = generate_pseudo_images(scene, &cams, &cfg.pseudo_options(), stage_seed(cfg.seed, "pseudo"))?;
    let bvh = Bvh::build(mesh)?;
    train(&initial_field(cfg)?, &pseudo, &bvh, &cfg.train_config())
}

/// Bakes and quantizes the factorized package at the config's `p` and grid.
pub fn bake_package(cfg: &PipelineConfig, field: &FactorizedField, mesh: &TriMesh) -> Result<AssetPackage> {
    let layout = layout_atlas(mesh.faces.len(), cfg.p, cfg.max_atlas_width)?;
    let [u, v, w] = bake_position_atlases(field, mesh, &layout)?;
    let beta = bake_direction_map(field, &cfg.grid)?;
    AssetPackage::assemble(
        PackageVariant::Factorized,
        mesh,
        layout,
        cfg.grid,
        cfg.background,
        &[u, v, w, beta],
    )
}

/// View-independent `rgb_normal` package at the same texel density, for
/// comparison against [`bake_package`].
pub fn bake_baseline_package(cfg: &PipelineConfig, field: &FactorizedField, mesh: &TriMesh) -> Result<AssetPackage> {
    let layout = layout_atlas(mesh.faces.len(), cfg.p, cfg.max_atlas_width)?;
    crate::render::bake_rgb_baseline(field, mesh, &layout, cfg.background)
}

/// Evaluation on the held-out cameras against the continuous field and the
/// analytic scene.
pub fn evaluate(
    cfg: &PipelineConfig,
    pkg: &PreparedPackage,
    field: &FactorizedField,
    scene: &dyn RadianceField,
) -> Result<EvalReport> {
    let cams = evaluation_cameras(cfg)?;
    eval_package(
        pkg,
        field,
        &cams,
        &cfg.render_config(),
        Some((scene, &cfg.pseudo_options())),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Texels,
    Dim,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<SweepAxis> {
        match s {
            "texels" | "p" => Ok(SweepAxis::Texels),
            "dim" | "D" => Ok(SweepAxis::Dim),
            _ => Err(Error::Config(format!(
                "unknown sweep axis {s:?}; expected texels or dim"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: usize,
    /// Mean over evaluation cameras, baked render against the analytic scene.
    pub psnr: f64,
    pub ssim: f64,
    /// Mean PSNR of the baked render against the continuous field.
    pub psnr_vs_float: f64,
    pub package_bytes: u64,
}

/// Re-bakes (texels) or retrains and re-bakes (dim) for each value, writing
/// every package under `out_dir/sweep_<axis>_<value>`. A texel sweep reuses
/// `trained` when given.
pub fn sweep(
    cfg: &PipelineConfig,
    axis: SweepAxis,
    values: &[usize],
    scene: &dyn RadianceField,
    mesh: &TriMesh,
    trained: Option<&FactorizedField>,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let shared = match (axis, trained) {
        (SweepAxis::Texels, Some(f)) => Some(f.clone()),
        (SweepAxis::Texels, None) => Some(train_field(cfg, scene, mesh)?.field),
        (SweepAxis::Dim, _) => None,
    };
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut c = cfg.clone();
        let label = match axis {
            SweepAxis::Texels => {
                c.p = value;
                "p"
            }
            SweepAxis::Dim => {
                c.field.dim = value;
                "dim"
            }
        };
        c.validate()?;
        let field = match &shared {
            Some(f) => f.clone(),
            None => train_field(&c, scene, mesh)?.field,
        };
        let pkg = bake_package(&c, &field, mesh)?;
        let dir = cfg.out_dir.join(format!("sweep_{label}_{value}"));
        write_asset_package(&dir, &pkg)?;
        let bytes = package_bytes(&dir)?;
        let report = evaluate(&c, &PreparedPackage::new(pkg)?, &field, scene)?;
        let oracle = report.mean_vs_oracle.expect("oracle given");
        rows.push(SweepRow {
            value,
            psnr: oracle.psnr,
            ssim: oracle.ssim,
            psnr_vs_float: report.mean_vs_float.psnr,
            package_bytes: bytes,
        });
    }
    Ok(rows)
}

fn csv_db(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        v.to_string()
    }
}

/// `value,psnr,ssim,package_bytes,psnr_vs_float` with a header line.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("value,psnr,ssim,package_bytes,psnr_vs_float\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.value,
            csv_db(r.psnr),
            r.ssim,
            r.package_bytes,
            csv_db(r.psnr_vs_float)
        );
    }
    s
}
