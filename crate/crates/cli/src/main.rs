use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lfbake::baking::{read_asset_package, write_asset_package, DirectionFetch};
use lfbake::field::{read_checkpoint, write_checkpoint};
use lfbake::geometry::{read_obj, write_obj};
use lfbake::pipeline::{self, PipelineConfig, SweepAxis, CONFIG_KEYS};
use lfbake::render::{BaselineMode, PreparedPackage, RenderConfig};
use lfbake::scene::{Camera, Intrinsics};
use lfbake::{Error, ErrorKind, Vec3};

mod serve;

const THREADS_ENV: &str = "RRND_THREADS";

#[derive(Parser)]
#[command(
    name = "lfbake",
    version,
    about = "Distill, bake and render light-field asset packages"
)]
#[command(after_long_help = config_help())]
struct Cli {
    /// Worker threads (falls back to RRND_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Flat key = value config file; omitted keys take their defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set p=12`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the collision mesh and write mesh.obj plus mesh_report.json.
    DistillMesh {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Render pseudo-images, fit the factorized field, write checkpoint.rrff
    /// and loss_history.json.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Collision mesh (default: <out_dir>/mesh.obj).
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Bake and quantize an asset package (default: <out_dir>/package).
    Bake {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Bake the view-independent rgb_normal package instead.
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an asset package from one camera to PNG.
    Render {
        #[arg(long)]
        package: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a lossless float image (.pfm).
        #[arg(long)]
        pfm: Option<PathBuf>,
        #[arg(long, default_value = "0,0,3.5", value_parser = parse_vec3)]
        eye: Vec3,
        #[arg(long, default_value = "0,0,0", value_parser = parse_vec3)]
        target: Vec3,
        #[arg(long, default_value = "0,1,0", value_parser = parse_vec3)]
        up: Vec3,
        #[arg(long, default_value_t = 256)]
        width: u32,
        #[arg(long, default_value_t = 256)]
        height: u32,
        /// Horizontal field of view in degrees.
        #[arg(long, default_value_t = 40.0)]
        fov: f64,
        /// nearest | bilinear
        #[arg(long, default_value = "nearest")]
        direction_fetch: String,
        /// Ignore the viewing direction (view-independent fetch).
        #[arg(long)]
        baseline: bool,
    },
    /// Compare baked renders with the continuous field and the analytic scene
    /// on the evaluation cameras; writes metrics JSON.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        package: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep texels per side (re-bake) or embedding dimension (retrain) and
    /// write a CSV of value,psnr,ssim,package_bytes,psnr_vs_float.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// texels | dim
        #[arg(long)]
        axis: String,
        /// Comma-separated values, e.g. 3,4,5,6,8,12.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        /// Trained field reused by a texel sweep.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve a directory over HTTP with CORS enabled, for the browser viewer.
    Serve {
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// 0 picks a free port; the chosen address is printed on stdout.
        #[arg(long, default_value_t = 8000)]
        port: u16,
    },
    /// Print every config key with its default.
    Keys,
}

fn config_help() -> String {
    let mut s = String::from("Config keys (key = default: description):\n");
    for (k, v, d) in CONFIG_KEYS {
        s.push_str(&format!("  {k} = {v}: {d}\n"));
    }
    s.push_str("\nExit codes: 0 ok, 2 config error, 3 numeric failure, 4 I/O or format error.");
    s
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

fn load_config(a: &ConfigArgs) -> lfbake::Result<PipelineConfig> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    for o in &a.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {o:?} is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> lfbake::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.into(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> lfbake::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn configure_threads(flag: Option<usize>) -> lfbake::Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{THREADS_ENV}={s:?} is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(Error::Config("thread count must be at least 1".into()));
    }
    if let Some(n) = n {
        lfbake::par::init_global_threads(n);
    }
    Ok(())
}

fn run(cli: Cli) -> lfbake::Result<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::DistillMesh { cfg } => {
            let cfg = load_config(&cfg)?;
            create_dir(&cfg.out_dir)?;
            let scene = pipeline::build_scene(&cfg);
            let (mesh, report) = pipeline::distill_mesh(&cfg, &scene)?;
            write_obj(&mesh, &cfg.out_dir.join("mesh.obj"))?;
            let json = to_json(&serde_json::json!({
                "faces": report.faces,
                "vertices": report.vertices,
                "boundary_edges": report.boundary_edges,
                "non_manifold_edges": report.non_manifold_edges,
                "components": report.components,
                "closed": report.is_closed_manifold(),
            }));
            write_text(&cfg.out_dir.join("mesh_report.json"), &json)?;
            println!("{json}");
        }
        Command::Train { cfg, mesh } => {
            let cfg = load_config(&cfg)?;
            create_dir(&cfg.out_dir)?;
            let mesh = read_obj(&mesh.unwrap_or_else(|| cfg.out_dir.join("mesh.obj")))?;
            let scene = pipeline::build_scene(&cfg);
            let outcome = pipeline::train_field(&cfg, &scene, &mesh)?;
            write_checkpoint(&outcome.field, &cfg.out_dir.join("checkpoint.rrff"))?;
            write_text(&cfg.out_dir.join("loss_history.json"), &to_json(&outcome.history))?;
            println!(
                "{}",
                serde_json::json!({
                    "initial_loss": outcome.initial_loss,
                    "final_loss": outcome.final_loss,
                    "history_len": outcome.history.len(),
                })
            );
        }
        Command::Bake {
            cfg,
            baseline,
            checkpoint,
            mesh,
            out,
        } => {
            let cfg = load_config(&cfg)?;
            let field = read_checkpoint(&checkpoint.unwrap_or_else(|| cfg.out_dir.join("checkpoint.rrff")))?;
            if field.dim != cfg.field.dim {
                return Err(Error::Config(format!(
                    "checkpoint has D={} but the config says dim={}",
                    field.dim, cfg.field.dim
                )));
            }
            let mesh = read_obj(&mesh.unwrap_or_else(|| cfg.out_dir.join("mesh.obj")))?;
            let pkg = if baseline {
                pipeline::bake_baseline_package(&cfg, &field, &mesh)?
            } else {
                pipeline::bake_package(&cfg, &field, &mesh)?
            };
            let dir = out.unwrap_or_else(|| cfg.out_dir.join("package"));
            let manifest = write_asset_package(&dir, &pkg)?;
            read_asset_package(&dir)?;
            println!(
                "{}",
                serde_json::json!({
                    "package": dir,
                    "D": manifest.d,
                    "p": manifest.p,
                    "n_faces": manifest.n_faces,
                    "atlas": [manifest.atlas_width, manifest.atlas_height],
                    "position_payload_bytes": pkg.position_payload_bytes(),
                })
            );
        }
        Command::Render {
            package,
            out,
            pfm,
            eye,
            target,
            up,
            width,
            height,
            fov,
            direction_fetch,
            baseline,
        } => {
            let fetch = match direction_fetch.as_str() {
                "nearest" => DirectionFetch::Nearest,
                "bilinear" => DirectionFetch::Bilinear,
                other => {
                    return Err(Error::Config(format!(
                        "direction fetch {other:?}: expected nearest or bilinear"
                    )))
                }
            };
            if width == 0 || height == 0 || !(fov > 0.0 && fov < 180.0) {
                return Err(Error::Config(
                    "image size must be positive and fov inside (0, 180)".into(),
                ));
            }
            let pkg = PreparedPackage::new(read_asset_package(&package)?)?;
            let camera = Camera::look_at(eye, target, up, Intrinsics::from_fov(width, height, fov))?;
            let rc = RenderConfig {
                background: None,
                direction_fetch: fetch,
                baseline: if baseline {
                    BaselineMode::RgbNormal
                } else {
                    BaselineMode::Off
                },
            };
            let img = pkg.render(&camera, &rc)?;
            img.write_png(&out)?;
            if let Some(p) = pfm {
                img.write_pfm(&p)?;
            }
        }
        Command::Eval {
            cfg,
            package,
            checkpoint,
            out,
        } => {
            let cfg = load_config(&cfg)?;
            let pkg = read_asset_package(&package.unwrap_or_else(|| cfg.out_dir.join("package")))?;
            let field = read_checkpoint(&checkpoint.unwrap_or_else(|| cfg.out_dir.join("checkpoint.rrff")))?;
            let scene = pipeline::build_scene(&cfg);
            let report = pipeline::evaluate(&cfg, &PreparedPackage::new(pkg)?, &field, &scene)?;
            let json = to_json(&report);
            create_dir(&cfg.out_dir)?;
            write_text(&out.unwrap_or_else(|| cfg.out_dir.join("metrics.json")), &json)?;
            println!("{json}");
        }
        Command::Sweep {
            cfg,
            axis,
            values,
            checkpoint,
            mesh,
            out,
        } => {
            let cfg = load_config(&cfg)?;
            let axis: SweepAxis = axis.parse()?;
            create_dir(&cfg.out_dir)?;
            let scene = pipeline::build_scene(&cfg);
            let mesh = match mesh {
                Some(p) => read_obj(&p)?,
                None => pipeline::distill_mesh(&cfg, &scene)?.0,
            };
            let trained = checkpoint.map(|p| read_checkpoint(&p)).transpose()?;
            let rows = pipeline::sweep(&cfg, axis, &values, &scene, &mesh, trained.as_ref())?;
            let csv = pipeline::sweep_csv(&rows);
            let name = match axis {
                SweepAxis::Texels => "sweep_texels.csv",
                SweepAxis::Dim => "sweep_dim.csv",
            };
            write_text(&out.unwrap_or_else(|| cfg.out_dir.join(name)), &csv)?;
            print!("{csv}");
        }
        Command::Serve { dir, bind, port } => {
            if !dir.is_dir() {
                return Err(Error::MissingFile(dir));
            }
            serve::serve(&dir, &bind, port)?;
        }
        Command::Keys => {
            use std::io::Write;
            let _ = writeln!(std::io::stdout().lock(), "{}", config_help());
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Numeric => 3,
        ErrorKind::Io => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.code());
            ExitCode::from(exit_code(&e))
        }
    }
}
