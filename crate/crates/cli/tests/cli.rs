use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use lfbake::field::read_checkpoint;
use lfbake::pipeline::{self, PipelineConfig, CONFIG_KEYS};

const SMALL: &[&str] = &[
    "grid_k=24",
    "decimate_faces=400",
    "cameras=4",
    "image_size=16",
    "eval_cameras=2",
    "eval_size=16",
    "dim=8",
    "pos_width=16",
    "dir_width=16",
    "batch=64",
    "steps=30",
    "warmup=5",
    "log_every=10",
    "p=3",
    "dir_elev=8",
    "dir_azim=8",
];

fn lfbake(args: &[&str], out_dir: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lfbake"));
    cmd.arg(args[0])
        .arg("--set")
        .arg(format!("out_dir={}", out_dir.display()));
    for kv in SMALL {
        cmd.arg("--set").arg(kv);
    }
    cmd.args(&args[1..]).output().unwrap()
}

fn raw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfbake")).args(args).output().unwrap()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "status {:?}\nstderr: {}",
        o.status,
        String::from_utf8_lossy(&o.stderr)
    );
}

fn small_config(out_dir: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    for kv in SMALL {
        let (k, v) = kv.split_once('=').unwrap();
        cfg.set(k, v).unwrap();
    }
    cfg.out_dir = out_dir.to_path_buf();
    cfg
}

#[test]
fn help_lists_every_config_key() {
    let o = raw(&["--help"]);
    ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    for (key, default, _) in CONFIG_KEYS {
        assert!(text.contains(key), "--help is missing {key}");
        assert!(text.contains(default), "--help is missing the default of {key}");
    }
    let keys = String::from_utf8(raw(&["keys"]).stdout).unwrap();
    assert_eq!(keys.lines().filter(|l| l.starts_with("  ")).count(), CONFIG_KEYS.len());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = lfbake(&["distill-mesh", "--set", "no_such_key=1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.starts_with("error[config]:"), "{err}");
    assert!(err.contains("no_such_key"));
    assert_eq!(err.lines().count(), 1);

    let o = lfbake(&["distill-mesh", "--set", "p=0"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "seed = 1\nseed = 2\n").unwrap();
    let o = raw(&["distill-mesh", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(
        raw(&["sweep", "--axis", "colour", "--values", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = raw(&[
        "render",
        "--package",
        dir.path().join("nope").to_str().unwrap(),
        "--out",
        dir.path().join("x.png").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error[missing_file]:"));
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    ok(&lfbake(&["distill-mesh"], dir.path()));
    let o = lfbake(&["train", "--set", "lr=1e300", "--set", "warmup=0"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn distill_mesh_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(&lfbake(&["distill-mesh"], a.path()));
    ok(&lfbake(&["distill-mesh"], b.path()));
    let obj = std::fs::read(a.path().join("mesh.obj")).unwrap();
    assert!(!obj.is_empty());
    assert_eq!(obj, std::fs::read(b.path().join("mesh.obj")).unwrap());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("mesh_report.json")).unwrap()).unwrap();
    assert_eq!(report["closed"], true);
}

#[test]
fn zero_step_training_keeps_the_initial_field() {
    let dir = tempfile::tempdir().unwrap();
    ok(&lfbake(&["distill-mesh"], dir.path()));
    ok(&lfbake(&["train", "--set", "steps=0", "--set", "warmup=0"], dir.path()));
    let trained = read_checkpoint(&dir.path().join("checkpoint.rrff")).unwrap();
    let init = pipeline::initial_field(&small_config(dir.path())).unwrap();
    assert_eq!(trained, init);
}

#[test]
fn full_pipeline_and_deterministic_bake() {
    let dir = tempfile::tempdir().unwrap();
    ok(&lfbake(&["distill-mesh"], dir.path()));
    ok(&lfbake(&["train"], dir.path()));
    let history: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("loss_history.json")).unwrap()).unwrap();
    assert!(history.is_array() || history.is_object());

    let second = dir.path().join("again");
    ok(&lfbake(&["bake"], dir.path()));
    ok(&lfbake(&["bake", "--out", second.to_str().unwrap()], dir.path()));
    let pkg = dir.path().join("package");
    for f in [
        "m_u.png",
        "m_v.png",
        "m_w.png",
        "m_beta.png",
        "manifest.json",
        "mesh.obj",
    ] {
        let a = std::fs::read(pkg.join(f)).unwrap();
        assert_eq!(a, std::fs::read(second.join(f)).unwrap(), "{f} differs between bakes");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(pkg.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["D"], 8);
    assert_eq!(manifest["p"], 3);
    assert_eq!(manifest["texels_per_face"], 5);
    assert_eq!(manifest["variant"], "factorized");
    let obj = std::fs::read_to_string(pkg.join("mesh.obj")).unwrap();
    assert!(obj.lines().any(|l| l.starts_with("vt ")));

    let o = lfbake(&["eval"], dir.path());
    ok(&o);
    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["vs_oracle"].as_array().unwrap().len(), 2);
    assert!(metrics["mean_vs_float"]["psnr"].is_number() || metrics["mean_vs_float"]["psnr"] == "inf");

    let png = dir.path().join("view.png");
    let pfm = dir.path().join("view.pfm");
    ok(&raw(&[
        "render",
        "--package",
        pkg.to_str().unwrap(),
        "--out",
        png.to_str().unwrap(),
        "--pfm",
        pfm.to_str().unwrap(),
        "--width",
        "20",
        "--height",
        "10",
    ]));
    let decoder = png::Decoder::new(std::io::Cursor::new(std::fs::read(&png).unwrap()));
    let info = decoder.read_info().unwrap();
    assert_eq!((info.info().width, info.info().height), (20, 10));
    assert!(std::fs::read(&pfm).unwrap().starts_with(b"PF\n"));

    let baseline = dir.path().join("baseline");
    ok(&lfbake(
        &["bake", "--baseline", "--out", baseline.to_str().unwrap()],
        dir.path(),
    ));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(baseline.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["variant"], "rgb_normal");
    assert_eq!(manifest["D"], 4);

    let o = lfbake(&["bake", "--set", "dim=16"], dir.path());
    assert_eq!(
        o.status.code(),
        Some(2),
        "a checkpoint/config dim mismatch is a config error"
    );
}

#[test]
fn single_value_sweep_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    ok(&lfbake(&["distill-mesh"], dir.path()));
    ok(&lfbake(&["train"], dir.path()));
    let ckpt = dir.path().join("checkpoint.rrff");
    ok(&lfbake(
        &[
            "sweep",
            "--axis",
            "texels",
            "--values",
            "4",
            "--checkpoint",
            ckpt.to_str().unwrap(),
        ],
        dir.path(),
    ));
    let csv = std::fs::read_to_string(dir.path().join("sweep_texels.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "value,psnr,ssim,package_bytes,psnr_vs_float");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("4,"));
    assert!(dir.path().join("sweep_p_4").join("manifest.json").exists());
}

fn request(addr: &str, req: &str) -> String {
    let mut s = TcpStream::connect(addr).unwrap();
    s.write_all(req.as_bytes()).unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).unwrap();
    out
}

#[test]
fn serve_sends_cors_headers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("manifest.json"), b"{\"version\":1}").unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_lfbake"))
        .args(["serve", "--dir", dir.path().to_str().unwrap(), "--port", "0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .rsplit("http://")
        .next()
        .unwrap()
        .trim_end_matches('/')
        .to_string();

    let get = request(&addr, "GET /manifest.json HTTP/1.1\r\nHost: x\r\n\r\n");
    let opts = request(&addr, "OPTIONS /manifest.json HTTP/1.1\r\nOrigin: http://a\r\n\r\n");
    let missing = request(&addr, "GET /nope.png HTTP/1.1\r\n\r\n");
    let escape = request(&addr, "GET /../secret HTTP/1.1\r\n\r\n");
    let post = request(&addr, "POST /manifest.json HTTP/1.1\r\n\r\n");
    child.kill().unwrap();
    let _ = child.wait();

    assert!(get.starts_with("HTTP/1.1 200"), "{get}");
    assert!(get.contains("Access-Control-Allow-Origin: *"));
    assert!(get.contains("Content-Type: application/json"));
    assert!(get.ends_with("{\"version\":1}"));
    assert!(opts.starts_with("HTTP/1.1 204"));
    assert!(opts.contains("Access-Control-Allow-Methods: GET, HEAD, OPTIONS"));
    assert!(missing.starts_with("HTTP/1.1 404"));
    assert!(missing.contains("Access-Control-Allow-Origin: *"));
    assert!(escape.starts_with("HTTP/1.1 403"));
    assert!(post.starts_with("HTTP/1.1 405"));
}
