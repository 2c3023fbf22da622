mod common;

use std::path::Path;

use lfbake::baking::{package_bytes, position_payload_bytes, read_asset_package, write_asset_package, AssetPackage};
use lfbake::pipeline;
use lfbake::Error;

fn written() -> (tempfile::TempDir, AssetPackage) {
    let (cfg, mesh, field) = common::small();
    let pkg = pipeline::bake_package(&cfg, &field, &mesh).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_asset_package(dir.path(), &pkg).unwrap();
    (dir, pkg)
}

fn edit_manifest(dir: &Path, f: impl FnOnce(&mut serde_json::Value)) {
    let path = dir.join("manifest.json");
    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(&path, serde_json::to_vec_pretty(&v).unwrap()).unwrap();
}

#[test]
fn write_read_identity_and_manifest() {
    let (dir, pkg) = written();
    assert_eq!(read_asset_package(dir.path()).unwrap(), pkg);
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["version"], 1);
    assert_eq!(m["D"], 8);
    assert_eq!(m["p"], 4);
    assert_eq!(m["texels_per_face"], 8);
    assert_eq!(m["n_faces"], pkg.mesh.faces.len());
    assert_eq!(m["elevation_convention"], "from+y");
    assert_eq!(m["quant"]["m_u"].as_array().unwrap().len(), 8);
    assert_eq!(m["png_files"]["m_beta"], "m_beta.png");
    assert!(package_bytes(dir.path()).unwrap() > 0);
    assert_eq!(position_payload_bytes(&pkg.layout, 8), 3 * pkg.mesh.faces.len() * 8 * 8);
}

#[test]
fn missing_file() {
    let (dir, _) = written();
    std::fs::remove_file(dir.path().join("m_v.png")).unwrap();
    match read_asset_package(dir.path()) {
        Err(Error::MissingFile(p)) => assert!(p.ends_with("m_v.png")),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        read_asset_package(&dir.path().join("elsewhere")),
        Err(Error::MissingFile(_))
    ));
}

#[test]
fn truncated_png_names_the_file() {
    let (dir, _) = written();
    let path = dir.path().join("m_u.png");
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 3]).unwrap();
    match read_asset_package(dir.path()) {
        Err(e @ Error::Decode { .. }) => assert!(e.to_string().contains("m_u.png"), "{e}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn tampered_dimension() {
    let (dir, _) = written();
    edit_manifest(dir.path(), |m| m["D"] = 12.into());
    assert!(matches!(
        read_asset_package(dir.path()),
        Err(Error::DimensionMismatch(_))
    ));
    edit_manifest(dir.path(), |m| m["D"] = 6.into());
    assert!(matches!(
        read_asset_package(dir.path()),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn tampered_layout_and_quant() {
    let (dir, _) = written();
    edit_manifest(dir.path(), |m| m["texels_per_face"] = 9.into());
    assert!(matches!(
        read_asset_package(dir.path()),
        Err(Error::DimensionMismatch(_))
    ));

    let (dir, _) = written();
    edit_manifest(dir.path(), |m| {
        m["quant"]["m_w"].as_array_mut().unwrap().pop();
    });
    assert!(matches!(
        read_asset_package(dir.path()),
        Err(Error::DimensionMismatch(_))
    ));

    let (dir, _) = written();
    edit_manifest(dir.path(), |m| m["quant"]["m_u"][0] = serde_json::json!([1.0, -1.0]));
    assert!(matches!(read_asset_package(dir.path()), Err(Error::Format { .. })));
}

#[test]
fn version_and_unknown_fields() {
    let (dir, _) = written();
    edit_manifest(dir.path(), |m| m["version"] = 2.into());
    match read_asset_package(dir.path()) {
        Err(Error::Version { found, expected, .. }) => assert_eq!((found, expected), (2, 1)),
        other => panic!("{other:?}"),
    }
    let (dir, _) = written();
    edit_manifest(dir.path(), |m| m["surprise"] = true.into());
    assert!(matches!(read_asset_package(dir.path()), Err(Error::Decode { .. })));
    std::fs::write(dir.path().join("manifest.json"), b"{not json").unwrap();
    assert!(matches!(read_asset_package(dir.path()), Err(Error::Decode { .. })));
}

#[test]
fn mesh_must_match_layout() {
    let (dir, _) = written();
    let path = dir.path().join("mesh.obj");
    let text = std::fs::read_to_string(&path).unwrap();
    let last_face = text.rfind("\nf ").unwrap();
    std::fs::write(&path, &text[..last_face + 1]).unwrap();
    assert!(matches!(
        read_asset_package(dir.path()),
        Err(Error::DimensionMismatch(_))
    ));

    let without_uv: String = text
        .lines()
        .filter(|l| !l.starts_with("vt "))
        .map(|l| {
            if let Some(rest) = l.strip_prefix("f ") {
                let idx: Vec<&str> = rest.split_whitespace().map(|c| c.split('/').next().unwrap()).collect();
                format!("f {}\n", idx.join(" "))
            } else {
                format!("{l}\n")
            }
        })
        .collect();
    std::fs::write(&path, without_uv).unwrap();
    assert!(matches!(read_asset_package(dir.path()), Err(Error::Decode { .. })));
}

#[test]
fn baseline_package_is_valid() {
    let (cfg, mesh, field) = common::small();
    let pkg = pipeline::bake_baseline_package(&cfg, &field, &mesh).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = write_asset_package(dir.path(), &pkg).unwrap();
    assert_eq!(m.d, 4);
    assert_eq!((m.dir_elev, m.dir_azim), (2, 1));
    assert_eq!(read_asset_package(dir.path()).unwrap(), pkg);
}
