use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Vec3;

use super::TriMesh;

/// Serializes `mesh` as Wavefront OBJ. With corner uvs, every face corner
/// gets its own `vt` line (three per face, in face order) and faces are
/// written as `f v/vt`. Numbers use the shortest round-trip representation.
pub fn obj_string(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.vertices.len() * 40 + mesh.faces.len() * 60);
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    match &mesh.corner_uvs {
        Some(uvs) => {
            for tri in uvs {
                for uv in tri {
                    let _ = writeln!(s, "vt {} {}", uv[0], uv[1]);
                }
            }
            for (fi, f) in mesh.faces.iter().enumerate() {
                let t = 3 * fi + 1;
                let _ = writeln!(s, "f {}/{} {}/{} {}/{}", f[0] + 1, t, f[1] + 1, t + 1, f[2] + 1, t + 2);
            }
        }
        None => {
            for f in &mesh.faces {
                let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
            }
        }
    }
    s
}

pub fn write_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    std::fs::write(path, obj_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn read_obj(path: &Path) -> Result<TriMesh> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text).map_err(|reason| Error::Decode {
        path: path.to_path_buf(),
        reason,
    })
}

/// Parses triangles with `v`, `vt` and `f` records (`a`, `a/b`, `a/b/c`,
/// `a//c` and negative indices). Other record types are ignored.
pub fn parse_obj(text: &str) -> std::result::Result<TriMesh, String> {
    let mut vertices = Vec::new();
    let mut texcoords: Vec<[f64; 2]> = Vec::new();
    let mut faces = Vec::new();
    let mut corner_uvs = Vec::new();
    let mut faces_without_uv = 0usize;
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        let num = |tok: Option<&str>| -> std::result::Result<f64, String> {
            tok.ok_or_else(|| format!("line {}: missing number", ln + 1))?
                .parse::<f64>()
                .map_err(|e| format!("line {}: {e}", ln + 1))
        };
        match it.next() {
            Some("v") => vertices.push(Vec3::new(num(it.next())?, num(it.next())?, num(it.next())?)),
            Some("vt") => texcoords.push([num(it.next())?, num(it.next())?]),
            Some("f") => {
                let corners: Vec<&str> = it.collect();
                if corners.len() != 3 {
                    return Err(format!(
                        "line {}: only triangles are supported, got {} corners",
                        ln + 1,
                        corners.len()
                    ));
                }
                let mut f = [0usize; 3];
                let mut uv = [[0.0; 2]; 3];
                let mut has_uv = 0;
                for (k, c) in corners.iter().enumerate() {
                    let mut parts = c.split('/');
                    f[k] = resolve(parts.next(), vertices.len(), ln)?;
                    if let Some(t) = parts.next().filter(|t| !t.is_empty()) {
                        uv[k] = texcoords[resolve(Some(t), texcoords.len(), ln)?];
                        has_uv += 1;
                    }
                }
                match has_uv {
                    3 => corner_uvs.push(uv),
                    0 => faces_without_uv += 1,
                    _ => return Err(format!("line {}: face mixes corners with and without vt", ln + 1)),
                }
                faces.push(f);
            }
            _ => {}
        }
    }
    if faces_without_uv > 0 && !corner_uvs.is_empty() {
        return Err("some faces carry texture coordinates and others do not".into());
    }
    let mut mesh = TriMesh::new(vertices, faces).map_err(|e| e.to_string())?;
    if !corner_uvs.is_empty() {
        mesh.corner_uvs = Some(corner_uvs);
    }
    Ok(mesh)
}

fn resolve(tok: Option<&str>, len: usize, ln: usize) -> std::result::Result<usize, String> {
    let tok = tok.ok_or_else(|| format!("line {}: empty face corner", ln + 1))?;
    let i: i64 = tok
        .parse()
        .map_err(|e| format!("line {}: bad index {tok:?}: {e}", ln + 1))?;
    let idx = if i > 0 { i - 1 } else { len as i64 + i };
    if idx < 0 || idx as usize >= len {
        return Err(format!("line {}: index {i} out of range (have {len})", ln + 1));
    }
    Ok(idx as usize)
}
