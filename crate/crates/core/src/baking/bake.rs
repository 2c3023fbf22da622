use super::atlas::{AtlasRole, ChannelAtlas};
use super::direction::DirectionGrid;
use super::layout::{texel_world_position, TexelLayout};
use crate::error::{Error, Result};
use crate::field::FactorizedField;
use crate::geometry::TriMesh;
use crate::math::Vec3;
use crate::par;

const BAKE_CHUNK: usize = 512;

/// Evaluates `f` over `items` in fixed chunks, preserving order.
fn chunked<S: Sync, T: Send>(items: &[S], f: impl Fn(&[S]) -> Result<Vec<T>> + Sync + Send) -> Result<Vec<T>> {
    let parts = par::try_map_range(items.len().div_ceil(BAKE_CHUNK), |c| {
        f(&items[c * BAKE_CHUNK..((c + 1) * BAKE_CHUNK).min(items.len())])
    })?;
    Ok(parts.into_iter().flatten().collect())
}

/// Position embeddings at every texel sample, as `(M_u, M_v, M_w)` float
/// atlases. Padding pixels stay zero.
pub fn bake_position_atlases(
    field: &FactorizedField,
    mesh: &TriMesh,
    layout: &TexelLayout,
) -> Result<[ChannelAtlas<f32>; 3]> {
    field.validate()?;
    if mesh.faces.len() != layout.n_faces {
        return Err(Error::DimensionMismatch(format!(
            "mesh has {} faces, layout {}",
            mesh.faces.len(),
            layout.n_faces
        )));
    }
    let t = layout.texels_per_face;
    let slots: Vec<(usize, usize)> = (0..layout.n_faces).flat_map(|f| (0..t).map(move |k| (f, k))).collect();
    let points = slots
        .iter()
        .map(|&(f, k)| texel_world_position(mesh, f, k, layout))
        .collect::<Result<Vec<Vec3>>>()?;
    let d = field.dim;
    let rows = chunked(&points, |ps| {
        let e = field.pos_embed_batch(ps)?;
        Ok(e.outer_iter()
            .map(|r| r.iter().map(|&x| x as f32).collect::<Vec<f32>>())
            .collect())
    })?;
    let mut out = [AtlasRole::MU, AtlasRole::MV, AtlasRole::MW]
        .map(|r| ChannelAtlas::<f32>::zeros(r, d, layout.width, layout.height));
    for (&(f, k), row) in slots.iter().zip(&rows) {
        let (x, y) = layout.texel_pixel(f, k);
        for (c, atlas) in out.iter_mut().enumerate() {
            atlas.texel_mut(x, y).copy_from_slice(&row[c * d..(c + 1) * d]);
        }
    }
    Ok(out)
}

/// Direction weights over the grid as an `n_azim × n_elev` float atlas.
pub fn bake_direction_map(field: &FactorizedField, grid: &DirectionGrid) -> Result<ChannelAtlas<f32>> {
    field.validate()?;
    let dirs = grid.directions();
    let rows = chunked(&dirs, |ds| {
        let b = field.dir_embed_batch(ds)?;
        Ok(b.outer_iter()
            .map(|r| r.iter().map(|&x| x as f32).collect::<Vec<f32>>())
            .collect())
    })?;
    Ok(ChannelAtlas {
        role: AtlasRole::MBeta,
        channels: field.dim,
        width: grid.n_azim,
        height: grid.n_elev,
        data: rows.into_iter().flatten().collect(),
    })
}

/// Direction grid of the view-independent baseline: two rows, one column,
/// every cell holding `β = (1, 0, 0, 0)`.
pub const BASELINE_GRID: DirectionGrid = DirectionGrid { n_elev: 2, n_azim: 1 };

/// Float atlases of the view-independent baseline. Each texel keeps only the
/// three color logits `uᵀβ(−n)` seen head-on along the face normal `n`, stored
/// in channel 0 of a `D = 4` package whose direction map selects channel 0.
pub fn bake_rgb_baseline_atlases(
    field: &FactorizedField,
    mesh: &TriMesh,
    layout: &TexelLayout,
) -> Result<[ChannelAtlas<f32>; 4]> {
    field.validate()?;
    if mesh.faces.len() != layout.n_faces {
        return Err(Error::DimensionMismatch(format!(
            "mesh has {} faces, layout {}",
            mesh.faces.len(),
            layout.n_faces
        )));
    }
    let t = layout.texels_per_face;
    let mut points = Vec::with_capacity(layout.total_texels());
    let mut dirs = Vec::with_capacity(layout.total_texels());
    for f in 0..layout.n_faces {
        let n = mesh
            .face_normal(f)
            .ok_or_else(|| Error::invalid(format!("face {f} is degenerate and has no normal")))?;
        for k in 0..t {
            points.push(texel_world_position(mesh, f, k, layout)?);
            dirs.push(-n);
        }
    }
    let d = field.dim;
    let idx: Vec<usize> = (0..points.len()).collect();
    let logits = chunked(&idx, |ids| {
        let ps: Vec<Vec3> = ids.iter().map(|&i| points[i]).collect();
        let ds: Vec<Vec3> = ids.iter().map(|&i| dirs[i]).collect();
        let e = field.pos_embed_batch(&ps)?;
        let b = field.dir_embed_batch(&ds)?;
        Ok(e.outer_iter()
            .zip(b.outer_iter())
            .map(|(e, b)| {
                let l = |c: usize| (0..d).map(|k| e[c * d + k] * b[k]).sum::<f64>() as f32;
                [l(0), l(1), l(2)]
            })
            .collect())
    })?;
    let mut out = [AtlasRole::MU, AtlasRole::MV, AtlasRole::MW]
        .map(|r| ChannelAtlas::<f32>::zeros(r, 4, layout.width, layout.height));
    for (i, l) in logits.iter().enumerate() {
        let (x, y) = layout.texel_pixel(i / t, i % t);
        for c in 0..3 {
            out[c].texel_mut(x, y)[0] = l[c];
        }
    }
    let [u, v, w] = out;
    let mut beta = ChannelAtlas::<f32>::zeros(AtlasRole::MBeta, 4, BASELINE_GRID.n_azim, BASELINE_GRID.n_elev);
    for px in beta.data.chunks_mut(4) {
        px[0] = 1.0;
    }
    Ok([u, v, w, beta])
}
