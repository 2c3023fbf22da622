use std::io::Cursor;

use super::atlas::{AtlasRole, ChannelAtlas};
use crate::error::{Error, Result};

/// `(rows, cols)` of the sub-image grid packing `d` channels four at a time:
/// the most square factorization of `d/4` with `rows ≤ cols`.
pub fn tile_grid(d: usize) -> Result<(usize, usize)> {
    if d == 0 || !d.is_multiple_of(4) {
        return Err(Error::invalid(format!(
            "channel-tiled PNG needs a positive multiple of 4 channels, got {d}"
        )));
    }
    let n = d / 4;
    let rows = (1..=n)
        .filter(|r| n.is_multiple_of(*r) && r * r <= n)
        .max()
        .unwrap_or(1);
    Ok((rows, n / rows))
}

fn format_err(reason: impl ToString) -> Error {
    Error::Format {
        what: "channel-tiled png".into(),
        reason: reason.to_string(),
    }
}

/// One RGBA8 PNG holding a `rows × cols` grid of `width × height` cells; cell
/// `(i, j)` carries channels `4(i·cols + j) .. +4`.
pub fn encode_channel_tiled_png(atlas: &ChannelAtlas<u8>) -> Result<Vec<u8>> {
    let (rows, cols) = tile_grid(atlas.channels)?;
    let (w, h, d) = (atlas.width, atlas.height, atlas.channels);
    if atlas.data.len() != w * h * d {
        return Err(Error::DimensionMismatch(format!(
            "atlas data length {} does not match {w}x{h}x{d}",
            atlas.data.len()
        )));
    }
    let (pw, ph) = (cols * w, rows * h);
    let mut rgba = vec![0u8; pw * ph * 4];
    for i in 0..rows {
        for j in 0..cols {
            let c0 = 4 * (i * cols + j);
            for y in 0..h {
                for x in 0..w {
                    let dst = ((i * h + y) * pw + j * w + x) * 4;
                    let src = (y * w + x) * d + c0;
                    rgba[dst..dst + 4].copy_from_slice(&atlas.data[src..src + 4]);
                }
            }
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, pw as u32, ph as u32);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::High);
        let mut wr = enc.write_header().map_err(format_err)?;
        wr.write_image_data(&rgba).map_err(format_err)?;
    }
    Ok(out)
}

/// Inverse of [`encode_channel_tiled_png`]. Fails on a non-RGBA8 image or one
/// whose size does not match the `d`-channel tiling of a `width × height` atlas.
pub fn decode_channel_tiled_png(
    bytes: &[u8],
    role: AtlasRole,
    d: usize,
    width: usize,
    height: usize,
) -> Result<ChannelAtlas<u8>> {
    let (rows, cols) = tile_grid(d)?;
    let mut reader = png::Decoder::new(Cursor::new(bytes)).read_info().map_err(format_err)?;
    let mut buf = vec![
        0;
        reader
            .output_buffer_size()
            .ok_or_else(|| format_err("image too large"))?
    ];
    let info = reader.next_frame(&mut buf).map_err(format_err)?;
    if (info.color_type, info.bit_depth) != (png::ColorType::Rgba, png::BitDepth::Eight) {
        return Err(format_err(format!(
            "expected RGBA8, found {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (pw, ph) = (cols * width, rows * height);
    if (info.width as usize, info.height as usize) != (pw, ph) {
        return Err(Error::DimensionMismatch(format!(
            "{} png is {}x{}, expected {pw}x{ph} for D={d} on a {width}x{height} atlas",
            role.key(),
            info.width,
            info.height
        )));
    }
    let mut atlas = ChannelAtlas::zeros(role, d, width, height);
    for i in 0..rows {
        for j in 0..cols {
            let c0 = 4 * (i * cols + j);
            for y in 0..height {
                for x in 0..width {
                    let src = ((i * height + y) * pw + j * width + x) * 4;
                    let dst = (y * width + x) * d + c0;
                    atlas.data[dst..dst + 4].copy_from_slice(&buf[src..src + 4]);
                }
            }
        }
    }
    Ok(atlas)
}
