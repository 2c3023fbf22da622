use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Rgb;

/// Row-major RGB image with `f32` channels in `[0, 1]`, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl ImageBuffer {
    pub fn filled(width: u32, height: u32, color: Rgb) -> ImageBuffer {
        let px = [color.x as f32, color.y as f32, color.z as f32];
        ImageBuffer {
            width,
            height,
            data: px.repeat((width * height) as usize),
        }
    }

    /// Builds an image from row-major pixels. Values must be finite; they are
    /// clamped into `[0, 1]`.
    pub fn from_pixels(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<ImageBuffer> {
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        let mut data = Vec::with_capacity(pixels.len() * 3);
        for (i, p) in pixels.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinite {
                    what: "pixel",
                    location: format!("x={} y={}", i as u32 % width, i as u32 / width),
                });
            }
            data.extend(p.iter().map(|&c| c.clamp(0.0, 1.0) as f32));
        }
        Ok(ImageBuffer { width, height, data })
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f32; 3] {
        let i = 3 * (y * self.width + x) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixel_count(&self) -> usize {
        (self.width * self.height) as usize
    }

    fn to_rgb8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&c| (c.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| Error::Format {
                what: "png".into(),
                reason: e.to_string(),
            })?;
            w.write_image_data(&self.to_rgb8()).map_err(|e| Error::Format {
                what: "png".into(),
                reason: e.to_string(),
            })?;
        }
        Ok(out)
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_png_bytes()?).map_err(|e| Error::io(path, e))
    }

    /// Reads an 8-bit RGB or RGBA PNG (alpha is discarded).
    pub fn read_png(path: &Path) -> Result<ImageBuffer> {
        let decode_err = |reason: String| Error::Decode {
            path: path.to_path_buf(),
            reason,
        };
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut reader = png::Decoder::new(std::io::Cursor::new(bytes))
            .read_info()
            .map_err(|e| decode_err(e.to_string()))?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader.next_frame(&mut buf).map_err(|e| decode_err(e.to_string()))?;
        let stride = match (info.color_type, info.bit_depth) {
            (png::ColorType::Rgb, png::BitDepth::Eight) => 3,
            (png::ColorType::Rgba, png::BitDepth::Eight) => 4,
            other => return Err(decode_err(format!("unsupported pixel format {other:?}"))),
        };
        let data = buf[..info.buffer_size()]
            .chunks_exact(stride)
            .flat_map(|px| px[..3].iter().map(|&c| c as f32 / 255.0))
            .collect();
        Ok(ImageBuffer {
            width: info.width,
            height: info.height,
            data,
        })
    }

    /// Portable float map: little-endian, bottom row first.
    pub fn to_pfm_bytes(&self) -> Vec<u8> {
        let mut out = format!("PF\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        let row = 3 * self.width as usize;
        for y in (0..self.height as usize).rev() {
            for c in &self.data[y * row..(y + 1) * row] {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out
    }

    pub fn write_pfm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_pfm_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn from_pfm_bytes(bytes: &[u8]) -> Result<ImageBuffer> {
        let bad = |reason: &str| Error::Format {
            what: "pfm".into(),
            reason: reason.to_string(),
        };
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
        }
        pos += 1;
        if fields[0] != "PF" {
            return Err(bad("only color PF maps are supported"));
        }
        let width: u32 = fields[1].parse().map_err(|_| bad("bad width"))?;
        let height: u32 = fields[2].parse().map_err(|_| bad("bad height"))?;
        let scale: f32 = fields[3].parse().map_err(|_| bad("bad scale"))?;
        let body = bytes.get(pos..).unwrap_or(&[]);
        let row = 3 * width as usize;
        if body.len() != 4 * row * height as usize {
            return Err(bad("payload size does not match dimensions"));
        }
        let vals: Vec<f32> = body
            .chunks_exact(4)
            .map(|b| {
                let a = [b[0], b[1], b[2], b[3]];
                if scale < 0.0 {
                    f32::from_le_bytes(a)
                } else {
                    f32::from_be_bytes(a)
                }
            })
            .collect();
        let mut data = Vec::with_capacity(vals.len());
        for y in (0..height as usize).rev() {
            data.extend_from_slice(&vals[y * row..(y + 1) * row]);
        }
        Ok(ImageBuffer { width, height, data })
    }
}
