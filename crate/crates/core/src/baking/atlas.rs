use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the four baked tables an atlas holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtlasRole {
    MU,
    MV,
    MW,
    MBeta,
}

impl AtlasRole {
    pub const ALL: [AtlasRole; 4] = [AtlasRole::MU, AtlasRole::MV, AtlasRole::MW, AtlasRole::MBeta];

    /// Manifest key and file stem.
    pub fn key(self) -> &'static str {
        match self {
            AtlasRole::MU => "m_u",
            AtlasRole::MV => "m_v",
            AtlasRole::MW => "m_w",
            AtlasRole::MBeta => "m_beta",
        }
    }
}

/// `channels` scalars per pixel over a `width × height` grid, interleaved
/// (`data[(y·width + x)·channels + c]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAtlas<T> {
    pub role: AtlasRole,
    pub channels: usize,
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Copy + Default> ChannelAtlas<T> {
    pub fn zeros(role: AtlasRole, channels: usize, width: usize, height: usize) -> ChannelAtlas<T> {
        ChannelAtlas {
            role,
            channels,
            width,
            height,
            data: vec![T::default(); channels * width * height],
        }
    }

    pub fn texel(&self, x: usize, y: usize) -> &[T] {
        let o = (y * self.width + x) * self.channels;
        &self.data[o..o + self.channels]
    }

    pub fn texel_mut(&mut self, x: usize, y: usize) -> &mut [T] {
        let o = (y * self.width + x) * self.channels;
        &mut self.data[o..o + self.channels]
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    fn check(&self) -> Result<()> {
        if self.data.len() != self.channels * self.width * self.height {
            return Err(Error::DimensionMismatch(format!(
                "{} atlas holds {} values, expected {}x{}x{}",
                self.role.key(),
                self.data.len(),
                self.width,
                self.height,
                self.channels
            )));
        }
        Ok(())
    }
}

/// Per-channel `(min, max)` of an 8-bit atlas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuantParams {
    pub ranges: Vec<[f32; 2]>,
}

impl QuantParams {
    pub fn validate(&self, what: &str) -> Result<()> {
        for (c, [lo, hi]) in self.ranges.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::Format {
                    what: what.into(),
                    reason: format!("channel {c} has invalid range [{lo}, {hi}]"),
                });
            }
        }
        Ok(())
    }

    /// Half of one quantization step for channel `c`.
    pub fn half_step(&self, c: usize) -> f64 {
        let [lo, hi] = self.ranges[c];
        (hi as f64 - lo as f64) / 510.0
    }
}

/// `min + (q/255)(max − min)`.
pub fn dequantize(q: u8, range: [f32; 2]) -> f64 {
    let (lo, hi) = (range[0] as f64, range[1] as f64);
    lo + (q as f64 / 255.0) * (hi - lo)
}

/// Per-channel min-max quantization to 8 bits. Statistics come from the
/// pixels flagged in `used` (all pixels when `None`); unused pixels become 0.
/// A constant channel maps to 0 with `max = min + 1`.
pub fn quantize_atlas(atlas: &ChannelAtlas<f32>, used: Option<&[bool]>) -> Result<(ChannelAtlas<u8>, QuantParams)> {
    atlas.check()?;
    let n = atlas.pixel_count();
    if let Some(m) = used {
        if m.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "used mask has {} entries for {n} pixels",
                m.len()
            )));
        }
    }
    let is_used = |i: usize| used.is_none_or(|m| m[i]);
    let d = atlas.channels;
    let mut lo = vec![f32::INFINITY; d];
    let mut hi = vec![f32::NEG_INFINITY; d];
    for i in (0..n).filter(|&i| is_used(i)) {
        for c in 0..d {
            let x = atlas.data[i * d + c];
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    what: "atlas value",
                    location: format!("{} pixel {i} channel {c}", atlas.role.key()),
                });
            }
            lo[c] = lo[c].min(x);
            hi[c] = hi[c].max(x);
        }
    }
    let ranges: Vec<[f32; 2]> = (0..d)
        .map(|c| {
            if lo[c] > hi[c] {
                [0.0, 1.0]
            } else if lo[c] == hi[c] {
                [lo[c], lo[c] + 1.0]
            } else {
                [lo[c], hi[c]]
            }
        })
        .collect();
    let mut q = ChannelAtlas::<u8>::zeros(atlas.role, d, atlas.width, atlas.height);
    for i in (0..n).filter(|&i| is_used(i)) {
        for c in 0..d {
            let [a, b] = ranges[c];
            let t = (atlas.data[i * d + c] as f64 - a as f64) / (b as f64 - a as f64);
            q.data[i * d + c] = (255.0 * t).round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok((q, QuantParams { ranges }))
}

/// Fills every pixel not flagged in `used` with the pixel above it, top to
/// bottom. Rows that would otherwise be mostly zero then filter to zeros
/// under PNG's Up predictor.
pub fn pad_unused(atlas: &mut ChannelAtlas<u8>, used: &[bool]) {
    let (w, d) = (atlas.width, atlas.channels);
    for y in 1..atlas.height {
        for x in 0..w {
            if !used[y * w + x] {
                let dst = (y * w + x) * d;
                atlas.data.copy_within(dst - w * d..dst - w * d + d, dst);
            }
        }
    }
}

/// Float atlas recovered from an 8-bit one.
pub fn dequantize_atlas(atlas: &ChannelAtlas<u8>, params: &QuantParams) -> Result<ChannelAtlas<f64>> {
    atlas.check()?;
    if params.ranges.len() != atlas.channels {
        return Err(Error::DimensionMismatch(format!(
            "{} has {} quant ranges for {} channels",
            atlas.role.key(),
            params.ranges.len(),
            atlas.channels
        )));
    }
    let d = atlas.channels;
    let data = atlas
        .data
        .iter()
        .enumerate()
        .map(|(i, &q)| dequantize(q, params.ranges[i % d]))
        .collect();
    Ok(ChannelAtlas {
        role: atlas.role,
        channels: d,
        width: atlas.width,
        height: atlas.height,
        data,
    })
}
