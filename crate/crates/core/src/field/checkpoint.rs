use std::path::Path;

use crate::error::{Error, Result};

use super::mlp::{Mlp, MlpSpec};
use super::FactorizedField;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"RRFF";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Little-endian layout: magic, version (u32), D (u32), then for the position
/// and the direction network: input_dim, freqs, width, depth, output_dim,
/// residual (u32 each), parameter count (u64) and the parameters (f64).
pub fn checkpoint_bytes(field: &FactorizedField) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * field.param_count() + 64);
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(field.dim as u32).to_le_bytes());
    for net in [&field.pos, &field.dir] {
        let s = net.spec;
        for v in [
            s.input_dim,
            s.freqs,
            s.width,
            s.depth,
            s.output_dim,
            s.residual as usize,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&(net.params.len() as u64).to_le_bytes());
        for p in &net.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], String> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<FactorizedField> {
    let fmt = |reason: String| Error::Format {
        what: "checkpoint".into(),
        reason,
    };
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4).map_err(fmt)? != CHECKPOINT_MAGIC {
        return Err(fmt("bad magic".into()));
    }
    let version = c.u32().map_err(fmt)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            what: "checkpoint".into(),
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let dim = c.u32().map_err(fmt)? as usize;
    let mut nets = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut v = [0usize; 6];
        for x in v.iter_mut() {
            *x = c.u32().map_err(fmt)? as usize;
        }
        let spec = MlpSpec {
            input_dim: v[0],
            freqs: v[1],
            width: v[2],
            depth: v[3],
            output_dim: v[4],
            residual: v[5] != 0,
        };
        spec.validate()?;
        let n = c.u64().map_err(fmt)? as usize;
        if n != spec.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "checkpoint stores {n} parameters for a network needing {}",
                spec.param_count()
            )));
        }
        let raw = c
            .take(n.checked_mul(8).ok_or_else(|| fmt("size overflow".into()))?)
            .map_err(fmt)?;
        let params = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        nets.push(Mlp { spec, params });
    }
    if c.pos != bytes.len() {
        return Err(fmt(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    let dir = nets.pop().expect("two networks");
    let pos = nets.pop().expect("two networks");
    let field = FactorizedField { dim, pos, dir };
    field.validate()?;
    Ok(field)
}

pub fn write_checkpoint(field: &FactorizedField, path: &Path) -> Result<()> {
    std::fs::write(path, checkpoint_bytes(field)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<FactorizedField> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes)
}
