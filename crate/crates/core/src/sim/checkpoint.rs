//! Binary restart files.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `CPCOUETT` |
//! | 4     | format version (`u32`) |
//! | 24    | `n1`, `n2`, `n3` (`u64`) |
//! | 16    | `l1`, `l3` (`f64`) |
//! | 8     | time `t` (`f64`) |
//! | rest  | three components, each `n2·n1·n3` complex values stored as `(re, im)` `f64` pairs in `[j][i1][i3]` order |
//!
//! Coefficients are the spectral representation.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{Repr, VelocityField};
use crate::spectral::Grid;
use crate::C64;

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"CPCOUETT";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 24 + 16 + 8;

pub fn encode_checkpoint(v: &VelocityField, t: f64) -> Vec<u8> {
    let v = v.to_spectral();
    let g = v.grid;
    let mut out = Vec::with_capacity(HEADER_LEN + 48 * g.len());
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for n in [g.n1, g.n2, g.n3] {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for x in [g.l1, g.l3, t] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for c in &v.comps {
        for z in c {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::InvalidInput(format!("checkpoint truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(s.try_into().expect("slice length is N"))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(VelocityField, f64)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take::<8>()? != CHECKPOINT_MAGIC {
        return Err(Error::InvalidInput("not a checkpoint file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(r.take()?);
    if version != CHECKPOINT_VERSION {
        return Err(Error::InvalidInput(format!(
            "checkpoint version {version} is not supported (expected {CHECKPOINT_VERSION})"
        )));
    }
    let dims = [r.u64()?, r.u64()?, r.u64()?];
    let dims = dims.map(|d| usize::try_from(d).unwrap_or(usize::MAX));
    let (l1, l3, t) = (r.f64()?, r.f64()?, r.f64()?);
    let grid = Grid::new(dims[0], dims[1], dims[2], l1, l3)?;
    let expected = HEADER_LEN + 48 * grid.len();
    if bytes.len() != expected {
        return Err(Error::InvalidInput(format!(
            "checkpoint holds {} bytes, grid needs {expected}",
            bytes.len()
        )));
    }
    let mut v = VelocityField::zeros(&grid);
    v.repr = Repr::Spectral;
    for c in v.comps.iter_mut() {
        for z in c.iter_mut() {
            *z = C64::new(r.f64()?, r.f64()?);
        }
    }
    Ok((v, t))
}

pub fn write_checkpoint(path: impl AsRef<Path>, v: &VelocityField, t: f64) -> Result<()> {
    fs::write(path, encode_checkpoint(v, t))?;
    Ok(())
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<(VelocityField, f64)> {
    decode_checkpoint(&fs::read(path)?)
}
