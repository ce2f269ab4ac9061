//! Binary field snapshots.
//!
//! Layout: magic `HWND1`, `u32` nx, ny, nz, `u8` boundary tag, `f64` h, `u8` component count,
//! then little-endian `f64` physical samples in `(component, z, y, x)` order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::Samples;
use crate::grid::{BcCase, GridSpec};

pub const MAGIC: &[u8; 5] = b"HWND1";
const HEADER: usize = 5 + 12 + 1 + 8 + 1;

/// Serialises samples on `grid`; the sample extents must match the grid (or `nz = 1` for surface data).
pub fn encode_snapshot(grid: &GridSpec, s: &Samples) -> Result<Vec<u8>> {
    if s.nx != grid.nx || s.ny != grid.ny || (s.nz != grid.nz && s.nz != 1) {
        return Err(Error::Shape(format!("samples {}x{}x{} do not fit the grid", s.nx, s.ny, s.nz)));
    }
    if s.ncomp == 0 || s.ncomp > u8::MAX as usize || s.data.len() != s.nx * s.ny * s.nz * s.ncomp {
        return Err(Error::Shape(format!("bad component count {} or buffer length {}", s.ncomp, s.data.len())));
    }
    let mut out = Vec::with_capacity(HEADER + 8 * s.data.len());
    out.extend_from_slice(MAGIC);
    for n in [s.nx, s.ny, s.nz] {
        let n = u32::try_from(n).map_err(|_| Error::Shape(format!("extent {n} exceeds u32")))?;
        out.extend_from_slice(&n.to_le_bytes());
    }
    out.push(grid.bc.tag());
    out.extend_from_slice(&grid.h.to_le_bytes());
    out.push(s.ncomp as u8);
    for x in &s.data {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

/// Inverse of [`encode_snapshot`]. For surface snapshots (`nz = 1`) the returned grid carries
/// `nz = 1` as stored; no grid validation is applied.
pub fn decode_snapshot(bytes: &[u8]) -> Result<(GridSpec, Samples)> {
    if bytes.len() < HEADER || &bytes[..5] != MAGIC {
        return Err(Error::Format("not an HWND1 snapshot".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (nx, ny, nz) = (u32_at(5), u32_at(9), u32_at(13));
    let bc = BcCase::from_tag(bytes[17])?;
    let h = f64::from_le_bytes(bytes[18..26].try_into().unwrap());
    let ncomp = bytes[26] as usize;
    let count = nx
        .checked_mul(ny)
        .and_then(|n| n.checked_mul(nz))
        .and_then(|n| n.checked_mul(ncomp))
        .ok_or_else(|| Error::Format("snapshot extents overflow".into()))?;
    let body = &bytes[HEADER..];
    if body.len() != count * 8 {
        return Err(Error::Format(format!("snapshot body has {} bytes, header implies {}", body.len(), count * 8)));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((GridSpec { nx, ny, nz, h, bc }, Samples { nx, ny, nz, ncomp, data }))
}

pub fn write_snapshot(path: &Path, grid: &GridSpec, s: &Samples) -> Result<()> {
    let bytes = encode_snapshot(grid, s)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(GridSpec, Samples)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_snapshot(&bytes)
}
