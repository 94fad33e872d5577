//! Field files.
//!
//! Binary layout, all little-endian: the magic `MNVF`, `u32` points per side,
//! `f64` half width, then `N²` samples as interleaved `(re, im)` `f64` pairs
//! in row-major order.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"MNVF";
const HEADER_LEN: usize = 4 + 4 + 8;

pub fn encode_field(f: &ComplexField) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.points() as u32).to_le_bytes());
    out.extend_from_slice(&g.half_width().to_le_bytes());
    for v in f.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<ComplexField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("file too short for header ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let half_width = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let grid = Grid::new(half_width, n).map_err(|e| Error::Format(e.to_string()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != 16 * grid.len() {
        return Err(Error::Format(format!(
            "payload holds {} bytes, expected {}",
            payload.len(),
            16 * grid.len()
        )));
    }
    let values: Vec<Complex64> = payload
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    ComplexField::from_values(grid, values).map_err(|e| Error::Format(e.to_string()))
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a partial file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(bytes)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_field(f: &ComplexField, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_field(f))
}

pub fn read_field(path: impl AsRef<Path>) -> Result<ComplexField> {
    decode_field(&fs::read(path)?)
}

/// CSV with header `x,y,re,im`, one row per sample, 17 significant digits.
pub fn field_to_csv(f: &ComplexField) -> String {
    let g = f.grid();
    let n = g.points();
    let mut s = String::with_capacity(g.len() * 100);
    s.push_str("x,y,re,im\n");
    for (idx, v) in f.values().iter().enumerate() {
        let z = g.point(idx / n, idx % n);
        s.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", z.re, z.im, v.re, v.im));
    }
    s
}

pub fn write_csv(f: &ComplexField, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), field_to_csv(f).as_bytes())
}
