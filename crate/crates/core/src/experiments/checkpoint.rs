//! Binary restart files.
//!
//! Layout: `GKSV`, version byte, then little-endian `u16 d`, `u64 N`, `f64 L`,
//! `f64 t` and `N^d` pairs of `f64` (re, im) in row-major order over the index
//! box `[-N/2, N/2)^d`, each axis ascending.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

pub const MAGIC: &[u8; 4] = b"GKSV";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 2 + 8 + 8 + 8;

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format { offset: offset as u64, message: message.into() }
}

/// Slots of the grid in ascending-index row-major order.
fn ascending_slots(grid: &Grid) -> Vec<usize> {
    let n = grid.modes();
    let half = grid.nyquist() as i64;
    let axis: Vec<i64> = (-half..half).collect();
    if grid.dim() == 1 {
        axis.iter().map(|&k| grid.slot(&[k]).expect("retained")).collect()
    } else {
        let mut out = Vec::with_capacity(n * n);
        for &a in &axis {
            for &b in &axis {
                out.push(grid.slot(&[a, b]).expect("retained"));
            }
        }
        out
    }
}

pub fn encode_checkpoint(u: &SpectralField, t: f64) -> Vec<u8> {
    let g = u.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(g.dim() as u16).to_le_bytes());
    out.extend_from_slice(&(g.modes() as u64).to_le_bytes());
    out.extend_from_slice(&g.half_length().to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    let c = u.coefficients();
    for slot in ascending_slots(g) {
        out.extend_from_slice(&c[slot].re.to_le_bytes());
        out.extend_from_slice(&c[slot].im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self, what: &str) -> Result<[u8; K]> {
        let end = self.pos + K;
        if end > self.bytes.len() {
            return Err(format_err(self.bytes.len(), format!("truncated while reading {what}")));
        }
        let mut buf = [0u8; K];
        buf.copy_from_slice(&self.bytes[self.pos..end]);
        self.pos = end;
        Ok(buf)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take::<8>(what)?))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(SpectralField, f64)> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take::<4>("magic")?;
    if &magic != MAGIC {
        return Err(format_err(0, format!("bad magic {magic:?}, expected \"GKSV\"")));
    }
    let [version] = r.take::<1>("version")?;
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}, expected {VERSION}")));
    }
    let d = u16::from_le_bytes(r.take::<2>("dimension")?) as usize;
    let n_offset = r.pos;
    let n = u64::from_le_bytes(r.take::<8>("mode count")?);
    let half_length = r.f64("half length")?;
    let t = r.f64("time")?;
    let grid = usize::try_from(n)
        .ok()
        .and_then(|n| Grid::new(d, half_length, n).ok())
        .ok_or_else(|| format_err(n_offset - 2, format!("invalid grid header d = {d}, N = {n}, L = {half_length}")))?;
    let expected = HEADER_LEN + 16 * grid.len();
    if bytes.len() < expected {
        return Err(format_err(bytes.len(), format!("truncated: {} coefficient bytes missing", expected - bytes.len())));
    }
    if bytes.len() > expected {
        return Err(format_err(expected, format!("{} trailing bytes", bytes.len() - expected)));
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for slot in ascending_slots(&grid) {
        let re = r.f64("coefficients")?;
        let im = r.f64("coefficients")?;
        coeffs[slot] = Complex64::new(re, im);
    }
    Ok((SpectralField::new(grid, coeffs)?, t))
}

pub fn save_checkpoint(u: &SpectralField, t: f64, path: &Path) -> Result<()> {
    std::fs::write(path, encode_checkpoint(u, t))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(SpectralField, f64)> {
    decode_checkpoint(&std::fs::read(path)?)
}
