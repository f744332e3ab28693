//! Binary field snapshots.
//!
//! Layout (little-endian): magic `WKBF`, `u32` version, `u32` d, `u32` n per
//! axis, `f64` L per axis, then `(re, im)` `f64` pairs for every mode in
//! row-major centered-lattice order (`m_i = -n_i/2 .. n_i/2 - 1`, last axis
//! fastest).

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::{advance, Grid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"WKBF";
pub const VERSION: u32 = 1;

/// Flat FFT-order indices in centered-lattice order.
fn centered_order(grid: &Grid) -> Vec<usize> {
    let n = grid.n();
    let mut idx = vec![0usize; n.len()];
    let mut order = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let mode: Vec<i64> = idx.iter().zip(n).map(|(&k, &ni)| k as i64 - (ni / 2) as i64).collect();
        order.push(grid.flat_of(&mode).expect("centered mode on lattice"));
        advance(&mut idx, n);
    }
    order
}

pub fn write_snapshot(out: &mut impl Write, field: &SpectralField) -> Result<()> {
    let io = |e: std::io::Error| Error::Snapshot(e.to_string());
    let grid = field.grid();
    let mut buf = Vec::with_capacity(16 + 12 * grid.dim() + 16 * grid.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for &n in grid.n() {
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &l in grid.lengths() {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    for flat in centered_order(grid) {
        let c = field.coeffs()[flat];
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    out.write_all(&buf).map_err(io)
}

pub fn read_snapshot(input: &mut impl Read) -> Result<SpectralField> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Snapshot(e.to_string()))?;
    let mut cursor = Cursor { bytes: &bytes, pos: 0 };
    if cursor.take(4)? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = cursor.u32()?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let d = cursor.u32()? as usize;
    if d == 0 || d > 8 {
        return Err(Error::Snapshot(format!("implausible dimension {d}")));
    }
    let n = (0..d).map(|_| cursor.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let lengths = (0..d).map(|_| cursor.f64()).collect::<Result<Vec<_>>>()?;
    let grid = Grid::new(&n, &lengths).map_err(|e| Error::Snapshot(e.to_string()))?;
    let mut coeff = vec![Complex64::new(0.0, 0.0); grid.len()];
    for flat in centered_order(&grid) {
        let re = cursor.f64()?;
        let im = cursor.f64()?;
        coeff[flat] = Complex64::new(re, im);
    }
    if cursor.pos != bytes.len() {
        return Err(Error::Snapshot(format!("{} trailing bytes", bytes.len() - cursor.pos)));
    }
    SpectralField::from_coeffs(&grid, coeff)
}

pub fn save_snapshot(path: impl AsRef<Path>, field: &SpectralField) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))?;
    write_snapshot(&mut file, field)
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<SpectralField> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))?;
    read_snapshot(&mut file)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.pos + k > self.bytes.len() {
            return Err(Error::Snapshot("truncated file".into()));
        }
        let out = &self.bytes[self.pos..self.pos + k];
        self.pos += k;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
