//! `.gfpc` binary snapshots.
//!
//! Layout, all little-endian: `b"GFPC"`, `u32` version, `u32` dim, `dim × u32`
//! points per axis, `dim × (f64 min, f64 max)`, then the nodal values as
//! `f64` with x fastest.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{Axis, Field, Grid};

pub const MAGIC: &[u8; 4] = b"GFPC";
pub const VERSION: u32 = 1;

/// Header length in bytes for a grid of dimension `dim`.
pub fn header_len(dim: usize) -> usize {
    4 + 4 + 4 + 4 * dim + 16 * dim
}

pub fn encode(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(header_len(grid.dim()) + 8 * field.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for a in grid.axes() {
        out.extend_from_slice(&(a.points as u32).to_le_bytes());
    }
    for a in grid.axes() {
        out.extend_from_slice(&a.min.to_le_bytes());
        out.extend_from_slice(&a.max.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Field> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let dim = r.u32()? as usize;
    if !(1..=3).contains(&dim) {
        return Err(Error::Snapshot(format!("bad dimension {dim}")));
    }
    let points: Vec<usize> = (0..dim).map(|_| r.u32().map(|m| m as usize)).collect::<Result<_>>()?;
    let mut axes = Vec::with_capacity(dim);
    for &m in &points {
        let (lo, hi) = (r.f64()?, r.f64()?);
        axes.push(Axis::new(m, lo, hi));
    }
    let grid = Arc::new(Grid::new(axes).map_err(|e| Error::Snapshot(e.to_string()))?);
    let n = grid.len();
    if r.remaining() != 8 * n {
        return Err(Error::Snapshot(format!(
            "expected {} value bytes, found {}",
            8 * n,
            r.remaining()
        )));
    }
    let values = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    Field::new(grid, values)
}

pub fn write_snapshot(field: &Field, path: &Path) -> Result<()> {
    fs::write(path, encode(field))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Field> {
    decode(&fs::read(path)?)
}

/// `phi_t<time>.gfpc` with six decimals.
pub fn snapshot_name(t: f64) -> String {
    format!("phi_t{t:.6}.gfpc")
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Snapshot("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}
