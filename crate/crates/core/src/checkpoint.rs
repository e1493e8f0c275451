//! Binary field snapshots.
//!
//! Layout, all little-endian: `b"OSNL"`, `u32` version, `u32` nx, `u32` ny,
//! `f64` lx, `f64` ly, `f64` time, then nx·ny interleaved `(re, im)` `f64` pairs
//! in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};
use crate::Complex64;

pub const MAGIC: &[u8; 4] = b"OSNL";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(mut w: W, field: &ComplexField, time: f64) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for n in [g.nx(), g.ny()] {
        let n = u32::try_from(n).map_err(|_| Error::Checkpoint(format!("dimension {n} exceeds u32")))?;
        w.write_all(&n.to_le_bytes())?;
    }
    for v in [g.lx(), g.ly(), time] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(16 * field.values().len());
    for z in field.values() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(ComplexField, f64)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let nx = read_u32(&mut r)? as usize;
    let ny = read_u32(&mut r)? as usize;
    let lx = read_f64(&mut r)?;
    let ly = read_f64(&mut r)?;
    let time = read_f64(&mut r)?;
    let grid = GridSpec::new(nx, ny, lx, ly)?;
    let mut raw = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after field data".into()));
    }
    Ok((ComplexField::new(grid, values)?, time))
}

pub fn save_checkpoint(path: &Path, field: &ComplexField, time: f64) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), field, time)
}

pub fn load_checkpoint(path: &Path) -> Result<(ComplexField, f64)> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
