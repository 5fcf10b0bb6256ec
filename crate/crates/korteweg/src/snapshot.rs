//! KWF1 field snapshot files.
//!
//! Layout: magic bytes `KWF1`, little-endian `u32` dim, `u32` components,
//! `u32` n, `f64` L, then row-major `f64` physical samples per component.
//! The encoding is bit-exact across platforms.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TorusGrid};

const MAGIC: &[u8; 4] = b"KWF1";

pub fn write_snapshot<W: Write>(mut w: W, field: &SpectralField) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(field.components() as u32).to_le_bytes())?;
    w.write_all(&(grid.points_per_dim() as u32).to_le_bytes())?;
    w.write_all(&grid.side_length().to_le_bytes())?;
    for sample in field.to_physical() {
        w.write_all(&sample.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot(format!("bad magic {magic:?}")));
    }
    let dim = read_u32(&mut r)? as usize;
    let components = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let length = f64::from_le_bytes(buf);
    let grid = TorusGrid::new(dim, n, length)
        .map_err(|e| Error::Snapshot(format!("invalid grid header: {e}")))?;
    if components == 0 {
        return Err(Error::Snapshot("zero components".into()));
    }
    let total = grid.total_points();
    let mut samples = vec![0.0; components * total];
    for s in samples.iter_mut() {
        r.read_exact(&mut buf)?;
        *s = f64::from_le_bytes(buf);
    }
    SpectralField::from_physical(grid, components, &samples)
}

pub fn write_snapshot_file(path: &std::path::Path, field: &SpectralField) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(file), field)
}

pub fn read_snapshot_file(path: &std::path::Path) -> Result<SpectralField> {
    let file = std::fs::File::open(path)?;
    read_snapshot(std::io::BufReader::new(file))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
