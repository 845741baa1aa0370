//! Binary checkpoints: "XMHD" magic, u32 version, u32 nx, ny, nvar, f64 time, dx, dy,
//! then the conserved planes. Everything little-endian.

use std::io::{Read, Write};
use std::path::Path;

use super::{StateGrid, NVAR};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"XMHD";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub time: f64,
    pub state: StateGrid,
}

pub fn write_checkpoint(path: &Path, time: f64, u: &StateGrid) -> Result<()> {
    let mut buf = Vec::with_capacity(40 + 8 * u.data.len());
    buf.extend_from_slice(MAGIC);
    for v in [VERSION, u.nx as u32, u.ny as u32, NVAR as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in [time, u.dx, u.dy] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in &u.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

/// Reads a checkpoint. The grid origin is not stored; `x_min` and `y_min` come back
/// as zero and callers that need them must restore them.
pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|_| Error::MissingReference(path.to_path_buf()))?
        .read_to_end(&mut bytes)?;
    if bytes.len() < 44 || &bytes[..4] != MAGIC {
        return Err(Error::Checkpoint(format!("{}: bad header", path.display())));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let (nx, ny, nvar) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
    if nvar != NVAR {
        return Err(Error::Checkpoint(format!("expected {NVAR} variables, found {nvar}")));
    }
    let count = nvar * nx * ny;
    if bytes.len() != 44 + 8 * count {
        return Err(Error::Checkpoint(format!("{}: truncated", path.display())));
    }
    let (time, dx, dy) = (f64_at(20), f64_at(28), f64_at(36));
    let data = (0..count).map(|k| f64_at(44 + 8 * k)).collect();
    Ok(Checkpoint {
        time,
        state: StateGrid {
            nx,
            ny,
            dx,
            dy,
            x_min: 0.0,
            y_min: 0.0,
            data,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.bin");
        let mut u = StateGrid::zeros(3, 2, (0.0, 1.5), (0.0, 1.0));
        for (k, v) in u.data.iter_mut().enumerate() {
            *v = (k as f64 * 0.37).sin() / 3.0;
        }
        write_checkpoint(&path, 0.125, &u).unwrap();
        let c = read_checkpoint(&path).unwrap();
        assert_eq!(c.time, 0.125);
        assert_eq!(c.state.data, u.data);
        assert_eq!((c.state.nx, c.state.ny, c.state.dx, c.state.dy), (3, 2, u.dx, u.dy));
    }

    #[test]
    fn rejects_garbage_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"nope").unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Checkpoint(_))));
        assert!(matches!(read_checkpoint(&dir.path().join("none")), Err(Error::MissingReference(_))));
    }
}
