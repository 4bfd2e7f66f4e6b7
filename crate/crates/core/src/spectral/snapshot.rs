//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `MHDSNAP1` |
//! | 8     | `n` as u64 |
//! | 8     | `box_length` as f64 |
//! | 8     | component count as u64 (1 scalar, 3 vector, 9 tensor) |
//! | 8     | representation tag as u64 (0 = physical samples) |
//! | ...   | `components * n^3` f64 values, component-major, each component row-major with z fastest |

use std::io::{Read, Write};
use std::path::Path;

use super::field::{ScalarField, VectorField};
use super::grid::Grid;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MHDSNAP1";
pub const REPR_PHYSICAL: u64 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub n: usize,
    pub box_length: f64,
    pub components: usize,
    pub representation: u64,
}

/// Encodes physical samples with a header.
pub fn encode(grid: &Grid, comps: &[Vec<f64>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(40 + comps.len() * grid.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.n() as u64).to_le_bytes());
    out.extend_from_slice(&grid.box_length().to_le_bytes());
    out.extend_from_slice(&(comps.len() as u64).to_le_bytes());
    out.extend_from_slice(&REPR_PHYSICAL.to_le_bytes());
    for c in comps {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn word(bytes: &[u8], at: usize) -> [u8; 8] {
    bytes[at..at + 8].try_into().expect("slice of eight bytes")
}

/// Decodes a snapshot into its header and per-component samples.
pub fn decode(bytes: &[u8], origin: &str) -> Result<(SnapshotHeader, Vec<Vec<f64>>)> {
    let bad = |reason: &str| Error::Format { path: origin.to_string(), reason: reason.to_string() };
    if bytes.len() < 40 || &bytes[..8] != MAGIC {
        return Err(bad("missing snapshot header"));
    }
    let header = SnapshotHeader {
        n: u64::from_le_bytes(word(bytes, 8)) as usize,
        box_length: f64::from_le_bytes(word(bytes, 16)),
        components: u64::from_le_bytes(word(bytes, 24)) as usize,
        representation: u64::from_le_bytes(word(bytes, 32)),
    };
    if header.representation != REPR_PHYSICAL {
        return Err(bad("unknown representation tag"));
    }
    let len = header.n.pow(3);
    if bytes.len() != 40 + header.components * len * 8 {
        return Err(bad("payload length does not match header"));
    }
    let comps = (0..header.components)
        .map(|c| (0..len).map(|q| f64::from_le_bytes(word(bytes, 40 + (c * len + q) * 8))).collect())
        .collect();
    Ok((header, comps))
}

pub fn write_vector(path: &Path, f: &VectorField) -> Result<()> {
    let phys = f.to_physical();
    write_atomic(path, &encode(f.grid(), &phys))
}

pub fn write_scalar(path: &Path, f: &ScalarField) -> Result<()> {
    write_atomic(path, &encode(f.grid(), &[f.to_physical()]))
}

/// Reads a vector snapshot; the grid must match the header.
pub fn read_vector(path: &Path, grid: &Grid) -> Result<VectorField> {
    let origin = path.display().to_string();
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let (header, comps) = decode(&bytes, &origin)?;
    if header.components != 3 {
        return Err(Error::Format { path: origin, reason: format!("expected 3 components, found {}", header.components) });
    }
    if header.n != grid.n() || header.box_length != grid.box_length() {
        return Err(Error::GridMismatch);
    }
    Ok(VectorField::from_physical(grid, [&comps[0], &comps[1], &comps[2]]))
}

/// Lowercase hex sha256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::random_divfree_field;
    use std::f64::consts::PI;

    #[test]
    fn header_layout_is_fixed() {
        let g = Grid::new(4, 2.0).unwrap();
        let bytes = encode(&g, &[vec![1.5; 64]]);
        assert_eq!(&bytes[..8], b"MHDSNAP1");
        assert_eq!(u64::from_le_bytes(word(&bytes, 8)), 4);
        assert_eq!(f64::from_le_bytes(word(&bytes, 16)), 2.0);
        assert_eq!(u64::from_le_bytes(word(&bytes, 24)), 1);
        assert_eq!(u64::from_le_bytes(word(&bytes, 32)), 0);
        assert_eq!(f64::from_le_bytes(word(&bytes, 40)), 1.5);
        assert_eq!(bytes.len(), 40 + 64 * 8);
    }

    #[test]
    fn vector_round_trip_through_file() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let f = random_divfree_field(&g, 9, 1.0, 1.0).unwrap();
        let dir = std::env::temp_dir().join(format!("mhdsnap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.snap");
        write_vector(&path, &f).unwrap();
        let back = read_vector(&path, &g).unwrap();
        assert!((&back - &f).max_abs_coeff() < 1e-15);
        let other = Grid::new(16, 2.0 * PI).unwrap();
        assert!(matches!(read_vector(&path, &other), Err(Error::GridMismatch)));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn truncated_payload_rejected() {
        let g = Grid::new(4, 1.0).unwrap();
        let mut bytes = encode(&g, &[vec![0.0; 64]]);
        bytes.pop();
        assert!(matches!(decode(&bytes, "x"), Err(Error::Format { .. })));
    }
}
