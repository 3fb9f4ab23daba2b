//! Binary snapshot format.
//!
//! A snapshot is a 64-byte little-endian header followed by `M^d` `f64`
//! values in row-major order (axis 0 slowest):
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `b"SGRD"`               |
//! | 4      | 4    | format version (`u32`, = 1)   |
//! | 8      | 1    | dimension (`u8`)              |
//! | 9      | 4    | bins per dimension (`u32`)    |
//! | 13     | 8    | half width `L` (`f64`)        |
//! | 21     | 8    | time (`f64`)                  |
//! | 29     | 1    | producer (`u8`: 1 SGIP, 2 FDM)|
//! | 30     | 34   | zero padding                  |

use std::fs;
use std::path::Path;

use crate::error::{Result, SgipError, SnapshotError};
use crate::grid::{DensityField, GridSpec};

pub const MAGIC: [u8; 4] = *b"SGRD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Producer {
    Sgip,
    Fdm,
}

impl Producer {
    pub fn code(self) -> u8 {
        match self {
            Producer::Sgip => 1,
            Producer::Fdm => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Producer::Sgip),
            2 => Some(Producer::Fdm),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Producer::Sgip => "SGIP",
            Producer::Fdm => "FDM",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: DensityField,
    pub producer: Producer,
}

pub fn encode_snapshot(field: &DensityField, producer: Producer) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.values().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(grid.dim() as u8);
    out.extend_from_slice(&(grid.bins_per_dim() as u32).to_le_bytes());
    out.extend_from_slice(&grid.half_width().to_le_bytes());
    out.extend_from_slice(&field.time().to_le_bytes());
    out.push(producer.code());
    out.resize(HEADER_LEN, 0);
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(SnapshotError::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(SnapshotError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(SnapshotError::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let dim = bytes[8] as usize;
    let bins = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let half_width = f64::from_le_bytes(bytes[13..21].try_into().unwrap());
    let time = f64::from_le_bytes(bytes[21..29].try_into().unwrap());
    let producer = Producer::from_code(bytes[29])
        .ok_or_else(|| SnapshotError::Malformed(format!("unknown producer {}", bytes[29])))?;
    let grid = GridSpec::new(dim, half_width, bins)
        .map_err(|e| SnapshotError::Malformed(e.to_string()))?;
    let expected = HEADER_LEN + 8 * grid.num_bins();
    if bytes.len() < expected {
        return Err(SnapshotError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(SnapshotError::Malformed(format!(
            "{} trailing bytes",
            bytes.len() - expected
        )));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field =
        DensityField::new(grid, values, time).map_err(|e| SnapshotError::Malformed(e.to_string()))?;
    Ok(Snapshot { field, producer })
}

pub fn write_snapshot(field: &DensityField, producer: Producer, path: &Path) -> Result<()> {
    fs::write(path, encode_snapshot(field, producer)).map_err(|e| SgipError::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path).map_err(|e| SgipError::io(path, e))?;
    Ok(decode_snapshot(&bytes)?)
}
