//! Binary matrix dumps: little-endian, header `"PKOP"`, `u32` version 1,
//! `u64` dimension, `u8` kind, then dim² `f64` values in row-major order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::assembly::BlockOperator;

pub const MAGIC: &[u8; 4] = b"PKOP";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 1;

/// Which operator a dump holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Lambda = 0,
    K = 1,
    L = 2,
}

impl MatrixKind {
    pub fn file_stem(self) -> &'static str {
        match self {
            Self::Lambda => "lambda",
            Self::K => "k",
            Self::L => "l",
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Lambda),
            1 => Some(Self::K),
            2 => Some(Self::L),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("bad magic: expected \"PKOP\", found {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported dump version {0}")]
    BadVersion(u32),
    #[error("unknown matrix kind byte {0}")]
    BadKind(u8),
    #[error("truncated dump: expected {expected} bytes of data, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("dimension {0} is too large")]
    TooLarge(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Serializes a matrix into `w`.
pub fn write_dump(w: &mut impl Write, kind: MatrixKind, m: &BlockOperator) -> std::io::Result<()> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * m.data().len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(m.dim() as u64).to_le_bytes());
    bytes.push(kind as u8);
    for v in m.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)
}

/// Parses a dump, checking the header and the payload length.
pub fn read_dump(r: &mut impl Read) -> Result<(MatrixKind, BlockOperator), DumpError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        let mut magic = [0u8; 4];
        let n = bytes.len().min(4);
        magic[..n].copy_from_slice(&bytes[..n]);
        if &magic != MAGIC {
            return Err(DumpError::BadMagic(magic));
        }
        return Err(DumpError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().expect("four bytes");
    if &magic != MAGIC {
        return Err(DumpError::BadMagic(magic));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("four bytes"));
    if version != VERSION {
        return Err(DumpError::BadVersion(version));
    }
    let dim64 = u64::from_le_bytes(bytes[8..16].try_into().expect("eight bytes"));
    let kind = MatrixKind::from_byte(bytes[16]).ok_or(DumpError::BadKind(bytes[16]))?;
    let dim = usize::try_from(dim64).map_err(|_| DumpError::TooLarge(dim64))?;
    let expected = dim
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(8))
        .ok_or(DumpError::TooLarge(dim64))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(DumpError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
        .collect();
    Ok((kind, BlockOperator::from_row_major(dim, data)))
}
