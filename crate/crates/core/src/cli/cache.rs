//! Content-addressed grid cache. Each entry is one file `<key>.rdgrid`:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 8    | magic `RDGRID01`                       |
//! | 8      | 4    | format version (LE u32)                |
//! | 12     | 4    | dtype (LE u32, 1 = f64, 2 = f32, 3 = u8) |
//! | 16     | 4    | rows (LE u32)                          |
//! | 20     | 4    | cols (LE u32)                          |
//! | 24     | 8    | auxiliary word (LE u64)                |
//! | 32     | 32   | SHA-256 of the payload                 |
//!
//! The payload follows in little-endian row-major order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::CachePolicy;
use super::CliError;

pub const MAGIC: &[u8; 8] = b"RDGRID01";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum Dtype {
    F64 = 1,
    F32 = 2,
    U8 = 3,
}

impl Dtype {
    fn from_u32(x: u32) -> Option<Self> {
        match x {
            1 => Some(Dtype::F64),
            2 => Some(Dtype::F32),
            3 => Some(Dtype::U8),
            _ => None,
        }
    }

    fn width(self) -> usize {
        match self {
            Dtype::F64 => 8,
            Dtype::F32 => 4,
            Dtype::U8 => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridEntry {
    pub rows: u32,
    pub cols: u32,
    pub aux: u64,
    pub values: Vec<f64>,
}

/// Cache key: hex SHA-256 over the map description, stage name and stage
/// parameters, all in canonical JSON.
pub fn cache_key(map: &impl Serialize, stage: &str, params: &impl Serialize) -> String {
    let mut h = Sha256::new();
    h.update(super::report::to_json(map).as_bytes());
    h.update([0u8]);
    h.update(stage.as_bytes());
    h.update([0u8]);
    h.update(super::report::to_json(params).as_bytes());
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn encode_f64(entry: &GridEntry) -> Vec<u8> {
    assert_eq!(entry.values.len(), entry.rows as usize * entry.cols as usize);
    let payload: Vec<u8> = entry.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(Dtype::F64 as u32).to_le_bytes());
    out.extend_from_slice(&entry.rows.to_le_bytes());
    out.extend_from_slice(&entry.cols.to_le_bytes());
    out.extend_from_slice(&entry.aux.to_le_bytes());
    out.extend_from_slice(&Sha256::digest(&payload));
    out.extend_from_slice(&payload);
    out
}

pub fn decode_f64(bytes: &[u8]) -> Result<GridEntry, String> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err("bad magic".into());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    if u32_at(8) != VERSION {
        return Err(format!("unsupported version {}", u32_at(8)));
    }
    let dtype = Dtype::from_u32(u32_at(12)).ok_or("unknown dtype")?;
    if dtype != Dtype::F64 {
        return Err(format!("expected f64 payload, found {dtype:?}"));
    }
    let (rows, cols) = (u32_at(16), u32_at(20));
    let aux = u64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes"));
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != rows as usize * cols as usize * dtype.width() {
        return Err("payload length does not match dimensions".into());
    }
    if Sha256::digest(payload).as_slice() != &bytes[32..64] {
        return Err("checksum mismatch".into());
    }
    let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(GridEntry { rows, cols, aux, values })
}

pub struct GridCache {
    dir: PathBuf,
    policy: CachePolicy,
}

impl GridCache {
    pub fn new(dir: PathBuf, policy: CachePolicy) -> Self {
        GridCache { dir, policy }
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.rdgrid"))
    }

    /// Entry for `key`, if reading is enabled and the file verifies. Corrupt
    /// entries are reported and treated as misses.
    pub fn get(&self, key: &str) -> Option<GridEntry> {
        if self.policy == CachePolicy::Off {
            return None;
        }
        let bytes = fs::read(self.path(key)).ok()?;
        match decode_f64(&bytes) {
            Ok(e) => {
                log::debug!("cache hit {key}");
                Some(e)
            }
            Err(msg) => {
                log::warn!("ignoring cache entry {key}: {msg}");
                None
            }
        }
    }

    pub fn put(&self, key: &str, entry: &GridEntry) -> Result<(), CliError> {
        if self.policy != CachePolicy::ReadWrite {
            return Ok(());
        }
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        let tmp = self.dir.join(format!("{key}.tmp"));
        write_file(&tmp, &encode_f64(entry))?;
        fs::rename(&tmp, self.path(key)).map_err(|e| CliError::io(&self.path(key), e))
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}
