//! `params.bin`: a flat archive of named f64 arrays.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    b"CSGP"
//! version  u32 (= 1)
//! count    u32
//! count × {
//!     name_len u32, name (UTF-8)
//!     rank     u32, dims (u32 × rank)
//!     values   f64 × product(dims)
//! }
//! ```

use condgan_autograd::ParamStore;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CSGP";
pub const VERSION: u32 = 1;
const MAX_RANK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamArchive {
    pub entries: Vec<ArchiveEntry>,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| corrupt(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

impl ParamArchive {
    pub fn push(&mut self, name: impl Into<String>, shape: &[usize], data: Vec<f64>) {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        self.entries.push(ArchiveEntry { name: name.into(), shape: shape.to_vec(), data });
    }

    pub fn get(&self, name: &str) -> Option<&ArchiveEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Adds every parameter of `store` as `<prefix><name>`.
    pub fn push_store(&mut self, prefix: &str, store: &ParamStore) {
        for p in store.iter() {
            self.push(format!("{prefix}{}", p.name), &p.shape, p.data.clone());
        }
    }

    /// Adds per-parameter buffers (optimizer moments) laid out like `store`.
    pub fn push_buffers(&mut self, prefix: &str, store: &ParamStore, buffers: &[Vec<f64>]) {
        for (p, b) in store.iter().zip(buffers) {
            self.push(format!("{prefix}{}", p.name), &p.shape, b.clone());
        }
    }

    fn lookup(&self, name: &str, shape: &[usize]) -> Result<&ArchiveEntry> {
        let e = self.get(name).ok_or_else(|| corrupt(format!("missing entry {name}")))?;
        if e.shape != shape {
            return Err(corrupt(format!("{name}: stored shape {:?}, model expects {shape:?}", e.shape)));
        }
        Ok(e)
    }

    /// Overwrites `store` with the `<prefix><name>` entries. Every parameter
    /// must be present with a matching shape.
    pub fn load_store(&self, prefix: &str, store: &mut ParamStore) -> Result<()> {
        let ids: Vec<_> = store.iter().map(|p| (format!("{prefix}{}", p.name), p.shape.clone())).collect();
        let mut values = Vec::with_capacity(ids.len());
        for (name, shape) in &ids {
            values.push(self.lookup(name, shape)?.data.clone());
        }
        for (i, v) in values.into_iter().enumerate() {
            store.get_mut(condgan_autograd::ParamId(i)).data = v;
        }
        Ok(())
    }

    pub fn load_buffers(&self, prefix: &str, store: &ParamStore) -> Result<Vec<Vec<f64>>> {
        store.iter().map(|p| Ok(self.lookup(&format!("{prefix}{}", p.name), &p.shape)?.data.clone())).collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            out.extend_from_slice(&(e.name.len() as u32).to_le_bytes());
            out.extend_from_slice(e.name.as_bytes());
            out.extend_from_slice(&(e.shape.len() as u32).to_le_bytes());
            for &d in &e.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in &e.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(corrupt("not a parameter archive (bad magic)"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(corrupt(format!("unsupported archive version {version}")));
        }
        let count = r.u32()? as usize;
        let mut entries = Vec::with_capacity(count.min(r.remaining() / 12));
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?).map_err(|_| corrupt("entry name is not UTF-8"))?.to_string();
            let rank = r.u32()? as usize;
            if rank > MAX_RANK {
                return Err(corrupt(format!("{name}: rank {rank} too large")));
            }
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32()? as usize);
            }
            let numel = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .filter(|&n| n <= r.remaining() / 8)
                .ok_or_else(|| corrupt(format!("{name}: shape {shape:?} exceeds the file")))?;
            let data = r.take(numel * 8)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            if entries.iter().any(|e: &ArchiveEntry| e.name == name) {
                return Err(corrupt(format!("duplicate entry {name}")));
            }
            entries.push(ArchiveEntry { name, shape, data });
        }
        if r.remaining() != 0 {
            return Err(corrupt(format!("{} trailing bytes", r.remaining())));
        }
        Ok(Self { entries })
    }
}
