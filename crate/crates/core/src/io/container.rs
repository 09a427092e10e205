//! Binary container: `SRSK`, u32 LE version, u64 LE metadata length, UTF-8
//! JSON metadata, u64 LE value count, then that many f64 LE values.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SRSK";
pub const CONTAINER_VERSION: u32 = 1;

pub fn write_container<M: Serialize>(meta: &M, blob: &[f64]) -> Result<Vec<u8>> {
    let doc = serde_json::to_vec(meta)?;
    let mut out = Vec::with_capacity(24 + doc.len() + 8 * blob.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    out.extend_from_slice(&(doc.len() as u64).to_le_bytes());
    out.extend_from_slice(&doc);
    out.extend_from_slice(&(blob.len() as u64).to_le_bytes());
    for v in blob {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Schema(format!("container truncated in {what}")))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u64(&mut self, what: &str) -> Result<usize> {
        let b = self.take(8, what)?;
        usize::try_from(u64::from_le_bytes(b.try_into().expect("8 bytes")))
            .map_err(|_| Error::Schema(format!("{what} does not fit in memory")))
    }
}

pub fn read_container<M: DeserializeOwned>(bytes: &[u8]) -> Result<(M, Vec<f64>)> {
    let mut c = Cursor { bytes, at: 0 };
    if c.take(4, "magic")? != MAGIC {
        return Err(Error::Schema("not a seqrisk container (bad magic)".into()));
    }
    let version = u32::from_le_bytes(c.take(4, "version")?.try_into().expect("4 bytes"));
    if version != CONTAINER_VERSION {
        return Err(Error::Schema(format!("unsupported container version {version}")));
    }
    let len = c.u64("metadata length")?;
    let meta = serde_json::from_slice(c.take(len, "metadata")?)?;
    let count = c.u64("value count")?;
    let raw = c.take(
        count
            .checked_mul(8)
            .ok_or_else(|| Error::Schema("value count overflows".into()))?,
        "values",
    )?;
    if c.at != bytes.len() {
        return Err(Error::Schema(format!("{} trailing bytes after container", bytes.len() - c.at)));
    }
    let blob = raw
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    Ok((meta, blob))
}
