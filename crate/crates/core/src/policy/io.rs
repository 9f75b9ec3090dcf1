//! Binary policy files.
//!
//! Layout (little-endian): magic `QPPL`, `u32` version, `u8` architecture
//! tag, `u32` h, `u32` word dimension, `u32` hidden size, `u64` seed,
//! `u32` parameter count, then the parameters as `f32` in tensor order.

use std::fs;
use std::path::Path;

use super::network::{Architecture, PolicyParams};
use crate::{Error, Result};

pub const POLICY_MAGIC: &[u8; 4] = b"QPPL";
pub const POLICY_VERSION: u32 = 1;

pub fn policy_to_bytes(p: &PolicyParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(33 + 4 * p.weights().len());
    out.extend_from_slice(POLICY_MAGIC);
    out.extend_from_slice(&POLICY_VERSION.to_le_bytes());
    out.push(p.arch().tag());
    for v in [p.h(), p.word_dim(), p.hidden_dim()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&p.seed().to_le_bytes());
    out.extend_from_slice(&(p.weights().len() as u32).to_le_bytes());
    for w in p.weights() {
        out.extend_from_slice(&(*w as f32).to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Format("policy file is truncated".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn policy_from_bytes(bytes: &[u8]) -> Result<PolicyParams> {
    let mut r = Reader { buf: bytes };
    if r.take(4)? != POLICY_MAGIC {
        return Err(Error::Format("not a policy file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != POLICY_VERSION {
        return Err(Error::Version {
            found: version,
            expected: POLICY_VERSION,
        });
    }
    let tag = r.u8()?;
    let arch = Architecture::from_tag(tag)
        .ok_or_else(|| Error::Format(format!("unknown architecture tag {tag}")))?;
    let h = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let hidden = r.u32()? as usize;
    let seed = r.u64()?;
    let n = r.u32()? as usize;
    if r.buf.len() != 4 * n {
        return Err(Error::Format(format!(
            "expected {} parameter bytes, found {}",
            4 * n,
            r.buf.len()
        )));
    }
    let weights = (0..n)
        .map(|_| r.f32().map(f64::from))
        .collect::<Result<Vec<_>>>()?;
    PolicyParams::from_parts(arch, h, dim, hidden, seed, weights)
}

pub fn save_policy(p: &PolicyParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, policy_to_bytes(p)).map_err(|e| Error::io(path, e))
}

pub fn load_policy(path: impl AsRef<Path>) -> Result<PolicyParams> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    policy_from_bytes(&bytes)
}
