//! Binary checkpoint format (all integers and floats little-endian):
//!
//! ```text
//! magic    b"WLCK"
//! version  u32            (= 1)
//! iter     u64            training iterations completed
//! steps    u64            agent-steps consumed by training so far
//! input    u32
//! hidden   u32
//! count    u32            number of tensors
//! count × { name_len u16, name utf-8, ndim u8, dims u32 × ndim, data f64 × prod(dims) }
//! ```
//!
//! Network tensors come first in layout order; optional optimizer state is
//! stored as the tensors `adam.m`, `adam.v` (one entry per parameter) and
//! `adam.t` (a single step counter).

use std::io::{Read, Write};
use std::path::Path;

use crate::env::OBS_DIM;

use super::net::{Layout, PolicyNet};
use super::PolicyError;

const MAGIC: &[u8; 4] = b"WLCK";
const MAX_HIDDEN: usize = 1 << 16;
pub const FORMAT_VERSION: u32 = 1;

/// Adam moments and step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub iteration: u64,
    pub env_steps: u64,
    pub net: PolicyNet,
    pub optimizer: Option<AdamState>,
}

fn bad(msg: impl Into<String>) -> PolicyError {
    PolicyError::Checkpoint(msg.into())
}

fn put_tensor(out: &mut Vec<u8>, name: &str, shape: &[usize], data: &[f64]) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.push(shape.len() as u8);
    for &d in shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for x in data {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PolicyError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| bad("truncated file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, PolicyError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, PolicyError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, PolicyError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, PolicyError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn tensor(&mut self) -> Result<(String, Vec<usize>, Vec<f64>), PolicyError> {
        let len = self.u16()? as usize;
        let name = std::str::from_utf8(self.take(len)?)
            .map_err(|_| bad("tensor name is not utf-8"))?
            .to_string();
        let ndim = self.u8()? as usize;
        let shape = (0..ndim).map(|_| self.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let count: usize = shape.iter().product();
        let bytes = self.take(count.checked_mul(8).ok_or_else(|| bad("tensor too large"))?)?;
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok((name, shape, data))
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.iteration.to_le_bytes());
        out.extend_from_slice(&self.env_steps.to_le_bytes());
        out.extend_from_slice(&(self.net.layout.input as u32).to_le_bytes());
        out.extend_from_slice(&(self.net.layout.hidden as u32).to_le_bytes());
        let tensors = self.net.layout.tensors();
        let count = tensors.len() + if self.optimizer.is_some() { 3 } else { 0 };
        out.extend_from_slice(&(count as u32).to_le_bytes());
        for spec in &tensors {
            put_tensor(&mut out, spec.name, &spec.shape, &self.net.params[spec.range()]);
        }
        if let Some(adam) = &self.optimizer {
            put_tensor(&mut out, "adam.m", &[adam.m.len()], &adam.m);
            put_tensor(&mut out, "adam.v", &[adam.v.len()], &adam.v);
            put_tensor(&mut out, "adam.t", &[1], &[adam.t as f64]);
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, PolicyError> {
        let mut c = Cursor { buf, pos: 0 };
        if c.take(4)? != MAGIC {
            return Err(bad("not a weavelane checkpoint"));
        }
        let version = c.u32()?;
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {version}")));
        }
        let iteration = c.u64()?;
        let env_steps = c.u64()?;
        let input = c.u32()? as usize;
        let hidden = c.u32()? as usize;
        let count = c.u32()? as usize;
        if input != OBS_DIM || hidden == 0 || hidden > MAX_HIDDEN {
            return Err(bad(format!("unsupported network shape {input}×{hidden}")));
        }
        let layout = Layout::new(input, hidden);
        let specs = layout.tensors();
        if count != specs.len() && count != specs.len() + 3 {
            return Err(bad(format!("unexpected tensor count {count}")));
        }
        let mut params = vec![0.0; layout.param_count()];
        for spec in &specs {
            let (name, shape, data) = c.tensor()?;
            if name != spec.name || shape != spec.shape {
                return Err(bad(format!("expected tensor {} {:?}, found {name} {shape:?}", spec.name, spec.shape)));
            }
            params[spec.range()].copy_from_slice(&data);
        }
        let optimizer = if count > specs.len() {
            let mut get = |expected: &str, len: usize| -> Result<Vec<f64>, PolicyError> {
                let (name, shape, data) = c.tensor()?;
                if name != expected || shape != [len] {
                    return Err(bad(format!("expected tensor {expected} [{len}], found {name} {shape:?}")));
                }
                Ok(data)
            };
            let m = get("adam.m", params.len())?;
            let v = get("adam.v", params.len())?;
            let t = get("adam.t", 1)?[0];
            Some(AdamState { t: t as u64, m, v })
        } else {
            None
        };
        if c.pos != buf.len() {
            return Err(bad("trailing bytes after last tensor"));
        }
        let net = PolicyNet { layout, params };
        net.check_finite()?;
        Ok(Self {
            iteration,
            env_steps,
            net,
            optimizer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let net = PolicyNet::init(6, 9);
        let n = net.params.len();
        Checkpoint {
            iteration: 17,
            env_steps: 68_000,
            net,
            optimizer: Some(AdamState {
                t: 170,
                m: (0..n).map(|i| i as f64 * 1e-3).collect(),
                v: (0..n).map(|i| (i as f64).sqrt() * 1e-7).collect(),
            }),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = sample();
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back, ck);
        for (a, b) in ck.net.params.iter().zip(&back.net.params) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let plain = Checkpoint { optimizer: None, ..ck };
        assert_eq!(Checkpoint::from_bytes(&plain.to_bytes()).unwrap(), plain);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.ckpt");
        let ck = sample();
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = sample().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(Checkpoint::from_bytes(&wrong).is_err());
        let mut version = bytes.clone();
        version[4] = 9;
        assert!(Checkpoint::from_bytes(&version).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
    }
}
