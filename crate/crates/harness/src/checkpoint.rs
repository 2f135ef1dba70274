//! Network checkpoints.
//!
//! Layout (little-endian): magic `BLOWQNET`, format version (u32), level
//! (u32), descriptor length (u32) and UTF-8 architecture descriptor, tensor
//! count (u32), then per tensor its rank (u32) and dims (u32 each), the
//! parameter count (u64), and finally the parameters as f32 in
//! declaration order.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use blowsim_core::nn::{Architecture, QNetwork};

pub const MAGIC: &[u8; 8] = b"BLOWQNET";
pub const VERSION: u32 = 1;

pub fn encode(net: &QNetwork<f32>, level: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 4 * net.params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&level.to_le_bytes());
    let desc = net.arch.descriptor();
    out.extend_from_slice(&(desc.len() as u32).to_le_bytes());
    out.extend_from_slice(desc.as_bytes());
    let shapes = net.shapes();
    out.extend_from_slice(&(shapes.len() as u32).to_le_bytes());
    for s in &shapes {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        for &d in s {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    out.extend_from_slice(&(net.params.len() as u64).to_le_bytes());
    for p in &net.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        ensure!(self.buf.len() >= n, "checkpoint truncated");
        let (h, t) = self.buf.split_at(n);
        self.buf = t;
        Ok(h)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub struct Decoded {
    pub level: u32,
    pub net: QNetwork<f32>,
}

pub fn decode(bytes: &[u8]) -> Result<Decoded> {
    let mut r = Reader { buf: bytes };
    ensure!(r.take(8)? == MAGIC, "not a checkpoint (bad magic)");
    let version = r.u32()?;
    ensure!(version == VERSION, "unsupported checkpoint version {version}");
    let level = r.u32()?;
    let n = r.u32()? as usize;
    let desc = std::str::from_utf8(r.take(n)?).context("descriptor is not UTF-8")?;
    let arch = Architecture::parse_descriptor(desc)?;
    let tensors = r.u32()? as usize;
    let mut shapes = Vec::with_capacity(tensors);
    for _ in 0..tensors {
        let rank = r.u32()? as usize;
        shapes.push(
            (0..rank)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let count = r.u64()? as usize;
    let raw = r.take(count * 4)?;
    ensure!(r.buf.is_empty(), "trailing bytes after parameters");
    let params = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let net = QNetwork::from_params(arch, params)?;
    ensure!(net.shapes() == shapes, "tensor shapes disagree with the architecture");
    Ok(Decoded { level, net })
}

pub fn save(path: &Path, net: &QNetwork<f32>, level: u32) -> Result<()> {
    let mut f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(&encode(net, level))?;
    Ok(())
}

/// Loads a checkpoint and refuses it unless it matches `expected`.
pub fn load(path: &Path, expected: &Architecture) -> Result<QNetwork<f32>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))?
        .read_to_end(&mut bytes)?;
    let d = decode(&bytes).with_context(|| format!("reading {}", path.display()))?;
    if &d.net.arch != expected {
        let want = QNetwork::<f32>::from_params(expected.clone(), vec![0.0; expected.param_count()])?.shapes();
        bail!(
            "checkpoint {} does not fit this configuration\n  expected {} {:?}\n  found    {} {:?}",
            path.display(),
            expected.descriptor(),
            want,
            d.net.arch.descriptor(),
            d.net.shapes()
        );
    }
    Ok(d.net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn net(actions: usize) -> QNetwork<f32> {
        QNetwork::new_random(
            Architecture::reduced(4, actions),
            &mut rand_chacha::ChaCha8Rng::seed_from_u64(1),
        )
    }

    #[test]
    fn round_trip_is_bitwise() {
        let n = net(2);
        let d = decode(&encode(&n, 1)).unwrap();
        assert_eq!(d.level, 1);
        assert_eq!(d.net, n);
    }

    #[test]
    fn refuses_other_architectures() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.ckpt");
        save(&p, &net(1), 0).unwrap();
        let err = load(&p, &Architecture::reduced(4, 2)).unwrap_err().to_string();
        assert!(err.contains("does not fit"), "{err}");
        assert!(load(&p, &Architecture::reduced(4, 1)).is_ok());
    }

    #[test]
    fn rejects_corruption() {
        let mut b = encode(&net(2), 0);
        assert!(decode(&b[..b.len() - 1]).is_err());
        b[0] = b'X';
        assert!(decode(&b).is_err());
    }
}
