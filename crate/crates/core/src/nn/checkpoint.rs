//! Self-describing parameter container.
//!
//! Layout: 8-byte magic, `u32` format version, `u64` header length, JSON
//! header, every tensor as little-endian `f64` in header order, then the
//! SHA-256 of all preceding bytes.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::params::ParamStore;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"BDAMBCKP";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    /// Model family, e.g. `"cnnlstm"`.
    pub kind: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub vocab_hash: String,
    pub tensors: Vec<TensorInfo>,
}

/// SHA-256 hex digest of the canonical (sorted-key) JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let canonical = serde_json::to_value(value)?;
    Ok(hex(&Sha256::digest(serde_json::to_vec(&canonical)?)))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_checkpoint<W: Write, C: Serialize>(
    mut writer: W,
    kind: &str,
    config: &C,
    vocab_hash: &str,
    params: &ParamStore,
) -> Result<()> {
    let config_value = serde_json::to_value(config)?;
    let header = CheckpointHeader {
        kind: kind.to_string(),
        config_hash: config_hash(&config_value)?,
        config: config_value,
        vocab_hash: vocab_hash.to_string(),
        tensors: params
            .names()
            .iter()
            .zip(params.tensors())
            .map(|(n, t)| TensorInfo { name: n.clone(), shape: t.shape().to_vec() })
            .collect(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut buf = Vec::with_capacity(32 + header_bytes.len() + params.count() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header_bytes.len() as u64).to_le_bytes());
    buf.extend_from_slice(&header_bytes);
    for t in params.tensors() {
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    writer.write_all(&buf)?;
    Ok(())
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Checkpoint(format!("truncated while reading {what}")));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

/// Reads and verifies a checkpoint. Nothing is returned unless the digest,
/// the version and the config hash all check out.
pub fn read_checkpoint<R: Read>(mut reader: R) -> Result<(CheckpointHeader, ParamStore)> {
    let mut all = Vec::new();
    reader.read_to_end(&mut all)?;
    if all.len() < MAGIC.len() + 12 + 32 {
        return Err(Error::Checkpoint("file too short".into()));
    }
    if &all[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("bad magic header".into()));
    }
    let (body, digest) = all.split_at(all.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checkpoint("checksum mismatch (truncated or corrupted file)".into()));
    }
    let mut rest = &body[MAGIC.len()..];
    let version = u32::from_le_bytes(take(&mut rest, 4, "version")?.try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {version}")));
    }
    let header_len = u64::from_le_bytes(take(&mut rest, 8, "header length")?.try_into().expect("8 bytes"));
    let header: CheckpointHeader = serde_json::from_slice(take(&mut rest, header_len as usize, "header")?)
        .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    if config_hash(&header.config)? != header.config_hash {
        return Err(Error::Checkpoint("config hash does not match stored config".into()));
    }
    let mut params = ParamStore::new();
    for info in &header.tensors {
        let n: usize = info.shape.iter().product();
        let raw = take(&mut rest, n * 8, &info.name)?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        params.push(info.name.clone(), Tensor::from_vec(&info.shape, data)?);
    }
    if !rest.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    Ok((header, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ParamStore {
        let mut p = ParamStore::new();
        p.push("w", Tensor::from_vec(&[2, 2], vec![1.5, -2.0, f64::MIN_POSITIVE, 0.1]).unwrap());
        p.push("b", Tensor::from_vec(&[2], vec![0.0, -0.0]).unwrap());
        p
    }

    fn bytes() -> Vec<u8> {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, "test", &serde_json::json!({"units": 3}), "abc", &sample()).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_bitwise() {
        let (header, params) = read_checkpoint(&bytes()[..]).unwrap();
        assert_eq!(header.kind, "test");
        assert_eq!(header.vocab_hash, "abc");
        let a: Vec<u64> = params.flatten().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = sample().flatten().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_or_corrupt() {
        let b = bytes();
        for cut in [0, 5, 20, b.len() / 2, b.len() - 1] {
            assert!(read_checkpoint(&b[..cut]).is_err(), "cut {cut}");
        }
        let mut bad = b.clone();
        let mid = bad.len() - 40;
        bad[mid] ^= 1;
        assert!(read_checkpoint(&bad[..]).is_err());
    }

    #[test]
    fn config_hash_mismatch() {
        // Rewrite the header with a wrong hash and a fresh digest.
        let (mut header, params) = read_checkpoint(&bytes()[..]).unwrap();
        header.config_hash = "0".repeat(64);
        let hb = serde_json::to_vec(&header).unwrap();
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(hb.len() as u64).to_le_bytes());
        buf.extend_from_slice(&hb);
        for v in params.flatten() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let d = Sha256::digest(&buf);
        buf.extend_from_slice(&d);
        assert!(matches!(read_checkpoint(&buf[..]), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = serde_json::json!({"a": 1, "b": 2});
        let b: serde_json::Value = serde_json::from_str(r#"{"b": 2, "a": 1}"#).unwrap();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
    }
}
