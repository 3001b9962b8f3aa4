//! Versioned binary container for trained artifacts.
//!
//! Layout: 8-byte magic, `u16` format version, `u8` kind length and kind
//! bytes, `u64` schema fingerprint, `u64` payload length, then the payload as
//! JSON. All integers are little-endian.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GUMDROP\0";
pub const FORMAT_VERSION: u16 = 1;

pub fn encode_artifact<T: Serialize>(kind: &str, fingerprint: u64, value: &T) -> Result<Vec<u8>> {
    let payload = serde_json::to_vec(value)?;
    let kind = kind.as_bytes();
    if kind.len() > u8::MAX as usize {
        return Err(Error::Invalid("artifact kind too long".into()));
    }
    let mut out = Vec::with_capacity(payload.len() + 32 + kind.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(kind.len() as u8);
    out.extend_from_slice(kind);
    out.extend_from_slice(&fingerprint.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Header fields of an artifact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Header {
    pub version: u16,
    pub kind: String,
    pub fingerprint: u64,
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::InvalidModel("truncated artifact".into()));
    }
    let (a, b) = bytes.split_at(n);
    *bytes = b;
    Ok(a)
}

pub fn read_header(mut bytes: &[u8]) -> Result<(Header, &[u8])> {
    if take(&mut bytes, 8)? != MAGIC {
        return Err(Error::InvalidModel("not a model artifact".into()));
    }
    let version = u16::from_le_bytes(take(&mut bytes, 2)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            expected: FORMAT_VERSION,
            found: version,
        });
    }
    let klen = take(&mut bytes, 1)?[0] as usize;
    let kind = String::from_utf8(take(&mut bytes, klen)?.to_vec())
        .map_err(|_| Error::InvalidModel("artifact kind is not UTF-8".into()))?;
    let fingerprint = u64::from_le_bytes(take(&mut bytes, 8)?.try_into().unwrap());
    let plen = u64::from_le_bytes(take(&mut bytes, 8)?.try_into().unwrap()) as usize;
    let payload = take(&mut bytes, plen)?;
    Ok((
        Header {
            version,
            kind,
            fingerprint,
        },
        payload,
    ))
}

pub fn decode_artifact<T: DeserializeOwned>(bytes: &[u8], kind: &str) -> Result<(u64, T)> {
    let (header, payload) = read_header(bytes)?;
    if header.kind != kind {
        return Err(Error::InvalidModel(format!(
            "expected a `{kind}` artifact, found `{}`",
            header.kind
        )));
    }
    Ok((header.fingerprint, serde_json::from_slice(payload)?))
}

pub fn save<T: Serialize>(path: &Path, kind: &str, fingerprint: u64, value: &T) -> Result<()> {
    std::fs::write(path, encode_artifact(kind, fingerprint, value)?)?;
    Ok(())
}

pub fn load<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<(u64, T)> {
    decode_artifact(&std::fs::read(path)?, kind)
}
