//! Versioned, checksummed model files.
//!
//! Layout: one header line `hybrid-ids-model <version> sha256=<hex> bytes=<n>`
//! followed by the JSON payload the header describes.

use std::path::Path;

use hybrid_ids_core::models::TrainedModel;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MODEL_MAGIC: &str = "hybrid-ids-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

pub fn encode_model(model: &TrainedModel) -> Result<Vec<u8>> {
    let payload = serde_json::to_vec(model).map_err(|e| Error::json("<model>", e))?;
    let digest = hex::encode(Sha256::digest(&payload));
    let mut out = format!("{MODEL_MAGIC} {MODEL_FORMAT_VERSION} sha256={digest} bytes={}\n", payload.len()).into_bytes();
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes, path)
}

pub fn decode_model(bytes: &[u8], path: &Path) -> Result<TrainedModel> {
    let corrupt = |reason: &str| Error::Corrupt { path: path.to_path_buf(), reason: reason.to_string() };
    let Some(nl) = bytes.iter().position(|&b| b == b'\n') else {
        // A model file cut short inside its header.
        if !bytes.is_empty() && bytes.starts_with(&MODEL_MAGIC.as_bytes()[..bytes.len().min(MODEL_MAGIC.len())]) {
            return Err(Error::Checksum { path: path.to_path_buf() });
        }
        return Err(corrupt("missing header line"));
    };
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| corrupt("header is not UTF-8"))?;
    let payload = &bytes[nl + 1..];
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 4 || fields[0] != MODEL_MAGIC {
        return Err(corrupt("bad header"));
    }
    let version: u32 = fields[1].parse().map_err(|_| corrupt("bad version field"))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::VersionMismatch { path: path.to_path_buf(), found: version, expected: MODEL_FORMAT_VERSION });
    }
    let digest = fields[2].strip_prefix("sha256=").ok_or_else(|| corrupt("bad checksum field"))?;
    let len: usize = fields[3]
        .strip_prefix("bytes=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| corrupt("bad length field"))?;
    if payload.len() != len || hex::encode(Sha256::digest(payload)) != digest {
        return Err(Error::Checksum { path: path.to_path_buf() });
    }
    serde_json::from_slice(payload).map_err(|e| Error::json(path, e))
}
