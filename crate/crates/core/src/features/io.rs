//! Feature file: magic "UBSF", version u32, frame_count u32, dim u32, then
//! frame_count * dim f32 values, row-major, all little-endian.

use std::path::Path;

use super::UtteranceFeatures;
use crate::binio::{put_f32, put_u32, to_u32, Cursor};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"UBSF";
pub const FEATURE_VERSION: u32 = 1;

pub(crate) fn encode(feats: &UtteranceFeatures) -> Result<Vec<u8>> {
    if feats.is_empty() {
        return Err(Error::EmptyUtterance);
    }
    let mut out = Vec::with_capacity(16 + feats.as_slice().len() * 4);
    out.extend_from_slice(FEATURE_MAGIC);
    put_u32(&mut out, FEATURE_VERSION);
    put_u32(&mut out, to_u32(feats.n_frames(), "frame count")?);
    put_u32(&mut out, to_u32(feats.dim(), "dimension")?);
    for &v in feats.as_slice() {
        put_f32(&mut out, v);
    }
    Ok(out)
}

pub(crate) fn decode(bytes: &[u8], expected_dim: Option<usize>) -> Result<UtteranceFeatures> {
    let mut cur = Cursor::new(bytes, "feature file");
    cur.magic(FEATURE_MAGIC)?;
    let version = cur.u32()?;
    if version != FEATURE_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let n = cur.u32()? as usize;
    let dim = cur.u32()? as usize;
    if let Some(expected) = expected_dim {
        if dim != expected {
            return Err(Error::DimensionMismatch { expected, found: dim });
        }
    }
    if n == 0 {
        return Err(Error::EmptyUtterance);
    }
    let data = cur.f32s(n.checked_mul(dim).ok_or(Error::Truncated("feature file"))?)?;
    cur.finish()?;
    UtteranceFeatures::from_vec(data, dim)
}

pub fn write_features(path: &Path, feats: &UtteranceFeatures) -> Result<()> {
    let bytes = encode(feats).map_err(|e| e.in_file(path))?;
    std::fs::write(path, bytes).map_err(|e| Error::from(e).in_file(path))
}

/// Reads a feature file, optionally insisting on a dimension.
pub fn read_features(path: &Path, expected_dim: Option<usize>) -> Result<UtteranceFeatures> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    decode(&bytes, expected_dim).map_err(|e| e.in_file(path))
}
