//! Shared model-file header and kind dispatch.
//!
//! Both model files start with magic "UBSM", a u32 version and a u8 kind
//! (1 = UBSC, 2 = GMM); the kind-specific body follows.

use std::path::Path;

use crate::binio::Cursor;
use crate::error::{Error, Result};
use crate::features::UtteranceFeatures;
use crate::gmm::{self, DiagonalGmm};
use crate::supervector::{ModelKind, Supervector};
use crate::ubsc::{self, UbscModel};

pub const MODEL_MAGIC: &[u8; 4] = b"UBSM";
pub const MODEL_VERSION: u32 = 1;

pub(crate) fn read_header(cur: &mut Cursor<'_>) -> Result<ModelKind> {
    cur.magic(MODEL_MAGIC)?;
    let version = cur.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let code = cur.u8()?;
    ModelKind::from_code(code)
        .ok_or_else(|| Error::WrongModelKind { expected: "ubsc or gmm", found: format!("code {code}") })
}

/// A background model of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum BackgroundModel {
    Ubsc(UbscModel),
    Gmm(DiagonalGmm),
}

impl BackgroundModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            BackgroundModel::Ubsc(_) => ModelKind::Ubsc,
            BackgroundModel::Gmm(_) => ModelKind::Gmm,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BackgroundModel::Ubsc(m) => m.dim(),
            BackgroundModel::Gmm(g) => g.dim(),
        }
    }

    pub fn supervector(&self, feats: &UtteranceFeatures) -> Result<Supervector> {
        match self {
            BackgroundModel::Ubsc(m) => ubsc::supervector(feats, m),
            BackgroundModel::Gmm(g) => gmm::gmm_supervector(feats, g),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        match self {
            BackgroundModel::Ubsc(m) => ubsc::encode_model(m),
            BackgroundModel::Gmm(g) => gmm::encode_model(g),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let kind = read_header(&mut Cursor::new(bytes, "model"))?;
        Ok(match kind {
            ModelKind::Ubsc => BackgroundModel::Ubsc(ubsc::decode_model(bytes)?),
            ModelKind::Gmm => BackgroundModel::Gmm(gmm::decode_model(bytes)?),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes().map_err(|e| e.in_file(path))?;
        std::fs::write(path, bytes).map_err(|e| Error::from(e).in_file(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
        Self::from_bytes(&bytes).map_err(|e| e.in_file(path))
    }
}
