//! Utterance-level supervectors and their file format.
//!
//! File layout (little-endian): magic "UBSV", version u32, kind u8,
//! length u64, nnz u64, then nnz pairs of (u64 index, f32 value) with
//! strictly increasing indices.

use std::path::Path;

use crate::binio::{put_f32, put_u32, put_u64, Cursor};
use crate::error::{Error, Result};

pub const SUPERVECTOR_MAGIC: &[u8; 4] = b"UBSV";
pub const SUPERVECTOR_VERSION: u32 = 1;

/// Which background model produced a supervector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Ubsc,
    Gmm,
}

impl ModelKind {
    pub fn code(self) -> u8 {
        match self {
            ModelKind::Ubsc => 1,
            ModelKind::Gmm => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(ModelKind::Ubsc),
            2 => Some(ModelKind::Gmm),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ubsc => "ubsc",
            ModelKind::Gmm => "gmm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(Vec<f64>),
    /// Sorted, strictly increasing indices with their values.
    Sparse(Vec<(usize, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Supervector {
    kind: ModelKind,
    len: usize,
    storage: Storage,
}

impl Supervector {
    pub fn dense(kind: ModelKind, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("supervector"));
        }
        Ok(Supervector { kind, len: values.len(), storage: Storage::Dense(values) })
    }

    pub fn sparse(kind: ModelKind, len: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Format("sparse indices must be strictly increasing".into()));
        }
        if let Some(&(last, _)) = entries.last() {
            if last >= len {
                return Err(Error::Format(format!("sparse index {last} out of range {len}")));
            }
        }
        if entries.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite("supervector"));
        }
        Ok(Supervector { kind, len, storage: Storage::Sparse(entries) })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Number of stored entries (dense vectors count every slot).
    pub fn stored(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.len(),
            Storage::Sparse(e) => e.len(),
        }
    }

    pub fn get(&self, i: usize) -> f64 {
        match &self.storage {
            Storage::Dense(v) => v[i],
            Storage::Sparse(e) => e.binary_search_by_key(&i, |&(j, _)| j).map_or(0.0, |p| e[p].1),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(v) => v.clone(),
            Storage::Sparse(e) => {
                let mut out = vec![0.0; self.len];
                for &(i, v) in e {
                    out[i] = v;
                }
                out
            }
        }
    }

    /// Non-zero entries in index order.
    pub fn nonzeros(&self) -> Vec<(usize, f64)> {
        match &self.storage {
            Storage::Dense(v) => v.iter().copied().enumerate().filter(|&(_, x)| x != 0.0).collect(),
            Storage::Sparse(e) => e.iter().copied().filter(|&(_, x)| x != 0.0).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        match &self.storage {
            Storage::Dense(v) => v.iter().sum(),
            Storage::Sparse(e) => e.iter().map(|(_, v)| v).sum(),
        }
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(v.iter().map(|x| x * factor).collect()),
            Storage::Sparse(e) => Storage::Sparse(e.iter().map(|&(i, x)| (i, x * factor)).collect()),
        };
        let out = Supervector { kind: self.kind, len: self.len, storage };
        if out.nonzeros().iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite("supervector"));
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let nz = self.nonzeros();
        let mut out = Vec::with_capacity(29 + nz.len() * 12);
        out.extend_from_slice(SUPERVECTOR_MAGIC);
        put_u32(&mut out, SUPERVECTOR_VERSION);
        out.push(self.kind.code());
        put_u64(&mut out, self.len as u64);
        put_u64(&mut out, nz.len() as u64);
        for (i, v) in nz {
            put_u64(&mut out, i as u64);
            put_f32(&mut out, v as f32);
        }
        out
    }

    /// Decodes a supervector file. UBSC vectors stay sparse, GMM vectors are
    /// expanded to dense storage.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor::new(bytes, "supervector file");
        cur.magic(SUPERVECTOR_MAGIC)?;
        let version = cur.u32()?;
        if version != SUPERVECTOR_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let code = cur.u8()?;
        let kind = ModelKind::from_code(code)
            .ok_or_else(|| Error::WrongModelKind { expected: "ubsc or gmm", found: format!("code {code}") })?;
        let len = usize::try_from(cur.u64()?).map_err(|_| Error::Format("supervector too long".into()))?;
        let nnz = cur.u64()? as usize;
        if nnz > len {
            return Err(Error::Format(format!("{nnz} non-zeros in a length-{len} vector")));
        }
        let mut entries = Vec::with_capacity(nnz.min(bytes.len() / 12));
        for _ in 0..nnz {
            let i = cur.u64()? as usize;
            let v = cur.f32()? as f64;
            entries.push((i, v));
        }
        cur.finish()?;
        let sv = Supervector::sparse(kind, len, entries)?;
        Ok(match kind {
            ModelKind::Ubsc => sv,
            ModelKind::Gmm => Supervector::dense(kind, sv.to_dense())?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::from(e).in_file(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
        Self::from_bytes(&bytes).map_err(|e| e.in_file(path))
    }
}
