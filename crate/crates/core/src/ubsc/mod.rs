//! Universal background sparse coding.
//!
//! The background model is an ensemble of `V` codebooks, each holding `k`
//! frames drawn without replacement from the pooled training frames. A
//! frame is coded by the index of its nearest center in every codebook, and
//! an utterance is summarised by the average of its frames' concatenated
//! one-hot codes.

mod io;

pub use io::{decode_model, encode_model};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::UtteranceFeatures;
use crate::supervector::{ModelKind, Supervector};

/// Above this many dimensions UBSC supervectors are stored sparsely.
pub const DENSE_LIMIT: usize = 4096;

/// Frames per parallel work unit when encoding.
const FRAME_BLOCK: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct UbscModel {
    n_models: usize,
    k: usize,
    dim: usize,
    seed: u64,
    /// `n_models * k * dim` values; codebook `v`, center `j` starts at
    /// `(v * k + j) * dim`.
    centers: Vec<f32>,
}

impl UbscModel {
    pub fn from_centers(n_models: usize, k: usize, dim: usize, seed: u64, centers: Vec<f32>) -> Result<Self> {
        if n_models == 0 || k == 0 || dim == 0 {
            return Err(Error::InvalidArgument(format!("UBSC model needs V, k, d >= 1 (got {n_models}, {k}, {dim})")));
        }
        let expected = n_models * k * dim;
        if centers.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: centers.len() });
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("UBSC centers"));
        }
        Ok(UbscModel { n_models, k, dim, seed, centers })
    }

    pub fn n_models(&self) -> usize {
        self.n_models
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn centers(&self) -> &[f32] {
        &self.centers
    }

    /// The `k x dim` codebook of base model `v`.
    pub fn codebook(&self, v: usize) -> &[f32] {
        let size = self.k * self.dim;
        &self.centers[v * size..(v + 1) * size]
    }

    pub fn supervector_len(&self) -> usize {
        self.n_models * self.k
    }

    /// Codes one frame against every base model.
    pub fn encode_frame(&self, x: &[f32]) -> Result<SparseCode> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("frame"));
        }
        let mut winners = vec![0u32; self.n_models];
        self.code_into(x, &mut winners);
        Ok(SparseCode { k: self.k, winners })
    }

    fn code_into(&self, x: &[f32], out: &mut [u32]) {
        let mut stack = [0f64; 64];
        let heap: Vec<f64>;
        let xd: &[f64] = if x.len() <= stack.len() {
            for (a, b) in stack.iter_mut().zip(x) {
                *a = *b as f64;
            }
            &stack[..x.len()]
        } else {
            heap = x.iter().map(|&v| v as f64).collect();
            &heap
        };
        for (v, slot) in out.iter_mut().enumerate() {
            *slot = nearest_center_f64(xd, self.codebook(v)) as u32;
        }
    }
}

/// One-hot codes of a frame: the winning center index in each base model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseCode {
    k: usize,
    winners: Vec<u32>,
}

impl SparseCode {
    pub fn winners(&self) -> &[u32] {
        &self.winners
    }

    /// The one-hot block produced by base model `v`.
    pub fn block(&self, v: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.k];
        b[self.winners[v] as usize] = 1.0;
        b
    }

    /// Concatenation of all blocks, length `V * k`.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k * self.winners.len()];
        for (v, &w) in self.winners.iter().enumerate() {
            out[v * self.k + w as usize] = 1.0;
        }
        out
    }
}

/// Index of the row of `centers` (row-major, `x.len()` columns) closest to
/// `x` in Euclidean distance. Ties go to the lowest index.
pub fn nearest_center(x: &[f32], centers: &[f32]) -> usize {
    let xd: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    nearest_center_f64(&xd, centers)
}

#[inline]
fn nearest_center_f64(x: &[f64], centers: &[f32]) -> usize {
    // Squared distances order the same way as distances.
    let mut best = f64::INFINITY;
    let mut best_j = 0;
    for (j, c) in centers.chunks_exact(x.len()).enumerate() {
        let mut s = 0.0f64;
        for (a, &b) in x.iter().zip(c) {
            let t = a - b as f64;
            s += t * t;
        }
        if s < best {
            best = s;
            best_j = j;
        }
    }
    best_j
}

/// Draws, for each of `n_models` base models, `k` distinct indices from
/// `0..pool_len`, uniformly and independently across models.
pub fn sample_indices(pool_len: usize, k: usize, n_models: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || n_models == 0 {
        return Err(Error::InvalidArgument(format!("need k, V >= 1 (got {k}, {n_models})")));
    }
    if pool_len < k {
        return Err(Error::PoolSmallerThanK { pool: pool_len, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_models).map(|_| rand::seq::index::sample(&mut rng, pool_len, k).into_vec()).collect())
}

/// Builds a UBSC model from the pooled training frames.
pub fn train_ubsc(pool: &UtteranceFeatures, k: usize, n_models: usize, seed: u64) -> Result<UbscModel> {
    let draws = sample_indices(pool.n_frames(), k, n_models, seed)?;
    let dim = pool.dim();
    let mut centers = Vec::with_capacity(n_models * k * dim);
    for draw in &draws {
        for &i in draw {
            centers.extend_from_slice(pool.row(i));
        }
    }
    UbscModel::from_centers(n_models, k, dim, seed, centers)
}

/// Averages the frames' concatenated one-hot codes into a supervector.
pub fn supervector(feats: &UtteranceFeatures, model: &UbscModel) -> Result<Supervector> {
    let n = feats.n_frames();
    if n == 0 {
        return Err(Error::EmptyUtterance);
    }
    if feats.dim() != model.dim {
        return Err(Error::DimensionMismatch { expected: model.dim, found: feats.dim() });
    }
    let v_count = model.n_models;
    let k = model.k;
    // winners[i * V + v]: each frame is coded independently, so the result
    // does not depend on how frames are scheduled.
    let mut winners = vec![0u32; n * v_count];
    winners.par_chunks_mut(FRAME_BLOCK * v_count).enumerate().for_each(|(b, chunk)| {
        for (off, out) in chunk.chunks_exact_mut(v_count).enumerate() {
            model.code_into(feats.row(b * FRAME_BLOCK + off), out);
        }
    });

    let nf = n as f64;
    if v_count * k <= DENSE_LIMIT {
        let mut counts = vec![0u32; v_count * k];
        for frame in winners.chunks_exact(v_count) {
            for (v, &w) in frame.iter().enumerate() {
                counts[v * k + w as usize] += 1;
            }
        }
        Supervector::dense(ModelKind::Ubsc, counts.into_iter().map(|c| c as f64 / nf).collect())
    } else {
        let mut entries = Vec::new();
        let mut column = Vec::with_capacity(n);
        for v in 0..v_count {
            column.clear();
            column.extend(winners.iter().skip(v).step_by(v_count).copied());
            column.sort_unstable();
            for run in column.chunk_by(|a, b| a == b) {
                entries.push((v * k + run[0] as usize, run.len() as f64 / nf));
            }
        }
        Supervector::sparse(ModelKind::Ubsc, v_count * k, entries)
    }
}
