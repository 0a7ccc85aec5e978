//! Diagonal-covariance GMM universal background model.
//!
//! Components are initialised from the statistics of randomly chosen
//! training utterances, refined by a fixed number of EM iterations, and
//! utterances are embedded by averaging posterior-weighted first- and
//! second-order frame statistics.

mod io;

pub use io::{decode_model, encode_model};

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::UtteranceFeatures;
use crate::parallel::block_reduce;
use crate::supervector::{ModelKind, Supervector};

/// Default variance floor, relative to the pool's per-dimension variance.
pub const DEFAULT_FLOOR_SCALE: f64 = 1e-4;

/// Lower bound for the floor itself when a pool dimension is constant.
const MIN_VARIANCE: f64 = 1e-12;

const FRAME_BLOCK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGmm {
    weights: Vec<f64>,
    /// M x d, row-major.
    means: Vec<f64>,
    /// M x d, row-major.
    variances: Vec<f64>,
    dim: usize,
    seed: u64,
    floor_scale: f64,
}

impl DiagonalGmm {
    pub fn new(
        weights: Vec<f64>,
        means: Vec<f64>,
        variances: Vec<f64>,
        dim: usize,
        seed: u64,
        floor_scale: f64,
    ) -> Result<Self> {
        let m = weights.len();
        if m == 0 || dim == 0 {
            return Err(Error::InvalidArgument("GMM needs M, d >= 1".into()));
        }
        for (len, what) in [(means.len(), "means"), (variances.len(), "variances")] {
            if len != m * dim {
                return Err(Error::InvalidArgument(format!("{what} has {len} values, expected {}", m * dim)));
            }
        }
        if weights.iter().chain(&means).chain(&variances).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("GMM parameters"));
        }
        if weights.iter().any(|&w| w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("GMM weights must be non-negative and sum to 1".into()));
        }
        if variances.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidArgument("GMM variances must be positive".into()));
        }
        Ok(DiagonalGmm { weights, means, variances, dim, seed, floor_scale })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn floor_scale(&self) -> f64 {
        self.floor_scale
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn mean(&self, c: usize) -> &[f64] {
        &self.means[c * self.dim..(c + 1) * self.dim]
    }

    pub fn variance(&self, c: usize) -> &[f64] {
        &self.variances[c * self.dim..(c + 1) * self.dim]
    }

    pub fn supervector_len(&self) -> usize {
        2 * self.n_components() * self.dim
    }
}

/// Per-dimension variance floor derived from a training pool.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceFloor {
    scale: f64,
    per_dim: Vec<f64>,
}

impl VarianceFloor {
    /// `scale` times the pool's per-dimension (population) variance.
    pub fn from_pool(pool: &UtteranceFeatures, scale: f64) -> Result<Self> {
        let n = pool.n_frames();
        if n == 0 {
            return Err(Error::EmptyUtterance);
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!("variance floor scale must be non-negative, got {scale}")));
        }
        let (_, var) = column_moments(pool, n as f64);
        Ok(VarianceFloor { scale, per_dim: var.into_iter().map(|v| (scale * v).max(MIN_VARIANCE)).collect() })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn per_dim(&self) -> &[f64] {
        &self.per_dim
    }
}

/// Column means and variances, the latter divided by `denom`.
fn column_moments(x: &UtteranceFeatures, denom: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.n_frames() as f64;
    let d = x.dim();
    let mut mean = vec![0.0; d];
    for row in x.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for row in x.rows() {
        for ((s, &v), m) in var.iter_mut().zip(row).zip(&mean) {
            let t = v as f64 - m;
            *s += t * t;
        }
    }
    var.iter_mut().for_each(|s| *s /= denom);
    (mean, var)
}

/// Initialises `m` components from randomly chosen utterances.
///
/// Component `c` takes the per-dimension sample mean and (n - 1) sample
/// variance of one utterance; variances are floored and all weights are
/// `1 / m`. Utterances with fewer than two frames are not eligible. Draws
/// are made without replacement until the eligible utterances run out, then
/// start over with a fresh shuffle: two components started from the same
/// utterance are identical and EM can never pull them apart.
pub fn init_gmm(utterances: &[UtteranceFeatures], m: usize, seed: u64, floor: &VarianceFloor) -> Result<DiagonalGmm> {
    if m == 0 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    let eligible: Vec<&UtteranceFeatures> = utterances.iter().filter(|u| u.n_frames() >= 2).collect();
    if eligible.is_empty() {
        return Err(Error::InvalidArgument("no utterance with at least 2 frames to initialise the GMM".into()));
    }
    let dim = eligible[0].dim();
    if let Some(bad) = eligible.iter().find(|u| u.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
    }
    if floor.per_dim.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: floor.per_dim.len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = Vec::new();
    let mut means = Vec::with_capacity(m * dim);
    let mut variances = Vec::with_capacity(m * dim);
    for _ in 0..m {
        if order.is_empty() {
            order = (0..eligible.len()).collect();
            order.shuffle(&mut rng);
        }
        let u = eligible[order.pop().unwrap()];
        let (mu, var) = column_moments(u, (u.n_frames() - 1) as f64);
        means.extend(mu);
        variances.extend(var.iter().zip(&floor.per_dim).map(|(v, f)| v.max(*f)));
    }
    DiagonalGmm::new(vec![1.0 / m as f64; m], means, variances, dim, seed, floor.scale)
}

/// Per-component constants for log-density evaluation.
struct Evaluator<'a> {
    gmm: &'a DiagonalGmm,
    /// ln w_c - 0.5 * sum_d ln(2 pi var_cd)
    log_norm: Vec<f64>,
    inv_var: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(gmm: &'a DiagonalGmm) -> Self {
        let log_norm = (0..gmm.n_components())
            .map(|c| gmm.weights[c].ln() - 0.5 * gmm.variance(c).iter().map(|v| (2.0 * PI * v).ln()).sum::<f64>())
            .collect();
        let inv_var = gmm.variances.iter().map(|v| 1.0 / v).collect();
        Evaluator { gmm, log_norm, inv_var }
    }

    /// Writes normalised posteriors into `gamma` and returns ln p(x).
    fn posteriors_into(&self, x: &[f64], gamma: &mut [f64]) -> f64 {
        let d = self.gmm.dim;
        for (c, g) in gamma.iter_mut().enumerate() {
            let mu = &self.gmm.means[c * d..(c + 1) * d];
            let iv = &self.inv_var[c * d..(c + 1) * d];
            let mut q = 0.0;
            for ((xi, m), i) in x.iter().zip(mu).zip(iv) {
                let t = xi - m;
                q += t * t * i;
            }
            *g = self.log_norm[c] - 0.5 * q;
        }
        let max = gamma.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for g in gamma.iter_mut() {
            *g = (*g - max).exp();
            total += *g;
        }
        for g in gamma.iter_mut() {
            *g /= total;
        }
        max + total.ln()
    }
}

fn row_f64(row: &[f32], buf: &mut [f64]) {
    for (b, &v) in buf.iter_mut().zip(row) {
        *b = v as f64;
    }
}

/// Component posteriors of one frame, computed in log space.
pub fn posteriors(x: &[f64], gmm: &DiagonalGmm) -> Result<Vec<f64>> {
    if x.len() != gmm.dim {
        return Err(Error::DimensionMismatch { expected: gmm.dim, found: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("frame"));
    }
    let mut gamma = vec![0.0; gmm.n_components()];
    let ll = Evaluator::new(gmm).posteriors_into(x, &mut gamma);
    if !ll.is_finite() {
        return Err(Error::ComponentFailure { component: 0, reason: "all component likelihoods underflow".into() });
    }
    Ok(gamma)
}

#[derive(Debug, Clone)]
struct Stats {
    occupancy: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
    log_likelihood: f64,
    /// First frame whose likelihood vanished under every component.
    degenerate: Option<usize>,
}

impl Stats {
    fn merge(&mut self, other: Stats) {
        for (a, b) in self.occupancy.iter_mut().zip(&other.occupancy) {
            *a += b;
        }
        for (a, b) in self.first.iter_mut().zip(&other.first) {
            *a += b;
        }
        for (a, b) in self.second.iter_mut().zip(&other.second) {
            *a += b;
        }
        self.log_likelihood += other.log_likelihood;
        self.degenerate = self.degenerate.or(other.degenerate);
    }
}

fn accumulate(gmm: &DiagonalGmm, pool: &UtteranceFeatures, with_moments: bool) -> Stats {
    let m = gmm.n_components();
    let d = gmm.dim;
    let eval = Evaluator::new(gmm);
    block_reduce(
        pool.n_frames(),
        FRAME_BLOCK,
        |range| {
            let width = if with_moments { m * d } else { 0 };
            let mut s = Stats {
                occupancy: vec![0.0; m],
                first: vec![0.0; width],
                second: vec![0.0; width],
                log_likelihood: 0.0,
                degenerate: None,
            };
            let mut x = vec![0.0; d];
            let mut gamma = vec![0.0; m];
            for i in range {
                row_f64(pool.row(i), &mut x);
                let ll = eval.posteriors_into(&x, &mut gamma);
                if !ll.is_finite() {
                    s.degenerate.get_or_insert(i);
                    continue;
                }
                s.log_likelihood += ll;
                for (c, &g) in gamma.iter().enumerate() {
                    s.occupancy[c] += g;
                    if with_moments && g != 0.0 {
                        let f = &mut s.first[c * d..(c + 1) * d];
                        let q = &mut s.second[c * d..(c + 1) * d];
                        for t in 0..d {
                            let gx = g * x[t];
                            f[t] += gx;
                            q[t] += gx * x[t];
                        }
                    }
                }
            }
            s
        },
        Stats::merge,
    )
    .expect("pool is non-empty")
}

/// Total log-likelihood of the pool under the model.
pub fn log_likelihood(gmm: &DiagonalGmm, pool: &UtteranceFeatures) -> Result<f64> {
    if pool.is_empty() {
        return Err(Error::EmptyUtterance);
    }
    if pool.dim() != gmm.dim {
        return Err(Error::DimensionMismatch { expected: gmm.dim, found: pool.dim() });
    }
    let s = accumulate(gmm, pool, false);
    if let Some(frame) = s.degenerate {
        return Err(Error::ComponentFailure {
            component: 0,
            reason: format!("frame {frame} has zero likelihood under every component"),
        });
    }
    Ok(s.log_likelihood)
}

/// Result of [`em_fit`].
#[derive(Debug, Clone)]
pub struct EmFit {
    pub gmm: DiagonalGmm,
    /// Pool log-likelihood before each iteration, followed by the value for
    /// the final model (`iterations + 1` entries).
    pub log_likelihoods: Vec<f64>,
}

/// Runs exactly `iterations` EM steps on the pooled frames.
pub fn em_fit(gmm: DiagonalGmm, pool: &UtteranceFeatures, iterations: usize, floor: &VarianceFloor) -> Result<EmFit> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("EM needs at least one iteration".into()));
    }
    let m = gmm.n_components();
    let d = gmm.dim;
    if pool.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: pool.dim() });
    }
    if pool.n_frames() < m {
        return Err(Error::InvalidArgument(format!("pool has {} frames but M = {m}", pool.n_frames())));
    }
    if floor.per_dim.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: floor.per_dim.len() });
    }

    let mut gmm = gmm;
    let mut history = Vec::with_capacity(iterations + 1);
    for _ in 0..iterations {
        let s = accumulate(&gmm, pool, true);
        if let Some(frame) = s.degenerate {
            return Err(Error::ComponentFailure {
                component: 0,
                reason: format!("frame {frame} has zero likelihood under every component"),
            });
        }
        history.push(s.log_likelihood);

        let total: f64 = s.occupancy.iter().sum();
        let mut weights = Vec::with_capacity(m);
        let mut means = Vec::with_capacity(m * d);
        let mut variances = Vec::with_capacity(m * d);
        for c in 0..m {
            let occ = s.occupancy[c];
            if !(occ > 0.0 && occ.is_finite()) {
                return Err(Error::ComponentFailure { component: c, reason: format!("occupancy {occ}") });
            }
            weights.push(occ / total);
            for t in 0..d {
                let mu = s.first[c * d + t] / occ;
                let var = s.second[c * d + t] / occ - mu * mu;
                means.push(mu);
                variances.push(var.max(floor.per_dim[t]));
            }
        }
        gmm = DiagonalGmm::new(weights, means, variances, d, gmm.seed, floor.scale)
            .map_err(|e| Error::ComponentFailure { component: 0, reason: e.to_string() })?;
    }
    history.push(log_likelihood(&gmm, pool)?);
    Ok(EmFit { gmm, log_likelihoods: history })
}

/// Initialises from `utterances` and runs EM on their pooled frames.
pub fn train_gmm(
    utterances: &[UtteranceFeatures],
    m: usize,
    iterations: usize,
    seed: u64,
    floor_scale: f64,
) -> Result<DiagonalGmm> {
    let pool = UtteranceFeatures::stack(utterances)?;
    let floor = VarianceFloor::from_pool(&pool, floor_scale)?;
    let init = init_gmm(utterances, m, seed, &floor)?;
    Ok(em_fit(init, &pool, iterations, &floor)?.gmm)
}

/// Averages, over frames, the per-component statistics
/// `[gamma_c * x ; gamma_c * x * x]` concatenated over components.
pub fn gmm_supervector(feats: &UtteranceFeatures, gmm: &DiagonalGmm) -> Result<Supervector> {
    let n = feats.n_frames();
    if n == 0 {
        return Err(Error::EmptyUtterance);
    }
    if feats.dim() != gmm.dim {
        return Err(Error::DimensionMismatch { expected: gmm.dim, found: feats.dim() });
    }
    let m = gmm.n_components();
    let d = gmm.dim;
    let eval = Evaluator::new(gmm);
    let (sums, degenerate) = block_reduce(
        n,
        64,
        |range| {
            let mut acc = vec![0.0; 2 * m * d];
            let mut bad = None;
            let mut x = vec![0.0; d];
            let mut gamma = vec![0.0; m];
            for i in range {
                row_f64(feats.row(i), &mut x);
                if !eval.posteriors_into(&x, &mut gamma).is_finite() {
                    bad.get_or_insert(i);
                    continue;
                }
                for (c, &g) in gamma.iter().enumerate() {
                    let block = &mut acc[2 * c * d..2 * (c + 1) * d];
                    let (f, q) = block.split_at_mut(d);
                    for t in 0..d {
                        let gx = g * x[t];
                        f[t] += gx;
                        q[t] += gx * x[t];
                    }
                }
            }
            (acc, bad)
        },
        |a, b| {
            for (x, y) in a.0.iter_mut().zip(&b.0) {
                *x += y;
            }
            a.1 = a.1.or(b.1);
        },
    )
    .expect("utterance is non-empty");
    if let Some(frame) = degenerate {
        return Err(Error::ComponentFailure {
            component: 0,
            reason: format!("frame {frame} has zero likelihood under every component"),
        });
    }
    Supervector::dense(ModelKind::Gmm, sums.into_iter().map(|s| s / n as f64).collect())
}
