//! Frame-level acoustic features: framing, MFCC extraction, feature files
//! and WAV ingestion.

mod io;
mod mfcc;
mod wav;

pub use io::{read_features, write_features, FEATURE_MAGIC, FEATURE_VERSION};
pub use mfcc::{FilterShape, MfccConfig, MfccExtractor};
pub use wav::read_wav;

use crate::error::{Error, Result};

/// Raw mono waveform with amplitudes in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        Ok(AudioSignal { samples, sample_rate })
    }
}

/// N x d row-major matrix of frame features for one utterance.
///
/// Also used for pooled training frames. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceFeatures {
    data: Vec<f32>,
    dim: usize,
}

impl UtteranceFeatures {
    pub fn from_vec(data: Vec<f32>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("feature dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: data.len() % dim });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix"));
        }
        Ok(UtteranceFeatures { data, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], dim: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            data.extend(row.iter().map(|&v| v as f32));
        }
        Self::from_vec(data, dim)
    }

    /// Stacks the frames of several utterances into one pool.
    pub fn stack<'a, I>(parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a UtteranceFeatures>,
    {
        let mut dim = None;
        let mut data = Vec::new();
        for part in parts {
            match dim {
                None => dim = Some(part.dim),
                Some(d) if d != part.dim => return Err(Error::DimensionMismatch { expected: d, found: part.dim }),
                _ => {}
            }
            data.extend_from_slice(&part.data);
        }
        let dim = dim.ok_or(Error::EmptyUtterance)?;
        Ok(UtteranceFeatures { data, dim })
    }

    pub fn n_frames(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Returns a copy with rows reordered so that row `i` is `self.row(order[i])`.
    pub fn select_rows(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(order.len() * self.dim);
        for &i in order {
            data.extend_from_slice(self.row(i));
        }
        UtteranceFeatures { data, dim: self.dim }
    }
}

fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

pub fn frame_count(len: usize, frame_len: usize, shift: usize) -> usize {
    if len < frame_len {
        0
    } else {
        (len - frame_len) / shift + 1
    }
}

/// Splits a signal into overlapping frames. Frame `j` covers samples
/// `j * shift .. j * shift + frame_len`; the tail remainder is dropped.
pub fn frame_signal(signal: &AudioSignal, frame_ms: f64, shift_ms: f64) -> Result<Vec<&[f64]>> {
    if !(shift_ms > 0.0 && frame_ms >= shift_ms) {
        return Err(Error::InvalidArgument(format!("need frame_ms >= shift_ms > 0, got {frame_ms} / {shift_ms}")));
    }
    let frame_len = ms_to_samples(frame_ms, signal.sample_rate);
    let shift = ms_to_samples(shift_ms, signal.sample_rate);
    if shift == 0 {
        return Err(Error::InvalidArgument("frame shift is shorter than one sample".into()));
    }
    frame_with_lengths(&signal.samples, frame_len, shift)
}

pub(crate) fn frame_with_lengths(samples: &[f64], frame_len: usize, shift: usize) -> Result<Vec<&[f64]>> {
    let n = frame_count(samples.len(), frame_len, shift);
    if n == 0 {
        return Err(Error::UtteranceTooShort { samples: samples.len(), needed: frame_len });
    }
    Ok((0..n).map(|j| &samples[j * shift..j * shift + frame_len]).collect())
}

/// Frames the signal and extracts one feature row per frame. All frames are
/// kept; there is no voice activity detection.
pub fn extract_utterance(signal: &AudioSignal, extractor: &MfccExtractor) -> Result<UtteranceFeatures> {
    let config = extractor.config();
    if signal.sample_rate != config.sample_rate {
        return Err(Error::InvalidArgument(format!(
            "signal sampled at {} Hz, extractor configured for {} Hz",
            signal.sample_rate, config.sample_rate
        )));
    }
    let frames = frame_with_lengths(&signal.samples, extractor.frame_len(), extractor.shift_len())?;
    let dim = extractor.dim();
    let mut data = Vec::with_capacity(frames.len() * dim);
    for frame in frames {
        data.extend(extractor.mfcc_frame(frame)?.into_iter().map(|v| v as f32));
    }
    UtteranceFeatures::from_vec(data, dim)
}
