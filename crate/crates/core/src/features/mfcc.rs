use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Shape of the mel filters, evaluated on the mel axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterShape {
    Triangular,
    Hamming,
}

/// MFCC front-end parameters.
///
/// The defaults give 19 cepstra plus one log energy per 25 ms frame at 16 kHz:
/// Hamming analysis window, 512-point FFT, 26 mel filters over 0-8 kHz,
/// orthonormal DCT-II, no pre-emphasis.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub frame_ms: f64,
    pub shift_ms: f64,
    pub fft_size: usize,
    pub n_filters: usize,
    /// Cepstra kept, starting at c1 (c0 is always dropped).
    pub n_ceps: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub filter_shape: FilterShape,
    /// Hamming-shaped cepstral lifter over c1..c_n.
    pub lifter: bool,
    /// Lower clamp for filterbank and frame energies before the log.
    pub energy_floor: f64,
    /// Measure frame energy after the analysis window (default) or before.
    pub energy_after_window: bool,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            sample_rate: 16_000,
            frame_ms: 25.0,
            shift_ms: 10.0,
            fft_size: 512,
            n_filters: 26,
            n_ceps: 19,
            low_hz: 0.0,
            high_hz: 8_000.0,
            filter_shape: FilterShape::Triangular,
            lifter: true,
            energy_floor: 1e-10,
            energy_after_window: true,
        }
    }
}

impl MfccConfig {
    pub fn frame_len(&self) -> usize {
        (self.frame_ms * self.sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn shift_len(&self) -> usize {
        (self.shift_ms * self.sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.sample_rate == 0 {
            return fail("sample_rate must be positive".into());
        }
        if !(self.shift_ms > 0.0 && self.frame_ms >= self.shift_ms) {
            return fail(format!("need frame_ms >= shift_ms > 0, got {} / {}", self.frame_ms, self.shift_ms));
        }
        if self.shift_len() == 0 {
            return fail("frame shift is shorter than one sample".into());
        }
        if self.fft_size < self.frame_len() {
            return fail(format!("fft_size {} is shorter than the frame ({})", self.fft_size, self.frame_len()));
        }
        if self.n_filters < 2 || self.n_ceps == 0 || self.n_ceps >= self.n_filters {
            return fail(format!("need 1 <= n_ceps < n_filters, got {} / {}", self.n_ceps, self.n_filters));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(self.low_hz >= 0.0 && self.low_hz < self.high_hz && self.high_hz <= nyquist) {
            return fail(format!("filterbank range {}..{} Hz outside 0..{nyquist}", self.low_hz, self.high_hz));
        }
        if !(self.energy_floor > 0.0 && self.energy_floor.is_finite()) {
            return fail("energy_floor must be positive".into());
        }
        Ok(())
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Precomputed window, filterbank, DCT and FFT plan for one configuration.
pub struct MfccExtractor {
    config: MfccConfig,
    window: Vec<f64>,
    /// Per filter: first FFT bin and its weights.
    filters: Vec<(usize, Vec<f64>)>,
    centers_hz: Vec<f64>,
    dct: Vec<Vec<f64>>,
    lifter: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor").field("config", &self.config).finish_non_exhaustive()
    }
}

impl MfccExtractor {
    pub fn new(config: MfccConfig) -> Result<Self> {
        config.validate()?;
        let frame_len = config.frame_len();
        let window =
            (0..frame_len)
                .map(|n| {
                    if frame_len == 1 {
                        1.0
                    } else {
                        0.54 - 0.46 * (2.0 * PI * n as f64 / (frame_len - 1) as f64).cos()
                    }
                })
                .collect();

        let mel_lo = hz_to_mel(config.low_hz);
        let mel_hi = hz_to_mel(config.high_hz);
        let step = (mel_hi - mel_lo) / (config.n_filters + 1) as f64;
        let n_bins = config.fft_size / 2 + 1;
        let bin_mel: Vec<f64> =
            (0..n_bins).map(|b| hz_to_mel(b as f64 * config.sample_rate as f64 / config.fft_size as f64)).collect();
        let mut filters = Vec::with_capacity(config.n_filters);
        let mut centers_hz = Vec::with_capacity(config.n_filters);
        for m in 0..config.n_filters {
            let left = mel_lo + m as f64 * step;
            let center = left + step;
            let right = center + step;
            centers_hz.push(mel_to_hz(center));
            let weight = |mel: f64| -> f64 {
                if mel <= left || mel >= right {
                    return 0.0;
                }
                match config.filter_shape {
                    FilterShape::Triangular => {
                        if mel <= center {
                            (mel - left) / step
                        } else {
                            (right - mel) / step
                        }
                    }
                    FilterShape::Hamming => 0.54 - 0.46 * (PI * (mel - left) / step).cos(),
                }
            };
            let first = bin_mel.iter().position(|&b| b > left).unwrap_or(n_bins);
            let weights: Vec<f64> = bin_mel[first..].iter().take_while(|&&b| b < right).map(|&b| weight(b)).collect();
            filters.push((first, weights));
        }

        let n_f = config.n_filters;
        let dct = (1..=config.n_ceps)
            .map(|n| {
                (0..n_f)
                    .map(|m| (2.0 / n_f as f64).sqrt() * (PI * n as f64 * (m as f64 + 0.5) / n_f as f64).cos())
                    .collect()
            })
            .collect();
        let lifter = (1..=config.n_ceps)
            .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (config.n_ceps + 1) as f64).cos())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(config.fft_size);

        Ok(MfccExtractor { config, window, filters, centers_hz, dct, lifter, fft })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    pub fn frame_len(&self) -> usize {
        self.window.len()
    }

    pub fn shift_len(&self) -> usize {
        self.config.shift_len()
    }

    /// Output width: `n_ceps` cepstra plus log energy.
    pub fn dim(&self) -> usize {
        self.config.n_ceps + 1
    }

    pub fn filter_centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    pub fn lifter_weights(&self) -> &[f64] {
        &self.lifter
    }

    fn check_frame(&self, frame: &[f64]) -> Result<()> {
        if frame.len() != self.frame_len() {
            return Err(Error::DimensionMismatch { expected: self.frame_len(), found: frame.len() });
        }
        if frame.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("audio frame"));
        }
        Ok(())
    }

    /// |FFT|^2 of the windowed, zero-padded frame, bins 0..=fft_size/2.
    pub fn power_spectrum(&self, frame: &[f64]) -> Result<Vec<f64>> {
        self.check_frame(frame)?;
        let mut buf: Vec<Complex<f64>> =
            frame.iter().zip(&self.window).map(|(s, w)| Complex::new(s * w, 0.0)).collect();
        buf.resize(self.config.fft_size, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        Ok(buf[..self.config.fft_size / 2 + 1].iter().map(|c| c.norm_sqr()).collect())
    }

    /// Filterbank energies (linear scale, not floored).
    pub fn mel_energies(&self, frame: &[f64]) -> Result<Vec<f64>> {
        let power = self.power_spectrum(frame)?;
        Ok(self.filters.iter().map(|(first, w)| w.iter().zip(&power[*first..]).map(|(a, p)| a * p).sum()).collect())
    }

    /// Floored natural-log filterbank energies.
    pub fn log_mel_energies(&self, frame: &[f64]) -> Result<Vec<f64>> {
        let floor = self.config.energy_floor;
        Ok(self.mel_energies(frame)?.into_iter().map(|e| e.max(floor).ln()).collect())
    }

    /// c1..c_n from the orthonormal DCT-II of the log filterbank energies,
    /// before liftering.
    pub fn raw_cepstra(&self, frame: &[f64]) -> Result<Vec<f64>> {
        let logs = self.log_mel_energies(frame)?;
        Ok(self.dct.iter().map(|row| row.iter().zip(&logs).map(|(c, l)| c * l).sum()).collect())
    }

    pub fn log_energy(&self, frame: &[f64]) -> Result<f64> {
        self.check_frame(frame)?;
        let energy: f64 = if self.config.energy_after_window {
            frame.iter().zip(&self.window).map(|(s, w)| (s * w) * (s * w)).sum()
        } else {
            frame.iter().map(|s| s * s).sum()
        };
        Ok(energy.max(self.config.energy_floor).ln())
    }

    /// One feature row: liftered c1..c_n followed by the frame log energy.
    pub fn mfcc_frame(&self, frame: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.raw_cepstra(frame)?;
        if self.config.lifter {
            for (c, w) in out.iter_mut().zip(&self.lifter) {
                *c *= w;
            }
        }
        out.push(self.log_energy(frame)?);
        Ok(out)
    }
}
