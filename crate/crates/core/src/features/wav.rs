use std::path::Path;

use super::AudioSignal;
use crate::error::{Error, Result};

/// Reads a 16-bit PCM mono WAV file, scaling samples to [-1, 1).
pub fn read_wav(path: &Path) -> Result<AudioSignal> {
    let inner = || -> Result<AudioSignal> {
        let reader = hound::WavReader::open(path)?;
        let spec = reader.spec();
        if spec.channels != 1 {
            return Err(Error::UnsupportedAudio(format!("{} channels, only mono is supported", spec.channels)));
        }
        if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
            return Err(Error::UnsupportedAudio(format!(
                "{:?} {}-bit samples, only 16-bit PCM is supported",
                spec.sample_format, spec.bits_per_sample
            )));
        }
        let samples = reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        AudioSignal::new(samples, spec.sample_rate)
    };
    inner().map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(path: &Path, spec: hound::WavSpec, n: usize) {
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for i in 0..n {
            match spec.sample_format {
                hound::SampleFormat::Int => w.write_sample((i as i32 * 37 % 2000 - 1000) as i16).unwrap(),
                hound::SampleFormat::Float => w.write_sample(0.1f32).unwrap(),
            }
        }
        w.finalize().unwrap();
    }

    #[test]
    fn reads_pcm16_mono() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        write(&p, spec, 500);
        let sig = read_wav(&p).unwrap();
        assert_eq!(sig.sample_rate, 16_000);
        assert_eq!(sig.samples.len(), 500);
        assert_eq!(sig.samples[1], (37 - 1000) as f64 / 32768.0);
    }

    #[test]
    fn rejects_stereo_and_float() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        write(&p, spec, 100);
        assert!(matches!(read_wav(&p).unwrap_err().root(), Error::UnsupportedAudio(_)));
        let p = dir.path().join("f.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        write(&p, spec, 100);
        assert!(matches!(read_wav(&p).unwrap_err().root(), Error::UnsupportedAudio(_)));
    }
}
