//! Synthetic speaker corpora with controllable separability.
//!
//! Each speaker has a mean drawn from an isotropic Gaussian, each utterance
//! adds its own channel offset, and frames scatter around the result. With
//! `mixture > 1` each speaker instead owns several sub-centres and every
//! frame picks one at random, which gives non-Gaussian speaker densities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{Corpus, Split, Utterance};
use crate::error::{Error, Result};
use crate::features::UtteranceFeatures;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub speakers: usize,
    pub utts: usize,
    pub frames: usize,
    pub dim: usize,
    /// Spread of speaker means.
    pub between: f64,
    /// Spread of frames around their utterance centre.
    pub within: f64,
    /// Spread of per-utterance offsets.
    pub channel: f64,
    /// Sub-centres per speaker; 1 gives a single Gaussian.
    pub mixture: usize,
    pub train_utts: usize,
    pub test_utts: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            speakers: 30,
            utts: 10,
            frames: 300,
            dim: 20,
            between: 0.2,
            within: 1.0,
            channel: 0.1,
            mixture: 1,
            train_utts: 8,
            test_utts: 2,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.speakers == 0 || self.utts == 0 || self.frames == 0 || self.dim == 0 || self.mixture == 0 {
            return Err(Error::Config("synthetic corpus counts must all be at least 1".into()));
        }
        for (v, name) in [(self.between, "between"), (self.within, "within"), (self.channel, "channel")] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("synthetic spread {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// A generated corpus together with the parameters it was drawn from.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub corpus: Corpus,
    /// Per speaker, `dim` values.
    pub speaker_means: Vec<Vec<f64>>,
    /// Per utterance, in corpus order.
    pub channel_offsets: Vec<Vec<f64>>,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, sd: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect()
}

pub fn synthesize(spec: &SynthSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.dim;
    let mut utterances = Vec::with_capacity(spec.speakers * spec.utts);
    let mut speaker_means = Vec::with_capacity(spec.speakers);
    let mut channel_offsets = Vec::with_capacity(spec.speakers * spec.utts);
    for s in 0..spec.speakers {
        let mean = gaussian(&mut rng, d, spec.between);
        let subs: Vec<Vec<f64>> = if spec.mixture == 1 {
            vec![mean.clone()]
        } else {
            (0..spec.mixture)
                .map(|_| gaussian(&mut rng, d, 2.0 * spec.within).iter().zip(&mean).map(|(a, b)| a + b).collect())
                .collect()
        };
        for u in 0..spec.utts {
            let offset = gaussian(&mut rng, d, spec.channel);
            let mut data = Vec::with_capacity(spec.frames * d);
            for _ in 0..spec.frames {
                let centre = &subs[if subs.len() == 1 { 0 } else { rng.random_range(0..subs.len()) }];
                for t in 0..d {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    data.push((centre[t] + offset[t] + spec.within * noise) as f32);
                }
            }
            utterances.push(Utterance {
                id: format!("spk{s:04}_u{u:03}"),
                speaker: format!("spk{s:04}"),
                split: Split::Unused,
                features: UtteranceFeatures::from_vec(data, d)?,
            });
            channel_offsets.push(offset);
        }
        speaker_means.push(mean);
    }
    let mut corpus = Corpus::new(utterances)?;
    corpus.assign_split(spec.train_utts, spec.test_utts);
    Ok(Synthetic { corpus, speaker_means, channel_offsets })
}

pub fn synth_corpus(spec: &SynthSpec) -> Result<Corpus> {
    Ok(synthesize(spec)?.corpus)
}
