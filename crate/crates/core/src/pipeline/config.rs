//! `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key must be
//! known and may appear once; `--set key=value` overrides are applied after
//! the file and may replace file values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{FilterShape, MfccConfig};
use crate::gmm::DEFAULT_FLOOR_SCALE;
use crate::scoring::ScoringMethod;
use crate::synth::SynthSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    /// Generated corpus.
    Synth,
    /// Corpus directory of feature files with `labels.csv`.
    Features,
    /// `<input_dir>/<speaker>/<utterance>.wav`.
    Wav,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ubsc,
    Gmm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ubsc => "ubsc",
            Method::Gmm => "gmm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: InputKind,
    pub input_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub speaker_prefix: String,
    pub train_utts: usize,
    pub test_utts: usize,
    pub synth: SynthSpec,
    pub mfcc: MfccConfig,
    pub methods: Vec<Method>,
    pub ubsc_k: usize,
    pub ubsc_v: usize,
    pub gmm_m: usize,
    pub gmm_iters: usize,
    pub gmm_floor: f64,
    pub scoring: Vec<ScoringMethod>,
    pub seeds: Vec<u64>,
    pub alpha: f64,
    pub subset_counts: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: InputKind::Synth,
            input_dir: None,
            out_dir: PathBuf::from("run"),
            speaker_prefix: String::new(),
            train_utts: 8,
            test_utts: 2,
            synth: SynthSpec::default(),
            mfcc: MfccConfig::default(),
            methods: vec![Method::Ubsc, Method::Gmm],
            ubsc_k: 256,
            ubsc_v: 10,
            gmm_m: 64,
            gmm_iters: 10,
            gmm_floor: DEFAULT_FLOOR_SCALE,
            scoring: vec![ScoringMethod::Cosine, ScoringMethod::InnerProduct],
            seeds: vec![0],
            alpha: 0.05,
            subset_counts: Vec::new(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

fn list<T>(key: &str, v: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| item(s.trim()).map_err(|e| Error::Config(format!("{key}: {e}")))).collect()
}

/// Parses `a,b,c` or a half-open range `a..b`.
pub fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u64, u64) = (num("seeds", a.trim())?, num("seeds", b.trim())?);
        return Ok((a..b).collect());
    }
    list("seeds", v, |s| num("seeds", s))
}

fn format_list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn shape_name(s: FilterShape) -> &'static str {
    match s {
        FilterShape::Triangular => "triangular",
        FilterShape::Hamming => "hamming",
    }
}

impl RunConfig {
    /// Reads a config file and applies `overrides` on top.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut pairs = Vec::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| Error::from(e).in_file(p))?;
            let mut seen = BTreeMap::new();
            for (no, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
                let k = k.trim().to_string();
                if seen.insert(k.clone(), ()).is_some() {
                    return Err(Error::Config(format!("line {}: duplicate key {k}", no + 1)).in_file(p));
                }
                pairs.push((k, v.trim().to_string()));
            }
        }
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut cfg = RunConfig::default();
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "input" => {
                self.input = match v {
                    "synth" => InputKind::Synth,
                    "features" => InputKind::Features,
                    "wav" => InputKind::Wav,
                    _ => return Err(Error::Config(format!("input: expected synth, features or wav, got {v:?}"))),
                }
            }
            "input_dir" => self.input_dir = Some(PathBuf::from(v)),
            "out_dir" => self.out_dir = PathBuf::from(v),
            "speaker_prefix" => self.speaker_prefix = v.to_string(),
            "train_utts" => self.train_utts = num(key, v)?,
            "test_utts" => self.test_utts = num(key, v)?,
            "synth.speakers" => self.synth.speakers = num(key, v)?,
            "synth.utts" => self.synth.utts = num(key, v)?,
            "synth.frames" => self.synth.frames = num(key, v)?,
            "synth.dim" => self.synth.dim = num(key, v)?,
            "synth.between" => self.synth.between = num(key, v)?,
            "synth.within" => self.synth.within = num(key, v)?,
            "synth.channel" => self.synth.channel = num(key, v)?,
            "synth.mixture" => self.synth.mixture = num(key, v)?,
            "synth.seed" => self.synth.seed = num(key, v)?,
            "mfcc.sample_rate" => self.mfcc.sample_rate = num(key, v)?,
            "mfcc.frame_ms" => self.mfcc.frame_ms = num(key, v)?,
            "mfcc.shift_ms" => self.mfcc.shift_ms = num(key, v)?,
            "mfcc.fft_size" => self.mfcc.fft_size = num(key, v)?,
            "mfcc.n_filters" => self.mfcc.n_filters = num(key, v)?,
            "mfcc.n_ceps" => self.mfcc.n_ceps = num(key, v)?,
            "mfcc.low_hz" => self.mfcc.low_hz = num(key, v)?,
            "mfcc.high_hz" => self.mfcc.high_hz = num(key, v)?,
            "mfcc.filter_shape" => {
                self.mfcc.filter_shape = match v {
                    "triangular" => FilterShape::Triangular,
                    "hamming" => FilterShape::Hamming,
                    _ => return Err(Error::Config(format!("{key}: expected triangular or hamming, got {v:?}"))),
                }
            }
            "mfcc.lifter" => self.mfcc.lifter = boolean(key, v)?,
            "mfcc.energy_floor" => self.mfcc.energy_floor = num(key, v)?,
            "mfcc.energy_after_window" => self.mfcc.energy_after_window = boolean(key, v)?,
            "methods" => {
                self.methods = list(key, v, |s| match s {
                    "ubsc" => Ok(Method::Ubsc),
                    "gmm" => Ok(Method::Gmm),
                    _ => Err(Error::Config(format!("unknown method {s:?}"))),
                })?
            }
            "ubsc.k" => self.ubsc_k = num(key, v)?,
            "ubsc.V" => self.ubsc_v = num(key, v)?,
            "gmm.M" => self.gmm_m = num(key, v)?,
            "gmm.iters" => self.gmm_iters = num(key, v)?,
            "gmm.floor" => self.gmm_floor = num(key, v)?,
            "scoring" => self.scoring = list(key, v, ScoringMethod::parse)?,
            "seeds" => self.seeds = parse_seeds(v)?,
            "alpha" => self.alpha = num(key, v)?,
            "subset.counts" => self.subset_counts = list(key, v, |s| num(key, s))?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.input != InputKind::Synth && self.input_dir.is_none() {
            return bad("input_dir is required unless input = synth".into());
        }
        if self.train_utts == 0 || self.test_utts == 0 {
            return bad("train_utts and test_utts must be at least 1".into());
        }
        if self.input == InputKind::Synth {
            self.synth.validate()?;
            if self.synth.utts < self.train_utts + self.test_utts {
                return bad(format!(
                    "synth.utts = {} is fewer than train_utts + test_utts = {}",
                    self.synth.utts,
                    self.train_utts + self.test_utts
                ));
            }
        }
        if self.input == InputKind::Wav {
            self.mfcc.validate()?;
        }
        if self.methods.is_empty() || self.scoring.is_empty() || self.seeds.is_empty() {
            return bad("methods, scoring and seeds must each list at least one entry".into());
        }
        if self.ubsc_k == 0 || self.ubsc_v == 0 || self.gmm_m == 0 {
            return bad("ubsc.k, ubsc.V and gmm.M must be at least 1".into());
        }
        if !(self.gmm_floor > 0.0 && self.gmm_floor.is_finite()) {
            return bad(format!("gmm.floor must be positive, got {}", self.gmm_floor));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return bad("seeds must be distinct".into());
        }
        if self.subset_counts.iter().any(|&c| c < 2) {
            return bad("subset.counts entries must be at least 2".into());
        }
        Ok(())
    }

    /// Every setting that influences results, one `key=value` per line in a
    /// fixed order. `out_dir` is left out so relocated runs hash the same.
    pub fn canonical(&self) -> String {
        let s = &self.synth;
        let m = &self.mfcc;
        let input = match self.input {
            InputKind::Synth => "synth",
            InputKind::Features => "features",
            InputKind::Wav => "wav",
        };
        let mut lines = vec![
            format!("input={input}"),
            format!("input_dir={}", self.input_dir.as_ref().map_or(String::new(), |p| p.display().to_string())),
            format!("speaker_prefix={}", self.speaker_prefix),
            format!("train_utts={}", self.train_utts),
            format!("test_utts={}", self.test_utts),
        ];
        if self.input == InputKind::Synth {
            lines.extend([
                format!("synth.speakers={}", s.speakers),
                format!("synth.utts={}", s.utts),
                format!("synth.frames={}", s.frames),
                format!("synth.dim={}", s.dim),
                format!("synth.between={:?}", s.between),
                format!("synth.within={:?}", s.within),
                format!("synth.channel={:?}", s.channel),
                format!("synth.mixture={}", s.mixture),
                format!("synth.seed={}", s.seed),
            ]);
        }
        if self.input == InputKind::Wav {
            lines.extend([
                format!("mfcc.sample_rate={}", m.sample_rate),
                format!("mfcc.frame_ms={:?}", m.frame_ms),
                format!("mfcc.shift_ms={:?}", m.shift_ms),
                format!("mfcc.fft_size={}", m.fft_size),
                format!("mfcc.n_filters={}", m.n_filters),
                format!("mfcc.n_ceps={}", m.n_ceps),
                format!("mfcc.low_hz={:?}", m.low_hz),
                format!("mfcc.high_hz={:?}", m.high_hz),
                format!("mfcc.filter_shape={}", shape_name(m.filter_shape)),
                format!("mfcc.lifter={}", m.lifter),
                format!("mfcc.energy_floor={:?}", m.energy_floor),
                format!("mfcc.energy_after_window={}", m.energy_after_window),
            ]);
        }
        lines.extend([
            format!("methods={}", self.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")),
            format!("ubsc.k={}", self.ubsc_k),
            format!("ubsc.V={}", self.ubsc_v),
            format!("gmm.M={}", self.gmm_m),
            format!("gmm.iters={}", self.gmm_iters),
            format!("gmm.floor={:?}", self.gmm_floor),
            format!("scoring={}", self.scoring.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")),
            format!("seeds={}", format_list(&self.seeds)),
            format!("alpha={:?}", self.alpha),
            format!("subset.counts={}", format_list(&self.subset_counts)),
        ]);
        lines.iter().fold(String::new(), |mut acc, l| {
            let _ = writeln!(acc, "{l}");
            acc
        })
    }

    /// SHA-256 of [`RunConfig::canonical`], lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().fold(String::new(), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        })
    }
}
