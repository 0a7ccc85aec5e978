//! Labelled utterance collections and their on-disk layout.
//!
//! A corpus directory holds one `<utterance_id>.ubsf` feature file per
//! utterance plus `labels.csv` with columns
//! `utterance_id,speaker_id,split` (split is `train`, `test` or `unused`).

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{read_features, write_features, UtteranceFeatures};

pub const LABELS_FILE: &str = "labels.csv";
pub const FEATURE_EXT: &str = "ubsf";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
    Unused,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Unused => "unused",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "unused" => Ok(Split::Unused),
            other => Err(Error::Format(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub speaker: String,
    pub split: Split,
    pub features: UtteranceFeatures,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub utterances: Vec<Utterance>,
}

impl Corpus {
    pub fn new(utterances: Vec<Utterance>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for u in &utterances {
            if !seen.insert(u.id.as_str()) {
                return Err(Error::Format(format!("duplicate utterance id {:?}", u.id)));
            }
        }
        if let Some(first) = utterances.first() {
            let d = first.features.dim();
            if let Some(bad) = utterances.iter().find(|u| u.features.dim() != d) {
                return Err(Error::DimensionMismatch { expected: d, found: bad.features.dim() }
                    .in_stage(format!("utterance {}", bad.id)));
            }
        }
        Ok(Corpus { utterances })
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.utterances.first().map(|u| u.features.dim())
    }

    /// Speaker ids in order of first appearance.
    pub fn speakers(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.utterances.iter().filter(|u| seen.insert(u.speaker.as_str())).map(|u| u.speaker.clone()).collect()
    }

    /// Marks the first `train` utterances of each speaker (in corpus order)
    /// as training speech, the next `test` as test speech and the rest unused.
    pub fn assign_split(&mut self, train: usize, test: usize) {
        let mut seen: HashMap<String, usize> = HashMap::new();
        for u in &mut self.utterances {
            let n = seen.entry(u.speaker.clone()).or_default();
            u.split = if *n < train {
                Split::Train
            } else if *n < train + test {
                Split::Test
            } else {
                Split::Unused
            };
            *n += 1;
        }
    }

    pub fn with_split(&self, split: Split) -> impl Iterator<Item = &Utterance> {
        self.utterances.iter().filter(move |u| u.split == split)
    }

    /// Training utterances' feature matrices.
    pub fn train_features(&self) -> Vec<UtteranceFeatures> {
        self.with_split(Split::Train).map(|u| u.features.clone()).collect()
    }

    /// Keeps only utterances of the given speakers, preserving corpus order.
    pub fn restrict_to(&self, speakers: &[String]) -> Corpus {
        let keep: BTreeSet<&str> = speakers.iter().map(String::as_str).collect();
        Corpus { utterances: self.utterances.iter().filter(|u| keep.contains(u.speaker.as_str())).cloned().collect() }
    }

    /// Keeps speakers whose id starts with `prefix`.
    pub fn filter_prefix(&self, prefix: &str) -> Corpus {
        Corpus { utterances: self.utterances.iter().filter(|u| u.speaker.starts_with(prefix)).cloned().collect() }
    }

    /// Writes feature files and `labels.csv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
        for u in &self.utterances {
            write_features(&dir.join(format!("{}.{FEATURE_EXT}", u.id)), &u.features)?;
        }
        write_labels(&dir.join(LABELS_FILE), self)
    }

    /// Reads a corpus directory written by [`Corpus::write_dir`].
    pub fn read_dir(dir: &Path) -> Result<Corpus> {
        let labels = read_labels(&dir.join(LABELS_FILE))?;
        let mut utterances = Vec::with_capacity(labels.len());
        let mut dim = None;
        for (id, speaker, split) in labels {
            let features = read_features(&dir.join(format!("{id}.{FEATURE_EXT}")), dim)?;
            dim = Some(features.dim());
            utterances.push(Utterance { id, speaker, split, features });
        }
        Corpus::new(utterances)
    }
}

pub fn write_labels(path: &Path, corpus: &Corpus) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::from(e).in_file(path))?;
    w.write_record(["utterance_id", "speaker_id", "split"])?;
    for u in &corpus.utterances {
        w.write_record([u.id.as_str(), u.speaker.as_str(), u.split.name()])?;
    }
    w.flush().map_err(|e| Error::from(e).in_file(path))?;
    Ok(())
}

/// Rows of `labels.csv`, in file order.
pub fn read_labels(path: &Path) -> Result<Vec<(String, String, Split)>> {
    let inner = || -> Result<Vec<(String, String, Split)>> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["utterance_id", "speaker_id", "split"] {
            return Err(Error::Format(format!("unexpected labels header {headers:?}")));
        }
        let mut out = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            out.push((rec[0].to_string(), rec[1].to_string(), Split::parse(&rec[2])?));
        }
        Ok(out)
    };
    inner().map_err(|e| e.in_file(path))
}
