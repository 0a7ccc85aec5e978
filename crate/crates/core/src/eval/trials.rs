//! Verification trials over held-out test utterances.
//!
//! Every ordered pair of distinct test utterances is a trial: a target trial
//! when both come from the same speaker, an imposter trial otherwise. With
//! `S` speakers holding `t` test utterances each this gives `S * t * (t - 1)`
//! target and `S * t * (S - 1) * t` imposter trials.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trial {
    /// Index into [`TrialSet::utterances`].
    pub enroll: usize,
    pub test: usize,
    pub target: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialSet {
    pub utterances: Vec<String>,
    /// Speaker of each utterance.
    pub speakers: Vec<String>,
    pub trials: Vec<Trial>,
}

impl TrialSet {
    pub fn counts(&self) -> (usize, usize) {
        let targets = self.trials.iter().filter(|t| t.target).count();
        (targets, self.trials.len() - targets)
    }
}

/// Closed-form (target, imposter) counts for `s` speakers with `t` tests each.
pub fn trial_counts(s: usize, t: usize) -> (usize, usize) {
    (s * t * t.saturating_sub(1), s * t * s.saturating_sub(1) * t)
}

/// Builds all ordered trials from `(utterance_id, speaker_id)` pairs.
/// Every speaker must contribute the same number of test utterances.
pub fn generate_trials(tests: &[(String, String)]) -> Result<TrialSet> {
    let mut per_speaker: Vec<(String, usize)> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (_, spk) in tests {
        let i = *index.entry(spk.as_str()).or_insert_with(|| {
            per_speaker.push((spk.clone(), 0));
            per_speaker.len() - 1
        });
        per_speaker[i].1 += 1;
    }
    let t = per_speaker.first().map_or(0, |p| p.1);
    if t < 1 {
        return Err(Error::Format("each speaker needs at least one test utterance".into()));
    }
    if let Some((spk, n)) = per_speaker.iter().find(|p| p.1 != t) {
        return Err(Error::Format(format!("speaker {spk} has {n} test utterances, expected {t} like the others")));
    }
    if per_speaker.len() < 2 {
        return Err(Error::NoImposters(per_speaker.len()));
    }

    let n = tests.len();
    let mut trials = Vec::with_capacity(n * (n - 1));
    for e in 0..n {
        for q in 0..n {
            if e != q {
                trials.push(Trial { enroll: e, test: q, target: tests[e].1 == tests[q].1 });
            }
        }
    }
    Ok(TrialSet {
        utterances: tests.iter().map(|(u, _)| u.clone()).collect(),
        speakers: tests.iter().map(|(_, s)| s.clone()).collect(),
        trials,
    })
}

pub fn label_name(target: bool) -> &'static str {
    if target {
        "target"
    } else {
        "imposter"
    }
}

pub fn parse_label(s: &str) -> Result<bool> {
    match s {
        "target" => Ok(true),
        "imposter" => Ok(false),
        other => Err(Error::Format(format!("unknown trial label {other:?}"))),
    }
}

/// Writes `enroll_id,test_id,label`.
pub fn write_trials(path: &Path, set: &TrialSet) -> Result<()> {
    let inner = || -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["enroll_id", "test_id", "label"])?;
        for t in &set.trials {
            w.write_record([&set.utterances[t.enroll], &set.utterances[t.test], label_name(t.target)])?;
        }
        w.flush()?;
        Ok(())
    };
    inner().map_err(|e| e.in_file(path))
}

/// A trial as listed in a trials file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub enroll: String,
    pub test: String,
    pub target: bool,
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    let inner = || -> Result<Vec<TrialRecord>> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["enroll_id", "test_id", "label"] {
            return Err(Error::Format(format!("unexpected trials header {headers:?}")));
        }
        r.records()
            .map(|rec| {
                let rec = rec?;
                Ok(TrialRecord { enroll: rec[0].to_string(), test: rec[1].to_string(), target: parse_label(&rec[2])? })
            })
            .collect()
    };
    inner().map_err(|e| e.in_file(path))
}
