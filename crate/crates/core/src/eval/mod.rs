//! Trial lists, scoring runs, error rates and significance tests.

pub mod det;
pub mod experiment;
pub mod stats;
pub mod trials;

use std::path::Path;

pub use det::{compute_eer, det_points, probit, write_det, DetPoint, Eer, LabeledScore};
pub use experiment::{
    corpus_trials, draw_speakers, encode_trial_utterances, evaluate_seed, grid_search, score_trials, subset_study,
    RunSummary, SubsetRow, SystemSpec,
};
pub use stats::{mean, std_dev, t_test, TTest, DEFAULT_ALPHA};
pub use trials::{generate_trials, read_trials, trial_counts, write_trials, Trial, TrialRecord, TrialSet};

use crate::error::{Error, Result};

/// A scored trial as stored in a score file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub enroll: String,
    pub test: String,
    pub target: bool,
    pub score: f64,
}

impl ScoreRecord {
    pub fn labeled(&self) -> LabeledScore {
        LabeledScore { score: self.score, target: self.target }
    }
}

/// Pairs scores with the trials they came from.
pub fn score_records(set: &TrialSet, scores: &[LabeledScore]) -> Vec<ScoreRecord> {
    set.trials
        .iter()
        .zip(scores)
        .map(|(t, s)| ScoreRecord {
            enroll: set.utterances[t.enroll].clone(),
            test: set.utterances[t.test].clone(),
            target: t.target,
            score: s.score,
        })
        .collect()
}

/// Writes `enroll_id,test_id,label,score`. Scores use the shortest decimal
/// form that reads back to the same `f64`.
pub fn write_scores(path: &Path, records: &[ScoreRecord]) -> Result<()> {
    let inner = || -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["enroll_id", "test_id", "label", "score"])?;
        for r in records {
            w.write_record([
                r.enroll.as_str(),
                r.test.as_str(),
                trials::label_name(r.target),
                &format!("{}", r.score),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    inner().map_err(|e| e.in_file(path))
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    let inner = || -> Result<Vec<ScoreRecord>> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["enroll_id", "test_id", "label", "score"] {
            return Err(Error::Format(format!("unexpected score file header {headers:?}")));
        }
        r.records()
            .map(|rec| {
                let rec = rec?;
                let score: f64 = rec[3].parse().map_err(|_| Error::Format(format!("bad score {:?}", &rec[3])))?;
                if !score.is_finite() {
                    return Err(Error::NonFinite("score file"));
                }
                Ok(ScoreRecord {
                    enroll: rec[0].to_string(),
                    test: rec[1].to_string(),
                    target: trials::parse_label(&rec[2])?,
                    score,
                })
            })
            .collect()
    };
    inner().map_err(|e| e.in_file(path))
}
