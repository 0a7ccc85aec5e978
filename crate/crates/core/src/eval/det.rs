//! Equal error rate and DET curve data.
//!
//! At threshold `θ` an imposter scoring `>= θ` is falsely accepted and a
//! target scoring `< θ` is falsely rejected. Thresholds are swept over the
//! distinct score values, plus a final point above every score where
//! FAR = 0 and FRR = 1. The EER is read off where FAR - FRR first drops to
//! zero or below, interpolating linearly between the two neighbouring sweep
//! points.

use std::io::Write;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledScore {
    pub score: f64,
    pub target: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eer {
    pub eer: f64,
    pub threshold: f64,
}

fn validate(scores: &[LabeledScore]) -> Result<(usize, usize)> {
    if scores.iter().any(|s| !s.score.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    let targets = scores.iter().filter(|s| s.target).count();
    let imposters = scores.len() - targets;
    if targets == 0 {
        return Err(Error::EmptyClass("no target scores"));
    }
    if imposters == 0 {
        return Err(Error::EmptyClass("no imposter scores"));
    }
    Ok((targets, imposters))
}

/// One point per distinct score value, in increasing threshold order.
pub fn det_points(scores: &[LabeledScore]) -> Result<Vec<DetPoint>> {
    let (n_tar, n_imp) = validate(scores)?;
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
    let mut points = Vec::new();
    // Counts of scores strictly below the current threshold.
    let mut tar_below = 0usize;
    let mut imp_below = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let theta = sorted[i].score;
        points.push(DetPoint {
            threshold: theta,
            far: (n_imp - imp_below) as f64 / n_imp as f64,
            frr: tar_below as f64 / n_tar as f64,
        });
        while i < sorted.len() && sorted[i].score == theta {
            if sorted[i].target {
                tar_below += 1;
            } else {
                imp_below += 1;
            }
            i += 1;
        }
    }
    Ok(points)
}

/// Locates the FAR = FRR crossing on a sweep that starts at FAR - FRR > 0.
pub(crate) fn crossing(points: &[DetPoint]) -> Eer {
    let terminal = DetPoint { threshold: f64::INFINITY, far: 0.0, frr: 1.0 };
    let at = |j: usize| if j < points.len() { points[j] } else { terminal };
    let mut j = 1;
    while j < points.len() && points[j].far - points[j].frr > 0.0 {
        j += 1;
    }
    let (a, b) = (at(j - 1), at(j));
    let db = b.far - b.frr;
    if db == 0.0 {
        return Eer { eer: b.far, threshold: b.threshold };
    }
    let da = a.far - a.frr;
    let t = da / (da - db);
    let far = a.far + t * (b.far - a.far);
    let frr = a.frr + t * (b.frr - a.frr);
    let threshold = if b.threshold.is_finite() { a.threshold + t * (b.threshold - a.threshold) } else { a.threshold };
    Eer { eer: 0.5 * (far + frr), threshold }
}

pub fn compute_eer(scores: &[LabeledScore]) -> Result<Eer> {
    Ok(crossing(&det_points(scores)?))
}

/// Standard normal quantile; infinite at 0 and 1.
pub fn probit(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        Normal::standard().inverse_cdf(p)
    }
}

/// Writes `threshold,far,frr,probit_far,probit_frr`.
pub fn write_det(path: &Path, points: &[DetPoint]) -> Result<()> {
    let inner = || -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "threshold,far,frr,probit_far,probit_frr")?;
        for p in points {
            writeln!(out, "{},{},{},{},{}", p.threshold, p.far, p.frr, probit(p.far), probit(p.frr))?;
        }
        out.flush()?;
        Ok(())
    };
    inner().map_err(|e| e.in_file(path))
}
