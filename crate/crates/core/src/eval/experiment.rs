//! Repeated-run experiments: train, encode, score and evaluate a system over
//! a list of seeds, across parameter grids and speaker subsets.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::det::{compute_eer, LabeledScore};
use super::stats::{mean, std_dev};
use super::trials::{generate_trials, TrialSet};
use crate::corpus::{Corpus, Split};
use crate::error::{Error, Result};
use crate::features::UtteranceFeatures;
use crate::gmm;
use crate::model::BackgroundModel;
use crate::scoring::{score, ScoringMethod};
use crate::supervector::Supervector;
use crate::ubsc;

/// A background model configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemSpec {
    Ubsc { k: usize, n_models: usize },
    Gmm { components: usize, iterations: usize, floor_scale: f64 },
}

impl SystemSpec {
    pub fn label(&self) -> String {
        match self {
            SystemSpec::Ubsc { k, n_models } => format!("ubsc_k{k}_V{n_models}"),
            SystemSpec::Gmm { components, iterations, .. } => format!("gmm_M{components}_it{iterations}"),
        }
    }

    pub fn method(&self) -> &'static str {
        match self {
            SystemSpec::Ubsc { .. } => "ubsc",
            SystemSpec::Gmm { .. } => "gmm",
        }
    }

    /// Every (k, V) combination, k varying fastest within each V.
    pub fn ubsc_grid(ks: &[usize], vs: &[usize]) -> Vec<SystemSpec> {
        vs.iter().flat_map(|&v| ks.iter().map(move |&k| SystemSpec::Ubsc { k, n_models: v })).collect()
    }

    pub fn gmm_grid(ms: &[usize], iters: &[usize], floor_scale: f64) -> Vec<SystemSpec> {
        iters
            .iter()
            .flat_map(|&it| ms.iter().map(move |&m| SystemSpec::Gmm { components: m, iterations: it, floor_scale }))
            .collect()
    }

    /// Trains on the corpus's training utterances.
    pub fn train(&self, train: &[UtteranceFeatures], seed: u64) -> Result<BackgroundModel> {
        match *self {
            SystemSpec::Ubsc { k, n_models } => {
                let pool = UtteranceFeatures::stack(train)?;
                Ok(BackgroundModel::Ubsc(ubsc::train_ubsc(&pool, k, n_models, seed)?))
            }
            SystemSpec::Gmm { components, iterations, floor_scale } => {
                Ok(BackgroundModel::Gmm(gmm::train_gmm(train, components, iterations, seed, floor_scale)?))
            }
        }
    }
}

/// Trials over the corpus's test utterances.
pub fn corpus_trials(corpus: &Corpus) -> Result<TrialSet> {
    let tests: Vec<(String, String)> =
        corpus.with_split(Split::Test).map(|u| (u.id.clone(), u.speaker.clone())).collect();
    generate_trials(&tests)
}

/// Encodes every utterance named in the trial set.
pub fn encode_trial_utterances(
    corpus: &Corpus,
    trials: &TrialSet,
    model: &BackgroundModel,
) -> Result<Vec<Supervector>> {
    let by_id: HashMap<&str, &UtteranceFeatures> =
        corpus.utterances.iter().map(|u| (u.id.as_str(), &u.features)).collect();
    trials
        .utterances
        .par_iter()
        .map(|id| {
            let feats =
                by_id.get(id.as_str()).ok_or_else(|| Error::Format(format!("trial utterance {id} not in corpus")))?;
            model.supervector(feats).map_err(|e| e.in_stage(format!("encoding {id}")))
        })
        .collect()
}

/// Scores every trial; output order follows the trial list.
pub fn score_trials(trials: &TrialSet, vectors: &[Supervector], method: ScoringMethod) -> Result<Vec<LabeledScore>> {
    trials
        .trials
        .par_iter()
        .map(|t| {
            let s = score(&vectors[t.enroll], &vectors[t.test], method)?;
            Ok(LabeledScore { score: s.value, target: t.target })
        })
        .collect()
}

/// EERs of one system for each scoring method, for a single seed.
pub fn evaluate_seed(
    corpus: &Corpus,
    trials: &TrialSet,
    system: &SystemSpec,
    scorings: &[ScoringMethod],
    seed: u64,
) -> Result<Vec<f64>> {
    let model = system.train(&corpus.train_features(), seed).map_err(|e| e.in_stage("train"))?;
    let vectors = encode_trial_utterances(corpus, trials, &model).map_err(|e| e.in_stage("encode"))?;
    scorings
        .iter()
        .map(|&m| compute_eer(&score_trials(trials, &vectors, m)?).map(|e| e.eer))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("score"))
}

/// Mean and spread of one configuration over repeated runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub system: SystemSpec,
    pub scoring: ScoringMethod,
    pub seeds: Vec<u64>,
    pub eers: Vec<f64>,
    pub mean_eer: f64,
    pub std_eer: f64,
}

fn summarize(system: SystemSpec, scoring: ScoringMethod, seeds: &[u64], eers: Vec<f64>) -> RunSummary {
    RunSummary { system, scoring, seeds: seeds.to_vec(), mean_eer: mean(&eers), std_eer: std_dev(&eers), eers }
}

/// Runs each system once per seed; one summary per (system, scoring).
pub fn grid_search(
    corpus: &Corpus,
    systems: &[SystemSpec],
    scorings: &[ScoringMethod],
    seeds: &[u64],
) -> Result<Vec<RunSummary>> {
    if systems.is_empty() || scorings.is_empty() {
        return Err(Error::Config("grid needs at least one system and one scoring method".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("grid needs at least one run".into()));
    }
    let trials = corpus_trials(corpus)?;
    let mut rows = Vec::with_capacity(systems.len() * scorings.len());
    for system in systems {
        let mut per_scoring = vec![Vec::with_capacity(seeds.len()); scorings.len()];
        for &seed in seeds {
            let eers = evaluate_seed(corpus, &trials, system, scorings, seed)
                .map_err(|e| e.in_stage(format!("grid cell {} seed {seed}", system.label())))?;
            for (acc, e) in per_scoring.iter_mut().zip(eers) {
                acc.push(e);
            }
        }
        for (&scoring, eers) in scorings.iter().zip(per_scoring) {
            rows.push(summarize(*system, scoring, seeds, eers));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRow {
    pub speakers: usize,
    pub summary: RunSummary,
}

/// Draws `count` speakers at random.
pub fn draw_speakers(corpus: &Corpus, count: usize, seed: u64) -> Result<Vec<String>> {
    let all = corpus.speakers();
    if count > all.len() {
        return Err(Error::Config(format!("asked for {count} speakers, corpus has {}", all.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, all.len(), count).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| all[i].clone()).collect())
}

/// For each speaker count and seed, restricts the corpus to a random speaker
/// subset and reruns every method. One row per (count, method).
pub fn subset_study(
    corpus: &Corpus,
    counts: &[usize],
    methods: &[(SystemSpec, ScoringMethod)],
    seeds: &[u64],
) -> Result<Vec<SubsetRow>> {
    if seeds.is_empty() || methods.is_empty() {
        return Err(Error::Config("subset study needs at least one run and one method".into()));
    }
    let available = corpus.speakers().len();
    if let Some(&bad) = counts.iter().find(|&&c| c > available) {
        return Err(Error::Config(format!("asked for {bad} speakers, corpus has {available}")));
    }
    let mut rows = Vec::with_capacity(counts.len() * methods.len());
    for &count in counts {
        let mut eers = vec![Vec::with_capacity(seeds.len()); methods.len()];
        for &seed in seeds {
            let sub = corpus.restrict_to(&draw_speakers(corpus, count, seed)?);
            let trials = corpus_trials(&sub).map_err(|e| e.in_stage(format!("subset {count}")))?;
            for ((system, scoring), acc) in methods.iter().zip(eers.iter_mut()) {
                let e = evaluate_seed(&sub, &trials, system, &[*scoring], seed)
                    .map_err(|e| e.in_stage(format!("subset {count} {} seed {seed}", system.label())))?;
                acc.push(e[0]);
            }
        }
        for ((system, scoring), e) in methods.iter().zip(eers) {
            rows.push(SubsetRow { speakers: count, summary: summarize(*system, *scoring, seeds, e) });
        }
    }
    Ok(rows)
}
