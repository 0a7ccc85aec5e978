//! The full experiment: extract, split, train, encode, trials, score, eval.
//!
//! Output layout under `out_dir`:
//!
//! ```text
//! features/            corpus directory (feature files + labels.csv)
//! trials.csv
//! models/<method>_seed<n>.ubsm
//! supervectors/<method>_seed<n>/<utterance>.ubsv
//! scores/<method>_<scoring>_seed<n>.csv
//! det/<method>_<scoring>_seed<n>.csv
//! report.csv           one row per (method, scoring, seed)
//! summary.csv          mean and standard deviation per (method, scoring)
//! ttests.csv           Welch tests between every pair of summary rows
//! subset.csv           only when subset.counts is set
//! report.txt
//! ```
//!
//! Each file (or directory, for features and supervectors) has a `.meta`
//! sidecar holding the config hash and seed list.

mod config;

pub use config::{parse_seeds, InputKind, Method, RunConfig};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::{Corpus, Split, Utterance};
use crate::error::{Error, Result};
use crate::eval::{
    compute_eer, corpus_trials, det_points, mean, score_records, score_trials, std_dev, subset_study, t_test,
    write_det, write_scores, write_trials, SystemSpec, TTest,
};
use crate::features::{extract_utterance, read_wav, MfccExtractor};
use crate::model::BackgroundModel;
use crate::scoring::ScoringMethod;
use crate::synth::{synth_corpus, SynthSpec};

/// EER of one (method, scoring, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub method: Method,
    pub scoring: ScoringMethod,
    pub seed: u64,
    pub eer: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub scoring: ScoringMethod,
    pub eers: Vec<f64>,
    pub mean_eer: f64,
    pub std_eer: f64,
}

impl MethodSummary {
    pub fn label(&self) -> String {
        format!("{}/{}", self.method.name(), self.scoring.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub target_trials: usize,
    pub imposter_trials: usize,
    pub runs: Vec<RunRecord>,
    pub summaries: Vec<MethodSummary>,
    /// Empty when fewer than two seeds were run.
    pub comparisons: Vec<Comparison>,
}

impl RunConfig {
    fn system(&self, method: Method) -> SystemSpec {
        match method {
            Method::Ubsc => SystemSpec::Ubsc { k: self.ubsc_k, n_models: self.ubsc_v },
            Method::Gmm => {
                SystemSpec::Gmm { components: self.gmm_m, iterations: self.gmm_iters, floor_scale: self.gmm_floor }
            }
        }
    }
}

struct Outputs {
    root: PathBuf,
    meta: String,
}

impl Outputs {
    fn dir(&self, name: &str) -> Result<PathBuf> {
        let d = self.root.join(name);
        std::fs::create_dir_all(&d).map_err(|e| Error::from(e).in_file(&d))?;
        Ok(d)
    }

    /// Writes the `.meta` sidecar of `path`.
    fn sidecar(&self, path: &Path) -> Result<()> {
        let mut name = path.as_os_str().to_owned();
        name.push(".meta");
        let side = PathBuf::from(name);
        std::fs::write(&side, &self.meta).map_err(|e| Error::from(e).in_file(side))
    }

    fn text(&self, name: &str, body: &str) -> Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, body).map_err(|e| Error::from(e).in_file(&path))?;
        self.sidecar(&path)
    }
}

/// Reads `<dir>/<speaker>/*.wav` (both levels sorted by name) and extracts
/// features. Utterance ids are `<speaker>_<file stem>`.
pub fn load_wav_corpus(dir: &Path, extractor: &MfccExtractor) -> Result<Corpus> {
    let sorted_entries = |d: &Path| -> Result<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> = std::fs::read_dir(d)
            .map_err(|e| Error::from(e).in_file(d))?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::from(e).in_file(d))?;
        v.sort();
        Ok(v)
    };
    let mut jobs = Vec::new();
    for spk_dir in sorted_entries(dir)?.into_iter().filter(|p| p.is_dir()) {
        let speaker = spk_dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        for wav in sorted_entries(&spk_dir)? {
            if wav.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
                let stem = wav.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                jobs.push((format!("{speaker}_{stem}"), speaker.clone(), wav));
            }
        }
    }
    if jobs.is_empty() {
        return Err(Error::Format("no <speaker>/*.wav files found".into()).in_file(dir));
    }
    let utterances = jobs
        .into_par_iter()
        .map(|(id, speaker, path)| {
            let signal = read_wav(&path)?;
            let features = extract_utterance(&signal, extractor).map_err(|e| e.in_file(&path))?;
            Ok(Utterance { id, speaker, split: Split::Unused, features })
        })
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(utterances)
}

/// Builds the corpus described by `config`, with splits assigned.
pub fn load_corpus(config: &RunConfig) -> Result<Corpus> {
    let mut corpus = match config.input {
        InputKind::Synth => synth_corpus(&SynthSpec {
            train_utts: config.train_utts,
            test_utts: config.test_utts,
            ..config.synth.clone()
        })?,
        InputKind::Features => Corpus::read_dir(config.input_dir.as_deref().unwrap_or(Path::new(".")))?,
        InputKind::Wav => {
            let ex = MfccExtractor::new(config.mfcc.clone())?;
            load_wav_corpus(config.input_dir.as_deref().unwrap_or(Path::new(".")), &ex)?
        }
    };
    if !config.speaker_prefix.is_empty() {
        corpus = corpus.filter_prefix(&config.speaker_prefix);
    }
    if corpus.is_empty() {
        return Err(Error::Format("no utterances left after loading and filtering".into()));
    }
    corpus.assign_split(config.train_utts, config.test_utts);
    Ok(corpus)
}

/// Runs every stage and writes all outputs under `config.out_dir`.
pub fn run_pipeline(config: &RunConfig) -> Result<EvalReport> {
    config.validate()?;
    let hash = config.hash();
    let out =
        Outputs { root: config.out_dir.clone(), meta: format!("config_hash={hash}\nseeds={}\n", join(&config.seeds)) };
    std::fs::create_dir_all(&out.root).map_err(|e| Error::from(e).in_file(&out.root))?;
    out.text("config.txt", &config.canonical())?;

    let corpus = load_corpus(config).map_err(|e| e.in_stage("extract"))?;
    let features_dir = out.root.join("features");
    corpus.write_dir(&features_dir).map_err(|e| e.in_stage("extract"))?;
    out.sidecar(&features_dir)?;

    let trials = corpus_trials(&corpus).map_err(|e| e.in_stage("trials"))?;
    let trials_path = out.root.join("trials.csv");
    write_trials(&trials_path, &trials).map_err(|e| e.in_stage("trials"))?;
    out.sidecar(&trials_path)?;
    let (target_trials, imposter_trials) = trials.counts();

    let train = corpus.train_features();
    let (models, vectors, scores, dets) =
        (out.dir("models")?, out.dir("supervectors")?, out.dir("scores")?, out.dir("det")?);
    let mut runs = Vec::new();
    for &method in &config.methods {
        let system = config.system(method);
        for &seed in &config.seeds {
            let tag = format!("{}_seed{seed}", method.name());
            let model = system.train(&train, seed).map_err(|e| e.in_stage(format!("train {tag}")))?;
            let model_path = models.join(format!("{tag}.ubsm"));
            model.write(&model_path).map_err(|e| e.in_stage("train"))?;
            out.sidecar(&model_path)?;

            let svs = encode_and_write(&corpus, &trials.utterances, &model, &vectors.join(&tag))
                .map_err(|e| e.in_stage(format!("encode {tag}")))?;
            out.sidecar(&vectors.join(&tag))?;

            for &scoring in &config.scoring {
                let name = format!("{}_{}_seed{seed}", method.name(), scoring.name());
                let labeled = score_trials(&trials, &svs, scoring).map_err(|e| e.in_stage(format!("score {name}")))?;
                let score_path = scores.join(format!("{name}.csv"));
                write_scores(&score_path, &score_records(&trials, &labeled)).map_err(|e| e.in_stage("score"))?;
                out.sidecar(&score_path)?;

                let eval = || -> Result<_> {
                    let points = det_points(&labeled)?;
                    let det_path = dets.join(format!("{name}.csv"));
                    write_det(&det_path, &points)?;
                    out.sidecar(&det_path)?;
                    compute_eer(&labeled)
                };
                let eer = eval().map_err(|e| e.in_stage(format!("eval {name}")))?;
                runs.push(RunRecord { method, scoring, seed, eer: eer.eer, threshold: eer.threshold });
            }
        }
    }

    let summaries = summarize(config, &runs);
    let comparisons = if config.seeds.len() >= 2 { compare(&summaries, config.alpha)? } else { Vec::new() };
    let report = EvalReport {
        config_hash: hash,
        seeds: config.seeds.clone(),
        target_trials,
        imposter_trials,
        runs,
        summaries,
        comparisons,
    };
    write_report(&out, &report)?;

    if !config.subset_counts.is_empty() {
        let methods: Vec<_> =
            config.methods.iter().flat_map(|&m| config.scoring.iter().map(move |&s| (config.system(m), s))).collect();
        let rows =
            subset_study(&corpus, &config.subset_counts, &methods, &config.seeds).map_err(|e| e.in_stage("subset"))?;
        let mut csv = String::from("speakers,method,scoring,mean_eer,std_eer,eers\n");
        for r in &rows {
            let s = &r.summary;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                r.speakers,
                s.system.method(),
                s.scoring.name(),
                s.mean_eer,
                s.std_eer,
                s.eers.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ")
            );
        }
        out.text("subset.csv", &csv)?;
    }
    Ok(report)
}

fn encode_and_write(
    corpus: &Corpus,
    ids: &[String],
    model: &BackgroundModel,
    dir: &Path,
) -> Result<Vec<crate::supervector::Supervector>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
    let lookup: std::collections::HashMap<&str, &Utterance> =
        corpus.utterances.iter().map(|u| (u.id.as_str(), u)).collect();
    ids.par_iter()
        .map(|id| {
            let u = lookup[id.as_str()];
            let sv = model.supervector(&u.features).map_err(|e| e.in_stage(format!("utterance {id}")))?;
            sv.write(&dir.join(format!("{id}.ubsv")))?;
            Ok(sv)
        })
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn summarize(config: &RunConfig, runs: &[RunRecord]) -> Vec<MethodSummary> {
    let mut out = Vec::new();
    for &method in &config.methods {
        for &scoring in &config.scoring {
            let eers: Vec<f64> =
                runs.iter().filter(|r| r.method == method && r.scoring == scoring).map(|r| r.eer).collect();
            out.push(MethodSummary { method, scoring, mean_eer: mean(&eers), std_eer: std_dev(&eers), eers });
        }
    }
    out
}

fn compare(summaries: &[MethodSummary], alpha: f64) -> Result<Vec<Comparison>> {
    let mut out = Vec::new();
    for (i, a) in summaries.iter().enumerate() {
        for b in &summaries[i + 1..] {
            let test = t_test(&a.eers, &b.eers, alpha).map_err(|e| e.in_stage("eval"))?;
            out.push(Comparison { a: a.label(), b: b.label(), test });
        }
    }
    Ok(out)
}

fn write_report(out: &Outputs, report: &EvalReport) -> Result<()> {
    let mut runs = String::from("method,scoring,seed,eer,threshold\n");
    for r in &report.runs {
        let _ = writeln!(runs, "{},{},{},{},{}", r.method.name(), r.scoring.name(), r.seed, r.eer, r.threshold);
    }
    out.text("report.csv", &runs)?;

    let mut summary = String::from("method,scoring,runs,mean_eer,std_eer\n");
    for s in &report.summaries {
        let _ =
            writeln!(summary, "{},{},{},{},{}", s.method.name(), s.scoring.name(), s.eers.len(), s.mean_eer, s.std_eer);
    }
    out.text("summary.csv", &summary)?;

    let mut tt = String::from("a,b,t,df,p_value,reject\n");
    for c in &report.comparisons {
        let _ = writeln!(tt, "{},{},{},{},{},{}", c.a, c.b, c.test.t, c.test.df, c.test.p_value, c.test.reject);
    }
    out.text("ttests.csv", &tt)?;

    let mut txt = String::new();
    let _ = writeln!(txt, "config hash: {}", report.config_hash);
    let _ = writeln!(txt, "seeds: {}", join(&report.seeds));
    let _ = writeln!(txt, "trials: {} target, {} imposter", report.target_trials, report.imposter_trials);
    let _ = writeln!(txt);
    let _ = writeln!(txt, "{:<16} {:>10} {:>10}", "system", "mean EER%", "std EER%");
    for s in &report.summaries {
        let _ = writeln!(txt, "{:<16} {:>10.3} {:>10.3}", s.label(), 100.0 * s.mean_eer, 100.0 * s.std_eer);
    }
    if !report.comparisons.is_empty() {
        let _ = writeln!(txt);
        let _ = writeln!(txt, "Welch t-tests on per-run EER:");
        for c in &report.comparisons {
            let verdict = if c.test.reject { "differ" } else { "no significant difference" };
            let _ = writeln!(txt, "  {} vs {}: t = {:.4}, p = {:.4} ({verdict})", c.a, c.b, c.test.t, c.test.p_value);
        }
    }
    out.text("report.txt", &txt)
}
