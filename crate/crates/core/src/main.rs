use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ubsc::corpus::{Corpus, Split};
use ubsc::eval::{
    compute_eer, corpus_trials, det_points, grid_search, read_scores, read_trials, subset_study, write_det,
    write_scores, write_trials, LabeledScore, SystemSpec,
};
use ubsc::features::{extract_utterance, read_wav, write_features, MfccConfig, MfccExtractor};
use ubsc::gmm::{train_gmm, DEFAULT_FLOOR_SCALE};
use ubsc::parallel::with_threads;
use ubsc::pipeline::{load_wav_corpus, parse_seeds, run_pipeline, RunConfig};
use ubsc::scoring::{score, ScoringMethod};
use ubsc::synth::{synth_corpus, SynthSpec};
use ubsc::ubsc::train_ubsc;
use ubsc::{BackgroundModel, Error, ErrorClass, Result, Supervector, UtteranceFeatures};

#[derive(Parser)]
#[command(name = "ubsc", version, about = "Speaker verification with UBSC and GMM-UBM supervectors")]
struct Cli {
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// MFCC features from one WAV file or a <speaker>/*.wav tree.
    Extract(ExtractArgs),
    /// Generate a synthetic corpus directory.
    Synth(SynthArgs),
    /// Train a UBSC background model on a corpus's training utterances.
    TrainUbsc(TrainUbscArgs),
    /// Train a diagonal GMM-UBM on a corpus's training utterances.
    TrainGmm(TrainGmmArgs),
    /// Encode utterances into supervectors.
    Encode(EncodeArgs),
    /// List all verification trials over the test utterances.
    Trials(TrialsArgs),
    /// Score a trial list.
    Score(ScoreArgs),
    /// EER (and optionally DET points) from a score file.
    Eval(EvalArgs),
    /// EER over a grid of model sizes, repeated over seeds.
    Grid(GridArgs),
    /// EER on random speaker subsets of several sizes.
    Subset(SubsetArgs),
    /// Full pipeline from a key=value config file.
    Run(RunArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// WAV file, or directory with one sub-directory per speaker.
    #[arg(long = "in")]
    input: PathBuf,
    /// Feature file (single input) or corpus directory.
    #[arg(long)]
    out: PathBuf,
    /// key=value file; mfcc.*, train_utts and test_utts are used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Switch off the cepstral lifter.
    #[arg(long)]
    no_lifter: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 30)]
    speakers: usize,
    #[arg(long, default_value_t = 10)]
    utts: usize,
    #[arg(long, default_value_t = 300)]
    frames: usize,
    #[arg(long, default_value_t = 20)]
    dim: usize,
    #[arg(long, default_value_t = SynthSpec::default().between)]
    between: f64,
    #[arg(long, default_value_t = 1.0)]
    within: f64,
    #[arg(long, default_value_t = 0.1)]
    channel: f64,
    #[arg(long, default_value_t = 1)]
    mixture: usize,
    #[arg(long, default_value_t = 8)]
    train: usize,
    #[arg(long, default_value_t = 2)]
    test: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainUbscArgs {
    #[arg(long = "features", alias = "corpus")]
    features: PathBuf,
    #[arg(long, default_value_t = 256)]
    k: usize,
    #[arg(long = "V", short = 'V', alias = "models", default_value_t = 10)]
    v: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainGmmArgs {
    #[arg(long = "features", alias = "corpus")]
    features: PathBuf,
    #[arg(long = "M", short = 'M', alias = "components", default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Variance floor relative to the pooled per-dimension variance.
    #[arg(long, default_value_t = DEFAULT_FLOOR_SCALE)]
    floor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "features", alias = "corpus")]
    features: PathBuf,
    /// Encode every utterance instead of only the test split.
    #[arg(long)]
    all: bool,
    /// Directory receiving one <utterance>.ubsv per utterance.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrialsArgs {
    #[arg(long = "features", alias = "corpus")]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    trials: PathBuf,
    /// Directory of <utterance>.ubsv files for the enrolment side.
    #[arg(long, required_unless_present = "vectors")]
    enroll: Option<PathBuf>,
    /// Directory of <utterance>.ubsv files for the test side.
    #[arg(long, required_unless_present = "vectors")]
    test: Option<PathBuf>,
    /// One directory serving both sides.
    #[arg(long, conflicts_with_all = ["enroll", "test"])]
    vectors: Option<PathBuf>,
    /// cosine or inner.
    #[arg(long, default_value = "cosine")]
    method: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    scores: PathBuf,
    /// Also write DET points here.
    #[arg(long)]
    det: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long = "features", alias = "corpus")]
    features: PathBuf,
    /// ubsc or gmm.
    #[arg(long, default_value = "ubsc")]
    system: String,
    /// UBSC codebook sizes.
    #[arg(long, value_delimiter = ',', default_value = "256")]
    k: Vec<usize>,
    /// UBSC model counts.
    #[arg(long = "V", short = 'V', alias = "models", value_delimiter = ',', default_value = "10")]
    v: Vec<usize>,
    #[arg(long = "M", short = 'M', alias = "components", value_delimiter = ',', default_value = "64")]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    iters: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_FLOOR_SCALE)]
    floor: f64,
    #[arg(long, value_delimiter = ',', default_value = "cosine")]
    scoring: Vec<String>,
    /// `a,b,c` or half-open `a..b`.
    #[arg(long = "seed-list", alias = "seeds", default_value = "0..10")]
    seeds: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SubsetArgs {
    #[arg(long = "features", alias = "corpus")]
    features: PathBuf,
    #[arg(long, value_delimiter = ',')]
    counts: Vec<usize>,
    #[arg(long, default_value_t = 256)]
    k: usize,
    #[arg(long = "V", short = 'V', alias = "models", default_value_t = 10)]
    v: usize,
    #[arg(long = "M", short = 'M', alias = "components", default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Methods to compare: any of ubsc, gmm.
    #[arg(long, value_delimiter = ',', default_value = "ubsc,gmm")]
    methods: Vec<String>,
    #[arg(long, default_value = "cosine")]
    scoring: String,
    /// `a,b,c` or half-open `a..b`.
    #[arg(long = "seed-list", alias = "seeds", default_value = "0..10")]
    seeds: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// key=value config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set ubsc.k=512.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Shorthand for --set out_dir=<dir>.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn extract(a: &ExtractArgs) -> Result<()> {
    let run = RunConfig::load(a.config.as_deref(), &[])?;
    let cfg = MfccConfig { lifter: run.mfcc.lifter && !a.no_lifter, ..run.mfcc };
    let ex = MfccExtractor::new(cfg)?;
    if a.input.is_file() {
        let feats = extract_utterance(&read_wav(&a.input)?, &ex).map_err(|e| e.in_file(&a.input))?;
        write_features(&a.out, &feats)?;
        println!("{} frames x {} dims -> {}", feats.n_frames(), feats.dim(), a.out.display());
    } else {
        let mut corpus = load_wav_corpus(&a.input, &ex)?;
        corpus.assign_split(run.train_utts, run.test_utts);
        corpus.write_dir(&a.out)?;
        println!("{} utterances from {} speakers -> {}", corpus.len(), corpus.speakers().len(), a.out.display());
    }
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        speakers: a.speakers,
        utts: a.utts,
        frames: a.frames,
        dim: a.dim,
        between: a.between,
        within: a.within,
        channel: a.channel,
        mixture: a.mixture,
        train_utts: a.train,
        test_utts: a.test,
        seed: a.seed,
    };
    let corpus = synth_corpus(&spec)?;
    corpus.write_dir(&a.out)?;
    println!("{} utterances -> {}", corpus.len(), a.out.display());
    Ok(())
}

fn training_features(corpus: &Path) -> Result<Vec<UtteranceFeatures>> {
    let c = Corpus::read_dir(corpus)?;
    let train = c.train_features();
    if train.is_empty() {
        return Err(Error::Format("corpus has no training utterances".into()).in_file(corpus));
    }
    Ok(train)
}

fn train_ubsc_cmd(a: &TrainUbscArgs) -> Result<()> {
    let pool = UtteranceFeatures::stack(&training_features(&a.features)?)?;
    let model = train_ubsc(&pool, a.k, a.v, a.seed)?;
    BackgroundModel::Ubsc(model).write(&a.out)
}

fn train_gmm_cmd(a: &TrainGmmArgs) -> Result<()> {
    let gmm = train_gmm(&training_features(&a.features)?, a.m, a.iters, a.seed, a.floor)?;
    BackgroundModel::Gmm(gmm).write(&a.out)
}

fn encode(a: &EncodeArgs) -> Result<()> {
    use rayon::prelude::*;
    let model = BackgroundModel::read(&a.model)?;
    let corpus = Corpus::read_dir(&a.features)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::from(e).in_file(&a.out))?;
    let chosen: Vec<_> = corpus.utterances.iter().filter(|u| a.all || u.split == Split::Test).collect();
    chosen.par_iter().try_for_each(|u| {
        let sv = model.supervector(&u.features).map_err(|e| e.in_stage(format!("utterance {}", u.id)))?;
        sv.write(&a.out.join(format!("{}.ubsv", u.id)))
    })?;
    println!("encoded {} utterances with the {} model", chosen.len(), model.kind().name());
    Ok(())
}

fn trials(a: &TrialsArgs) -> Result<()> {
    let set = corpus_trials(&Corpus::read_dir(&a.features)?)?;
    write_trials(&a.out, &set)?;
    let (t, i) = set.counts();
    println!("{t} target, {i} imposter trials");
    Ok(())
}

fn score_cmd(a: &ScoreArgs) -> Result<()> {
    use rayon::prelude::*;
    use std::collections::BTreeMap;
    let method = ScoringMethod::parse(&a.method)?;
    let records = read_trials(&a.trials)?;
    let enroll_dir = a.enroll.as_ref().or(a.vectors.as_ref()).expect("clap enforces a vector directory");
    let test_dir = a.test.as_ref().or(a.vectors.as_ref()).expect("clap enforces a vector directory");
    let load = |dir: &Path, side: Vec<&str>| -> Result<BTreeMap<String, Supervector>> {
        side.par_iter().map(|&id| Ok((id.to_string(), Supervector::read(&dir.join(format!("{id}.ubsv")))?))).collect()
    };
    let side = |f: fn(&ubsc::eval::TrialRecord) -> &str| {
        let mut v: Vec<&str> = records.iter().map(f).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let enrolled = load(enroll_dir, side(|r| r.enroll.as_str()))?;
    let tested = load(test_dir, side(|r| r.test.as_str()))?;
    let scored = records
        .par_iter()
        .map(|r| {
            let s = score(&enrolled[&r.enroll], &tested[&r.test], method)
                .map_err(|e| e.in_stage(format!("trial {} {}", r.enroll, r.test)))?;
            Ok(ubsc::eval::ScoreRecord {
                enroll: r.enroll.clone(),
                test: r.test.clone(),
                target: r.target,
                score: s.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_scores(&a.out, &scored)
}

fn eval_cmd(a: &EvalArgs) -> Result<()> {
    let labeled: Vec<LabeledScore> = read_scores(&a.scores)?.iter().map(|r| r.labeled()).collect();
    let eer = compute_eer(&labeled)?;
    if let Some(det) = &a.det {
        write_det(det, &det_points(&labeled)?)?;
    }
    println!("EER {:.4}% at threshold {}", 100.0 * eer.eer, eer.threshold);
    Ok(())
}

fn scorings(names: &[String]) -> Result<Vec<ScoringMethod>> {
    names.iter().map(|s| ScoringMethod::parse(s)).collect()
}

fn grid(a: &GridArgs) -> Result<()> {
    let corpus = Corpus::read_dir(&a.features)?;
    let systems = match a.system.as_str() {
        "ubsc" => SystemSpec::ubsc_grid(&a.k, &a.v),
        "gmm" => SystemSpec::gmm_grid(&a.m, &a.iters, a.floor),
        other => return Err(Error::Config(format!("unknown system {other:?}"))),
    };
    let rows = grid_search(&corpus, &systems, &scorings(&a.scoring)?, &parse_seeds(&a.seeds)?)?;
    let mut w = csv::Writer::from_path(&a.out).map_err(|e| Error::from(e).in_file(&a.out))?;
    w.write_record(["system", "scoring", "runs", "mean_eer", "std_eer"])?;
    for r in &rows {
        w.write_record([
            r.system.label(),
            r.scoring.name().to_string(),
            r.eers.len().to_string(),
            r.mean_eer.to_string(),
            r.std_eer.to_string(),
        ])?;
        println!(
            "{:<20} {:<7} {:>8.3}% +- {:.3}",
            r.system.label(),
            r.scoring.name(),
            100.0 * r.mean_eer,
            100.0 * r.std_eer
        );
    }
    w.flush().map_err(|e| Error::from(e).in_file(&a.out))?;
    Ok(())
}

fn subset(a: &SubsetArgs) -> Result<()> {
    let corpus = Corpus::read_dir(&a.features)?;
    let scoring = ScoringMethod::parse(&a.scoring)?;
    let methods = a
        .methods
        .iter()
        .map(|m| match m.as_str() {
            "ubsc" => Ok((SystemSpec::Ubsc { k: a.k, n_models: a.v }, scoring)),
            "gmm" => Ok((
                SystemSpec::Gmm { components: a.m, iterations: a.iters, floor_scale: DEFAULT_FLOOR_SCALE },
                scoring,
            )),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = subset_study(&corpus, &a.counts, &methods, &parse_seeds(&a.seeds)?)?;
    let mut w = csv::Writer::from_path(&a.out).map_err(|e| Error::from(e).in_file(&a.out))?;
    w.write_record(["speakers", "system", "scoring", "runs", "mean_eer", "std_eer"])?;
    for r in &rows {
        let s = &r.summary;
        w.write_record([
            r.speakers.to_string(),
            s.system.label(),
            s.scoring.name().to_string(),
            s.eers.len().to_string(),
            s.mean_eer.to_string(),
            s.std_eer.to_string(),
        ])?;
        println!(
            "{:>4} speakers {:<20} {:>8.3}% +- {:.3}",
            r.speakers,
            s.system.label(),
            100.0 * s.mean_eer,
            100.0 * s.std_eer
        );
    }
    w.flush().map_err(|e| Error::from(e).in_file(&a.out))?;
    Ok(())
}

fn run(a: &RunArgs) -> Result<()> {
    let mut overrides = a.overrides.clone();
    if let Some(dir) = &a.out_dir {
        overrides.push(format!("out_dir={}", dir.display()));
    }
    let cfg = RunConfig::load(a.config.as_deref(), &overrides)?;
    run_pipeline(&cfg)?;
    print!("{}", std::fs::read_to_string(cfg.out_dir.join("report.txt")).unwrap_or_default());
    Ok(())
}

fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Extract(a) => extract(a),
        Command::Synth(a) => synth(a),
        Command::TrainUbsc(a) => train_ubsc_cmd(a),
        Command::TrainGmm(a) => train_gmm_cmd(a),
        Command::Encode(a) => encode(a),
        Command::Trials(a) => trials(a),
        Command::Score(a) => score_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Grid(a) => grid(a),
        Command::Subset(a) => subset(a),
        Command::Run(a) => run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = with_threads(cli.threads, || dispatch(&cli.command)).and_then(|r| r);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Data => 3,
                ErrorClass::Numeric => 4,
            })
        }
    }
}
