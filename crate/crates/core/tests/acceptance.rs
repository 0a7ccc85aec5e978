//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.
//!
//! Tests hold a shared lock so that wall-clock limits are measured without
//! other criteria competing for the same cores.

use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use ubsc::eval::{
    compute_eer, corpus_trials, evaluate_seed, generate_trials, score_trials, t_test, LabeledScore, SystemSpec,
};
use ubsc::gmm::{em_fit, init_gmm, train_gmm, VarianceFloor, DEFAULT_FLOOR_SCALE};
use ubsc::parallel::with_threads;
use ubsc::scoring::{cosine, inner_product, l2_normalize, ScoringMethod};
use ubsc::supervector::Storage;
use ubsc::synth::{synth_corpus, SynthSpec};
use ubsc::ubsc::{supervector, train_ubsc, UbscModel};
use ubsc::{BackgroundModel, UtteranceFeatures};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, ok: bool, limit: Duration, elapsed: Duration, detail: &str) {
    let ok = ok && elapsed <= limit;
    // Straight to the stderr handle so the line survives output capture.
    let _ = writeln!(
        std::io::stderr(),
        "criterion {n}: {} ({detail}; {:.2}s of {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(ok, "criterion {n} failed: {detail}");
}

fn random_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> UtteranceFeatures {
    let data = (0..n * d).map(|_| StandardNormal.sample(rng)).collect::<Vec<f32>>();
    UtteranceFeatures::from_vec(data, d).unwrap()
}

#[test]
fn criterion_1_trial_counts() {
    let _g = serial();
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for (s, expect) in [(438usize, (876usize, 765_624usize)), (192, (384, 146_688)), (630, (1_260, 1_585_080))] {
        let tests: Vec<(String, String)> =
            (0..s).flat_map(|sp| (0..2).map(move |u| (format!("s{sp}_u{u}"), format!("s{sp}")))).collect();
        let got = generate_trials(&tests).unwrap().counts();
        ok &= got == expect;
        detail.push(format!("S={s}: {}/{}", got.0, got.1));
    }
    verdict(1, ok, Duration::from_secs(1), start.elapsed(), &detail.join(", "));
}

/// Straightforward reading of the encoder: build every frame's concatenated
/// one-hot vector explicitly and average them.
fn naive_supervector(feats: &UtteranceFeatures, model: &UbscModel) -> Vec<f64> {
    let (v_count, k, d) = (model.n_models(), model.k(), model.dim());
    let mut sum = vec![0.0f64; v_count * k];
    for x in feats.rows() {
        let mut code = vec![0.0f64; v_count * k];
        for v in 0..v_count {
            let book = model.codebook(v);
            let mut best = (f64::INFINITY, 0);
            for j in 0..k {
                let dist: f64 = (0..d).map(|t| (x[t] as f64 - book[j * d + t] as f64).powi(2)).sum();
                if dist < best.0 {
                    best = (dist, j);
                }
            }
            code[v * k + best.1] = 1.0;
        }
        assert_eq!(code.iter().sum::<f64>(), v_count as f64);
        for (s, c) in sum.iter_mut().zip(&code) {
            *s += c;
        }
    }
    sum.iter().map(|s| s / feats.n_frames() as f64).collect()
}

#[test]
fn criterion_2_encoder_matches_naive() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ok = true;
    for inst in 0..500 {
        let k = rng.random_range(1..=32);
        let v = rng.random_range(1..=5);
        let (n_pool, n_utt) = (rng.random_range(k..=200), rng.random_range(1..=200));
        let pool = random_features(&mut rng, n_pool, 20);
        let utt = random_features(&mut rng, n_utt, 20);
        let model = train_ubsc(&pool, k, v, inst).unwrap();

        // Centers are distinct pool rows.
        for b in 0..v {
            let rows: Vec<&[f32]> = model.codebook(b).chunks_exact(20).collect();
            ok &= rows.iter().all(|r| pool.rows().any(|p| p == *r));
            for i in 0..k {
                ok &= (i + 1..k).all(|j| rows[i] != rows[j]);
            }
        }
        // One-hot per frame.
        for x in utt.rows() {
            let code = model.encode_frame(x).unwrap().to_dense();
            ok &= code.chunks(k).all(|b| b.iter().filter(|&&c| c == 1.0).count() == 1 && b.iter().sum::<f64>() == 1.0);
        }
        let z = supervector(&utt, &model).unwrap().to_dense();
        ok &= z == naive_supervector(&utt, &model);
        ok &= z.chunks(k).all(|b| (b.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        if !ok {
            println!("instance {inst} (k={k}, V={v}) disagrees");
            break;
        }
    }
    verdict(2, ok, Duration::from_secs(30), start.elapsed(), "500 instances bit-exact against naive encoder");
}

#[test]
fn criterion_3_invariants_at_scale() {
    let _g = serial();
    let start = Instant::now();
    let (k, v) = (1 << 14, 30);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pool = random_features(&mut rng, 20_000, 20);
    let utt = random_features(&mut rng, 200, 20);
    let model = train_ubsc(&pool, k, v, 3).unwrap();
    let runs: Vec<_> =
        [1, 4, 8].iter().map(|&t| with_threads(Some(t), || supervector(&utt, &model)).unwrap().unwrap()).collect();
    let z = &runs[0];
    let mut block = vec![0.0f64; v];
    let entries = match z.storage() {
        Storage::Sparse(e) => e.clone(),
        Storage::Dense(_) => panic!("k * V above the dense limit must be sparse"),
    };
    for &(i, val) in &entries {
        block[i / k] += val;
    }
    let blocks_ok = block.iter().all(|b| (b - 1.0).abs() <= 1e-9);
    let total_ok = (z.sum() - v as f64).abs() <= 1e-6;
    let threads_ok = runs[1] == runs[0] && runs[2] == runs[0];
    let detail = format!(
        "block sums {}, total {}, threads 1/4/8 {}",
        if blocks_ok { "ok" } else { "off" },
        z.sum(),
        if threads_ok { "identical" } else { "differ" }
    );
    verdict(3, blocks_ok && total_ok && threads_ok, Duration::from_secs(60), start.elapsed(), &detail);
}

#[test]
fn criterion_4_gmm() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    // M = 1: one EM step gives the pooled mean and population variance.
    let d = 5;
    let utts: Vec<_> = (0..6)
        .map(|_| {
            let data = (0..150 * d)
                .map(|i| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (3.0 + (i % d) as f64 + 2.0 * z) as f32
                })
                .collect();
            UtteranceFeatures::from_vec(data, d).unwrap()
        })
        .collect();
    let pool = UtteranceFeatures::stack(&utts).unwrap();
    let floor = VarianceFloor::from_pool(&pool, DEFAULT_FLOOR_SCALE).unwrap();
    let fit = em_fit(init_gmm(&utts, 1, 0, &floor).unwrap(), &pool, 1, &floor).unwrap();
    let n = pool.n_frames() as f64;
    let mut closed_ok = true;
    for t in 0..d {
        let m: f64 = pool.rows().map(|r| r[t] as f64).sum::<f64>() / n;
        let var: f64 = pool.rows().map(|r| (r[t] as f64 - m).powi(2)).sum::<f64>() / n;
        closed_ok &= (fit.gmm.mean(0)[t] - m).abs() <= 1e-10 && (fit.gmm.variance(0)[t] - var).abs() <= 1e-10;
    }

    // Log-likelihood never decreases.
    let mut monotone_ok = true;
    for set in 0..10u64 {
        let utts: Vec<_> = (0..8)
            .map(|u| {
                let shift = (u % 4) as f32 * 2.5;
                let base = random_features(&mut rng, 60, 3);
                UtteranceFeatures::from_vec(base.as_slice().iter().map(|x| x + shift).collect(), 3).unwrap()
            })
            .collect();
        let pool = UtteranceFeatures::stack(&utts).unwrap();
        let floor = VarianceFloor::from_pool(&pool, DEFAULT_FLOOR_SCALE).unwrap();
        let fit = em_fit(init_gmm(&utts, 4, set, &floor).unwrap(), &pool, 30, &floor).unwrap();
        monotone_ok &= fit.log_likelihoods.windows(2).all(|w| w[1] >= w[0] - 1e-8 * w[0].abs());
    }

    // Two clusters at +-10 with unit variance, 500 points each.
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut recovered = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let utts: Vec<_> = (0..10)
            .map(|u| {
                let c = if u < 5 { -10.0 } else { 10.0 };
                let data = (0..100 * 2).map(|_| (c + normal.sample(&mut rng)) as f32).collect();
                UtteranceFeatures::from_vec(data, 2).unwrap()
            })
            .collect();
        let g = train_gmm(&utts, 2, 20, seed, DEFAULT_FLOOR_SCALE).unwrap();
        let mut means: Vec<&[f64]> = (0..2).map(|c| g.mean(c)).collect();
        means.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let hit = means[0].iter().all(|m| (m + 10.0).abs() < 0.2) && means[1].iter().all(|m| (m - 10.0).abs() < 0.2);
        recovered += hit as usize;
    }
    let detail = format!(
        "M=1 closed form {}, LL monotone {}, clusters recovered {recovered}/10",
        if closed_ok { "ok" } else { "off" },
        if monotone_ok { "ok" } else { "violated" }
    );
    verdict(4, closed_ok && monotone_ok && recovered == 10, Duration::from_secs(60), start.elapsed(), &detail);
}

/// Counts errors at every candidate threshold directly, then applies the
/// first-crossing rule with linear interpolation.
fn oracle_eer(scores: &[LabeledScore]) -> f64 {
    let n_tar = scores.iter().filter(|s| s.target).count() as f64;
    let n_imp = scores.len() as f64 - n_tar;
    let mut thresholds: Vec<f64> = scores.iter().map(|s| s.score).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);
    let rates: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&th| {
            let fa = scores.iter().filter(|s| !s.target && s.score >= th).count() as f64 / n_imp;
            let fr = scores.iter().filter(|s| s.target && s.score < th).count() as f64 / n_tar;
            (fa, fr)
        })
        .collect();
    let j = rates.iter().position(|(fa, fr)| fa - fr <= 0.0).unwrap();
    let (fa1, fr1) = rates[j];
    if j == 0 || fa1 == fr1 {
        return fa1;
    }
    let (fa0, fr0) = rates[j - 1];
    let (d0, d1) = (fa0 - fr0, fa1 - fr1);
    let t = d0 / (d0 - d1);
    0.5 * ((fa0 + t * (fa1 - fa0)) + (fr0 + t * (fr1 - fr0)))
}

#[test]
fn criterion_5_eer_oracle() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut monotone_ok = true;
    for set in 0..100 {
        let sep = rng.random_range(0.0..3.0);
        let coarse = set % 2 == 1;
        let scores: Vec<LabeledScore> = (0..1000)
            .map(|_| {
                let target = rng.random_bool(0.3);
                let z: f64 = StandardNormal.sample(&mut rng);
                let s = z + if target { sep } else { 0.0 };
                LabeledScore { score: if coarse { (s * 10.0).round() / 10.0 } else { s }, target }
            })
            .collect();
        let e = compute_eer(&scores).unwrap().eer;
        worst = worst.max((e - oracle_eer(&scores)).abs());
        let warped: Vec<_> =
            scores.iter().map(|s| LabeledScore { score: 5.0 * s.score.tanh() + 2.0, target: s.target }).collect();
        monotone_ok &= (compute_eer(&warped).unwrap().eer - e).abs() <= 1e-12;
    }
    let perfect: Vec<_> = (0..1000).map(|i| LabeledScore { score: i as f64, target: i >= 700 }).collect();
    let perfect_eer = compute_eer(&perfect).unwrap().eer;
    let ok = worst <= 1e-12 && perfect_eer == 0.0 && monotone_ok;
    let detail =
        format!("max |eer - oracle| = {worst:e}, perfect separation {perfect_eer}, monotone invariance {monotone_ok}");
    verdict(5, ok, Duration::from_secs(10), start.elapsed(), &detail);
}

/// Welch p-values computed beforehand with an independent reference
/// implementation (regularized incomplete beta).
const WELCH_CASES: [(&[f64], &[f64], f64); 20] = [
    (
        &[0.03802, 0.04003, 0.03421, 0.04043, 0.03861, 0.0374, 0.03987, 0.03372, 0.0391, 0.03738],
        &[0.0404, 0.04046, 0.03772, 0.03771, 0.03664, 0.038, 0.04022, 0.04129, 0.04004, 0.03965],
        0.1499824745404597,
    ),
    (
        &[0.03885, 0.03582, 0.03898, 0.03766, 0.04083, 0.03887, 0.04237, 0.03704, 0.04053, 0.03894],
        &[0.04605, 0.03142, 0.04276, 0.03517, 0.03579, 0.03919, 0.03322, 0.03449, 0.03724, 0.03798],
        0.29774459420025945,
    ),
    (
        &[0.03357, 0.03575, 0.0358, 0.03421, 0.03618, 0.03465, 0.03971, 0.03377, 0.03637, 0.03472],
        &[0.04332, 0.03236, 0.04345, 0.03102, 0.02999, 0.0349, 0.03875, 0.02907, 0.03517, 0.03817],
        0.9342166480969065,
    ),
    (
        &[0.04256, 0.04228, 0.04093, 0.04267, 0.04275, 0.0366, 0.04648, 0.03978, 0.03811, 0.04173],
        &[0.04295, 0.04518, 0.04153, 0.04538, 0.0414, 0.04468, 0.0435, 0.04293, 0.04424, 0.04278],
        0.0535441441435151,
    ),
    (
        &[0.03964, 0.04425, 0.03546, 0.04192, 0.0417, 0.0351, 0.03903, 0.04003, 0.03572, 0.04169],
        &[0.04997, 0.05325, 0.04802, 0.05024, 0.0537, 0.04727, 0.04446, 0.04065, 0.0476, 0.04139],
        0.00020776440005738664,
    ),
    (
        &[0.04264, 0.04463, 0.04268, 0.04591, 0.04083, 0.04235, 0.0464, 0.03842, 0.04277, 0.04512],
        &[0.03631, 0.0385, 0.0352, 0.04978, 0.04156, 0.0408, 0.03422, 0.03631, 0.04825, 0.04156],
        0.13834982516962074,
    ),
    (
        &[0.04157, 0.03648, 0.04404, 0.03809, 0.03766, 0.0384, 0.03931, 0.0413, 0.0371, 0.03673],
        &[0.03927, 0.03988, 0.04095, 0.03824, 0.04113, 0.03716, 0.04197, 0.03701, 0.03903, 0.03959],
        0.7114615723823079,
    ),
    (
        &[0.04641, 0.04217, 0.04771, 0.03957, 0.04301, 0.04132, 0.04374, 0.03917, 0.03873, 0.04588],
        &[0.04728, 0.04527, 0.04022, 0.04539, 0.04481, 0.04796, 0.04396, 0.03657, 0.04216, 0.04292],
        0.5548879182987851,
    ),
    (
        &[0.04084, 0.03841, 0.04504, 0.04274, 0.03829, 0.03959, 0.04434, 0.03754, 0.04449, 0.04165],
        &[0.04267, 0.04878, 0.04104, 0.04392, 0.05339, 0.03852, 0.05451, 0.03347, 0.03845, 0.04899],
        0.2148191733009686,
    ),
    (
        &[0.03772, 0.04104, 0.04155, 0.04014, 0.03705, 0.04056, 0.03914, 0.04221, 0.03984, 0.03629],
        &[0.04242, 0.03957, 0.04393, 0.04357, 0.04271, 0.03998, 0.0419, 0.04404, 0.04231, 0.04291],
        0.002619765239710561,
    ),
    (
        &[0.04419, 0.03749, 0.04339, 0.03948, 0.03562, 0.04577, 0.03783, 0.04134, 0.04604, 0.0444],
        &[0.05004, 0.04674, 0.05147, 0.05002, 0.05358, 0.05184, 0.05321, 0.04428, 0.04685, 0.05093],
        3.90910461160043e-05,
    ),
    (
        &[0.03887, 0.03863, 0.04066, 0.04111, 0.04663, 0.03959, 0.04235, 0.0356, 0.04044, 0.03977],
        &[0.03351, 0.03541, 0.03737, 0.03655, 0.02985, 0.0393, 0.04064, 0.0394, 0.04612, 0.04021],
        0.14928985608368742,
    ),
    (
        &[0.04009, 0.04055, 0.03702, 0.03934, 0.04557, 0.04118, 0.03971, 0.03885, 0.04133, 0.04022],
        &[0.04063, 0.04195, 0.04049, 0.04002, 0.03897, 0.03755, 0.04105, 0.04091, 0.03888, 0.03908],
        0.6016941461403221,
    ),
    (
        &[0.03484, 0.03677, 0.03763, 0.04043, 0.0395, 0.03618, 0.04024, 0.03197, 0.03663, 0.03926],
        &[0.04471, 0.03224, 0.03398, 0.03682, 0.03253, 0.03862, 0.03985, 0.03774, 0.03528, 0.04631],
        0.7928372111663433,
    ),
    (&[0.04406, 0.04755], &[0.04039, 0.03717], 0.09851035519384133),
    (&[0.04591, 0.03982, 0.04277], &[0.04702, 0.04459, 0.04619, 0.04318], 0.3065735861041649),
    (
        &[0.04384, 0.04278, 0.04069, 0.03401, 0.04354],
        &[0.05059, 0.05012, 0.04899, 0.05812, 0.05023],
        0.0025929949487810506,
    ),
    (
        &[0.03983, 0.03662, 0.03823, 0.0388, 0.04079, 0.04163, 0.03757, 0.04301],
        &[0.026, 0.04942, 0.04429, 0.04529, 0.04117, 0.04282, 0.04232, 0.03825, 0.03488, 0.04285],
        0.6032684825188781,
    ),
    (
        &[0.03852, 0.04072, 0.03836, 0.04772, 0.04218, 0.04248, 0.04328, 0.03001, 0.04064, 0.0439, 0.03721, 0.04163],
        &[0.04175, 0.03806, 0.04677, 0.04076, 0.04048, 0.04068, 0.04317],
        0.5028477456410047,
    ),
    (
        &[
            0.04403, 0.03998, 0.04724, 0.0461, 0.04934, 0.04117, 0.0444, 0.04537, 0.04469, 0.04421, 0.04387, 0.05032,
            0.04426, 0.04878, 0.04495,
        ],
        &[
            0.04887, 0.05102, 0.04846, 0.03769, 0.04172, 0.04363, 0.04876, 0.04298, 0.04244, 0.05155, 0.05479, 0.04211,
            0.04514, 0.04656, 0.04164, 0.04417, 0.03947, 0.04779, 0.04511, 0.04077,
        ],
        0.9910644291059805,
    ),
];

#[test]
fn criterion_6_welch_oracle() {
    let _g = serial();
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut decisions_ok = true;
    for (a, b, p) in WELCH_CASES {
        let t = t_test(a, b, 0.05).unwrap();
        worst = worst.max((t.p_value - p).abs());
        decisions_ok &= t.reject == (p < 0.05);
    }
    let detail = format!("max |p - reference| = {worst:e}, decisions agree {decisions_ok}");
    verdict(6, worst <= 1e-9 && decisions_ok, Duration::from_secs(1), start.elapsed(), &detail);
}

/// The criterion 7 and 8 corpus: 30 speakers, 10 utterances of 300 frames
/// in 20 dimensions, 8 for training and 2 for test.
fn synthetic(seed: u64) -> ubsc::corpus::Corpus {
    synth_corpus(&SynthSpec {
        speakers: 30,
        utts: 10,
        frames: 300,
        dim: 20,
        train_utts: 8,
        test_utts: 2,
        seed,
        ..SynthSpec::default()
    })
    .unwrap()
}

#[test]
fn criterion_7_end_to_end() {
    let _g = serial();
    let start = Instant::now();
    let systems = [
        SystemSpec::Ubsc { k: 256, n_models: 10 },
        SystemSpec::Gmm { components: 64, iterations: 10, floor_scale: DEFAULT_FLOOR_SCALE },
    ];
    let mut eers = vec![Vec::new(); 2];
    for seed in 0..10u64 {
        let corpus = synthetic(seed);
        let trials = corpus_trials(&corpus).unwrap();
        for (i, sys) in systems.iter().enumerate() {
            eers[i].push(evaluate_seed(&corpus, &trials, sys, &[ScoringMethod::Cosine], seed).unwrap()[0]);
        }
    }
    let under_20 = eers.iter().flatten().all(|&e| e <= 0.20);
    let beats_chance = eers.iter().flatten().all(|&e| e < 0.45);
    let ok = under_20 && beats_chance;
    let fmt = |v: &[f64]| v.iter().map(|e| format!("{:.1}", 100.0 * e)).collect::<Vec<_>>().join(" ");
    let detail = format!("UBSC EER% [{}], GMM EER% [{}]", fmt(&eers[0]), fmt(&eers[1]));
    verdict(7, ok, Duration::from_secs(180), start.elapsed(), &detail);
}

#[test]
fn criterion_8_more_models_help() {
    let _g = serial();
    let start = Instant::now();
    let mut by_v = [Vec::new(), Vec::new()];
    for seed in 0..10u64 {
        let corpus = synthetic(seed);
        let trials = corpus_trials(&corpus).unwrap();
        for (i, v) in [1, 30].into_iter().enumerate() {
            let sys = SystemSpec::Ubsc { k: 256, n_models: v };
            by_v[i].push(evaluate_seed(&corpus, &trials, &sys, &[ScoringMethod::Cosine], seed).unwrap()[0]);
        }
    }
    let m1 = by_v[0].iter().sum::<f64>() / 10.0;
    let m30 = by_v[1].iter().sum::<f64>() / 10.0;
    let detail = format!("mean EER V=1 {:.2}%, V=30 {:.2}%", 100.0 * m1, 100.0 * m30);
    verdict(8, m30 <= m1, Duration::from_secs(600), start.elapsed(), &detail);
}

#[test]
fn criterion_9_scoring_consistency() {
    let _g = serial();
    let start = Instant::now();
    let corpus = synthetic(0);
    let trials = corpus_trials(&corpus).unwrap();
    let model = SystemSpec::Ubsc { k: 256, n_models: 10 }.train(&corpus.train_features(), 0).unwrap();
    let BackgroundModel::Ubsc(_) = &model else { panic!("expected a UBSC model") };
    let raw = ubsc::eval::encode_trial_utterances(&corpus, &trials, &model).unwrap();
    let unit: Vec<_> = raw.iter().map(|z| l2_normalize(z).unwrap()).collect();

    let mut worst = 0.0f64;
    for t in &trials.trials {
        let (a, b) = (&unit[t.enroll], &unit[t.test]);
        worst = worst.max((inner_product(a, b).unwrap().value - cosine(a, b).unwrap().value).abs());
    }
    let eer_cos_unit = compute_eer(&score_trials(&trials, &unit, ScoringMethod::Cosine).unwrap()).unwrap().eer;
    let eer_inner_unit = compute_eer(&score_trials(&trials, &unit, ScoringMethod::InnerProduct).unwrap()).unwrap().eer;
    let eer_cos_raw = compute_eer(&score_trials(&trials, &raw, ScoringMethod::Cosine).unwrap()).unwrap().eer;
    let eer_inner_raw = compute_eer(&score_trials(&trials, &raw, ScoringMethod::InnerProduct).unwrap()).unwrap().eer;
    let ok = worst <= 1e-12 && eer_cos_unit == eer_inner_unit && eer_cos_raw.is_finite() && eer_inner_raw.is_finite();
    let detail = format!(
        "normalized: max |inner - cosine| = {worst:e}, EER {:.3}% vs {:.3}%; raw UBSC: cosine {:.3}%, inner {:.3}%",
        100.0 * eer_cos_unit,
        100.0 * eer_inner_unit,
        100.0 * eer_cos_raw,
        100.0 * eer_inner_raw
    );
    verdict(9, ok, Duration::from_secs(60), start.elapsed(), &detail);
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn criterion_10_run_is_deterministic() {
    let _g = serial();
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# small end-to-end run\n\
         synth.speakers = 8\nsynth.utts = 5\nsynth.frames = 80\nsynth.dim = 10\n\
         train_utts = 3\ntest_utts = 2\n\
         ubsc.k = 64\nubsc.V = 5\ngmm.M = 8\ngmm.iters = 4\n\
         seeds = 0..3\nsubset.counts = 3,8\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("out{threads}"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_ubsc"))
            .args(["--threads", threads, "run", "--config"])
            .arg(&cfg)
            .arg("--out-dir")
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        outputs.push(tree(&out));
    }
    let names = |t: &[(String, Vec<u8>)]| t.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    let same = outputs[0] == outputs[1];
    let scores = outputs[0].iter().filter(|(n, _)| n.starts_with("scores/") && n.ends_with(".csv")).count();
    let has_report = names(&outputs[0]).iter().any(|n| n == "report.txt");
    let detail = format!("{} files compared, {scores} score files, byte-identical {same}", outputs[0].len());
    verdict(10, same && scores == 12 && has_report, Duration::from_secs(120), start.elapsed(), &detail);
}
