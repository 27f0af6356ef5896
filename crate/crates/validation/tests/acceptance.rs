//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::f64::consts::{PI, SQRT_2};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use channel_charting::encoder::{count_params, Encoder, EncoderParams, MlpParams, ModelSpec};
use channel_charting::evalmetrics::{continuity, score_chart, trustworthiness, DEFAULT_K_GRID};
use channel_charting::isomap::{classical_mds, isomap};
use channel_charting::metricspace::{distance_matrix, pseudo_distance, DistanceMatrix};
use channel_charting::rng::SplitMix64;
use channel_charting::triplet::{mine_triplets, triplet_loss, triplet_loss_grad, MiningConfig};
use channel_charting_cli::commands::{cmd_compare, eval_indices, init_model, Arm, PARAM_COUNT_NOTE};
use channel_charting_cli::formats::{read_dataset, read_model, write_dataset, write_model};
use channel_charting_cli::{ExperimentConfig, Model};
use channel_charting_validation::{brute_continuity, brute_trustworthiness, procrustes_residual};
use ndarray::Array2;
use num_complex::Complex64;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn complex_vec(rng: &mut SplitMix64, m: usize) -> Vec<Complex64> {
    (0..m).map(|_| Complex64::new(rng.normal(), rng.normal())).collect()
}

fn log_uniform(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    (rng.uniform_range(lo.ln(), hi.ln())).exp()
}

fn parameter_counts() -> Verdict {
    let mlp = count_params(&ModelSpec::baseline_mlp(1024, 2));
    let hybrid = |n_init| count_params(&ModelSpec::Hybrid { m: 1024, n_init, d_out: 2 });
    let (h100, h200) = (hybrid(100), hybrid(200));
    verdict(
        mlp == 2_793_600 && h100 == 205_000 && h200 == 410_000,
        format!("mlp={mlp} hybrid(100)={h100} hybrid(200)={h200}; note: {PARAM_COUNT_NOTE}"),
    )
}

fn distance_invariance() -> Verdict {
    let mut rng = SplitMix64::new(2002);
    let (mut worst, mut out_of_range) = (0.0f64, 0usize);
    let mut pairs = 0;
    for _ in 0..1000 {
        let m = 1 + rng.below(64) as usize;
        let h = complex_vec(&mut rng, m);
        let alpha = log_uniform(&mut rng, 1e-3, 1e3);
        let phase = Complex64::from_polar(alpha, rng.uniform_range(0.0, 2.0 * PI));
        let g: Vec<Complex64> = h.iter().map(|x| phase * x).collect();
        worst = worst.max(pseudo_distance(&h, &g).unwrap());
        let other = complex_vec(&mut rng, m);
        for d in [pseudo_distance(&h, &other).unwrap(), pseudo_distance(&g, &other).unwrap()] {
            pairs += 1;
            out_of_range += usize::from(!(0.0..=SQRT_2 + 1e-12).contains(&d));
        }
    }
    let rows: Vec<Vec<Complex64>> = (0..60).map(|_| complex_vec(&mut rng, 8)).collect();
    let dm = distance_matrix(&rows).unwrap();
    pairs += dm.values().len();
    out_of_range += dm.values().iter().filter(|d| !(0.0..=SQRT_2 + 1e-12).contains(*d)).count();
    verdict(
        worst < 1e-9 && out_of_range == 0,
        format!("max d(h, a e^jp h) = {worst:.3e} (< 1e-9); {out_of_range}/{pairs} distances outside [0, sqrt2+1e-12]"),
    )
}

/// Smallest gap between the k-th and (k+1)-th largest correlation magnitude,
/// relative to the largest.
fn threshold_gap(p: &EncoderParams, h: &[Complex64]) -> f64 {
    let (_, cache) = p.forward(h).unwrap();
    let mut b = cache.b.clone();
    b.sort_by(|x, y| y.total_cmp(x));
    if p.k >= b.len() {
        return 1.0;
    }
    (b[p.k - 1] - b[p.k]) / b[0]
}

fn encoder_invariance() -> Verdict {
    let mut rng = SplitMix64::new(3003);
    let (mut identical, mut drawn, mut worst) = (0, 0, 0.0f64);
    while drawn < 1000 {
        let m = 4 + rng.below(29) as usize;
        let n_init = 3 + rng.below(8) as usize;
        let k = 1 + rng.below(n_init as u64) as usize;
        let p = EncoderParams::init_random(m, n_init, k, 2, rng.next_u64()).unwrap();
        let h = complex_vec(&mut rng, m);
        if threshold_gap(&p, &h) < 1e-6 {
            continue;
        }
        drawn += 1;
        let scale = Complex64::from_polar(log_uniform(&mut rng, 1e-3, 1e3), rng.uniform_range(0.0, 2.0 * PI));
        let g: Vec<Complex64> = h.iter().map(|x| scale * x).collect();
        let (a, b) = (p.chart(&h).unwrap(), p.chart(&g).unwrap());
        if a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()) {
            identical += 1;
        }
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    verdict(
        identical == drawn,
        format!("{identical}/{drawn} tie-free draws bit-identical; max relative deviation {worst:.3e}"),
    )
}

/// Sum of the triplet loss over one (anchor, close, far) input triple.
fn composite_loss<E: Encoder>(model: &E, inputs: &[&[Complex64]; 3], margin: f64) -> f64 {
    let z: Vec<Vec<f64>> = inputs.iter().map(|h| model.chart(h).unwrap()).collect();
    triplet_loss(&z[0], &z[1], &z[2], margin).loss
}

/// Norm-wise relative error between analytic and central-difference
/// gradients of the composite loss over every parameter.
fn composite_gradient_error<E: Encoder>(model: &mut E, inputs: &[&[Complex64]; 3], margin: f64) -> f64 {
    let (charts, tape) = model.forward_batch(inputs);
    let z: Vec<Vec<f64>> = charts.into_iter().map(Option::unwrap).collect();
    let (ga, gc, gf) = triplet_loss_grad(&z[0], &z[1], &z[2], margin);
    let analytic: Vec<f64> = model
        .backward_batch(&tape, inputs, &[Some(ga), Some(gc), Some(gf)])
        .concat();
    let step = 1e-6;
    let mut numeric = Vec::with_capacity(analytic.len());
    let lens: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    for (t, &len) in lens.iter().enumerate() {
        for i in 0..len {
            let orig = model.tensors()[t][i];
            model.tensors_mut()[t][i] = orig + step;
            let up = composite_loss(model, inputs, margin);
            model.tensors_mut()[t][i] = orig - step;
            let down = composite_loss(model, inputs, margin);
            model.tensors_mut()[t][i] = orig;
            numeric.push((up - down) / (2.0 * step));
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    let scale = norm(&analytic).max(norm(&numeric));
    if scale < 1e-12 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Margin that keeps the hinge active by 0.5.
fn active_margin<E: Encoder>(model: &E, inputs: &[&[Complex64]; 3]) -> f64 {
    let t = composite_loss(model, inputs, 0.0);
    (0.5 - t).max(0.5)
}

/// Smallest |pre-activation| of the hidden layers, from a direct re-evaluation.
fn relu_gap(p: &MlpParams, h: &[Complex64]) -> f64 {
    let norm = h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut x: Vec<f64> = h.iter().map(|c| c.re / norm).chain(h.iter().map(|c| c.im / norm)).collect();
    let mut gap = f64::INFINITY;
    for (l, w) in p.layers.iter().enumerate() {
        let y: Vec<f64> = w.rows().into_iter().map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        if l + 1 < p.layers.len() {
            gap = y.iter().fold(gap, |g, v| g.min(v.abs()));
            x = y.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    gap
}

fn gradient_checks() -> Verdict {
    let mut rng = SplitMix64::new(4004);
    let (mut hybrid_worst, mut hybrid_n) = (0.0f64, 0);
    while hybrid_n < 100 {
        let m = 4 + rng.below(13) as usize;
        let n_init = 3 + rng.below(6) as usize;
        let k = 1 + rng.below(n_init as u64) as usize;
        let mut p = EncoderParams::init_random(m, n_init, k, 2, rng.next_u64()).unwrap();
        let hs: Vec<Vec<Complex64>> = (0..3).map(|_| complex_vec(&mut rng, m)).collect();
        if hs.iter().any(|h| threshold_gap(&p, h) < 1e-3) {
            continue;
        }
        let inputs = [hs[0].as_slice(), hs[1].as_slice(), hs[2].as_slice()];
        let margin = active_margin(&p, &inputs);
        hybrid_worst = hybrid_worst.max(composite_gradient_error(&mut p, &inputs, margin));
        hybrid_n += 1;
    }
    let (mut mlp_worst, mut mlp_n) = (0.0f64, 0);
    while mlp_n < 100 {
        let m = 4 + rng.below(13) as usize;
        let dims = [2 * m, 3 + rng.below(6) as usize, 3 + rng.below(6) as usize, 2];
        let mut p = MlpParams::xavier(&dims, rng.next_u64()).unwrap();
        let hs: Vec<Vec<Complex64>> = (0..3).map(|_| complex_vec(&mut rng, m)).collect();
        if hs.iter().any(|h| relu_gap(&p, h) < 1e-4) {
            continue;
        }
        let inputs = [hs[0].as_slice(), hs[1].as_slice(), hs[2].as_slice()];
        let margin = active_margin(&p, &inputs);
        mlp_worst = mlp_worst.max(composite_gradient_error(&mut p, &inputs, margin));
        mlp_n += 1;
    }
    verdict(
        hybrid_worst < 1e-4 && mlp_worst < 1e-4,
        format!("max relative error: hybrid+triplet {hybrid_worst:.2e} over {hybrid_n}, mlp+triplet {mlp_worst:.2e} over {mlp_n} (< 1e-4)"),
    )
}

fn isomap_recovery() -> Verdict {
    let grid = Array2::from_shape_fn((100, 2), |(i, c)| if c == 0 { (i % 10) as f64 } else { (i / 10) as f64 });
    let embedding = isomap(&DistanceMatrix::euclidean(&grid), 5, 2).unwrap();
    let residual = procrustes_residual(&grid, &embedding.coords);

    let s = 3f64.sqrt() / 2.0;
    let triangle = ndarray::arr2(&[[0.0, 0.0], [1.0, 0.0], [0.5, s]]);
    let dist = DistanceMatrix::euclidean(&triangle);
    let coords = classical_mds(&dist, 2).unwrap().coords;
    let back = DistanceMatrix::euclidean(&coords);
    let tri_err = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (back.get(i, j) - dist.get(i, j)).abs())
        .fold(0.0, f64::max);
    verdict(
        residual < 1e-6 && tri_err < 1e-9,
        format!("10x10 grid k_iso=5 Procrustes residual {residual:.4e} of variance (< 1e-6); triangle distance error {tri_err:.1e} (< 1e-9)"),
    )
}

fn tw_ct_oracles() -> Verdict {
    let mut rng = SplitMix64::new(6006);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = 10 + rng.below(191) as usize;
        let high = Array2::from_shape_simple_fn((n, 2), || rng.uniform_range(0.0, 100.0));
        let noise = rng.uniform_range(0.0, 30.0);
        let low = high.mapv(|v| v + noise * rng.normal());
        let max_k = (2 * n - 2) / 3;
        for k in [1, 2, 1 + rng.below(max_k as u64) as usize, max_k] {
            let tw = trustworthiness(&high, &low, k).unwrap();
            let ct = continuity(&high, &low, k).unwrap();
            worst = worst
                .max((tw - brute_trustworthiness(&high, &low, k)).abs())
                .max((ct - brute_continuity(&high, &low, k)).abs());
        }
    }
    let points = Array2::from_shape_simple_fn((200, 2), || rng.uniform_range(-5.0, 5.0));
    let identity = score_chart(&points, &points, &DEFAULT_K_GRID).unwrap();
    let exact = identity.iter().all(|r| r.trustworthiness == 1.0 && r.continuity == 1.0);
    verdict(
        worst <= 1e-12 && exact,
        format!("max |fast - oracle| = {worst:.1e} over 20 instances (<= 1e-12); identity chart exactly 1.0 at all {} K: {exact}", identity.len()),
    )
}

struct SeedRun {
    seed: u64,
    losses: Vec<f64>,
    untrained: (f64, f64),
    trained: (f64, f64),
    mlp: (f64, f64),
}

fn desk_run(seed: u64) -> SeedRun {
    let cfg = ExperimentConfig::preset("desk").unwrap().with_seed_override(Some(seed));
    let cs = cfg.scenario().generate().unwrap();
    let eval = eval_indices(&cfg, cs.len()).unwrap();
    let grid = [0.01];
    let (train, mining) = (cfg.train_config(), cfg.mining_config());
    let at_1 = |model: &Model| {
        let r = &model.evaluate(&cs, &eval, &grid).unwrap().rows[0];
        (r.trustworthiness, r.continuity)
    };
    let smart = init_model(&cfg, &cs, Arm::Smart).unwrap();
    let untrained = at_1(&smart);
    let (smart, summary) = smart.train(&cs, &train, &mining).unwrap();
    let trained = at_1(&smart);
    let (mlp, _) = init_model(&cfg, &cs, Arm::Mlp).unwrap().train(&cs, &train, &mining).unwrap();
    SeedRun {
        seed,
        losses: summary.epoch_losses,
        untrained,
        trained,
        mlp: at_1(&mlp),
    }
}

fn desk_trend(runs: &[SeedRun]) -> [Verdict; 3] {
    let fmt = |(tw, ct): (f64, f64)| format!("TW {tw:.4} CT {ct:.4}");
    let a = runs.iter().all(|r| r.losses.last() < r.losses.first());
    let a_detail: Vec<String> = runs
        .iter()
        .map(|r| {
            let monotone = r.losses.windows(2).all(|w| w[1] < w[0]);
            format!(
                "seed {}: {:.4} -> {:.4} over {} epochs (every epoch lower: {monotone})",
                r.seed,
                r.losses[0],
                r.losses.last().unwrap(),
                r.losses.len()
            )
        })
        .collect();
    let b = runs
        .iter()
        .all(|r| r.trained.0 > r.untrained.0 && r.trained.1 > r.untrained.1);
    let b_detail: Vec<String> = runs
        .iter()
        .map(|r| format!("seed {}: untrained {} -> trained {}", r.seed, fmt(r.untrained), fmt(r.trained)))
        .collect();
    let c = runs
        .iter()
        .all(|r| r.untrained.0 > r.mlp.0 && r.untrained.1 > r.mlp.1);
    let c_detail: Vec<String> = runs
        .iter()
        .map(|r| format!("seed {}: untrained smart {} vs trained MLP {}", r.seed, fmt(r.untrained), fmt(r.mlp)))
        .collect();
    [
        verdict(a, a_detail.join("; ")),
        verdict(b, b_detail.join("; ")),
        verdict(c, c_detail.join("; ")),
    ]
}

fn mining_constants() -> Verdict {
    let reference = MiningConfig {
        t_close: 100.0,
        t_far: 290.0,
        sample_rate: 7.0,
        per_anchor: 5,
        seed: 0,
    };
    let s_c = reference.close_window();
    let mut rng = SplitMix64::new(8008);
    let (mut checked, mut violations) = (0usize, 0usize);
    for case in 0..300 {
        let n = 2 + rng.below(400) as usize;
        let s_c = 1 + rng.below(30) as usize;
        let s_f = s_c + 1 + rng.below(60) as usize;
        let cfg = MiningConfig {
            t_close: s_c as f64,
            t_far: s_f as f64,
            sample_rate: 1.0,
            per_anchor: 1 + rng.below(4) as usize,
            seed: case,
        };
        let mined = mine_triplets(n, &cfg).unwrap();
        for t in &mined.triplets {
            checked += 1;
            let (i, j, k) = (t.anchor, t.close, t.far);
            let ok = i != j
                && i != k
                && j != k
                && i.max(j).max(k) < n
                && i.abs_diff(j) <= s_c
                && s_c < i.abs_diff(k)
                && i.abs_diff(k) <= s_f;
            violations += usize::from(!ok);
        }
    }
    verdict(
        s_c == 700 && violations == 0,
        format!("S_c(f_s=7, T_c=100) = {s_c}; {violations} invariant violations in {checked} mined triplets over 300 random configs"),
    )
}

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::scaled(300);
    cfg.scenario.radio.n_rows = 2;
    cfg.scenario.radio.n_cols = 4;
    cfg.scenario.radio.n_subcarriers = 4;
    cfg.encoder.n_init = 30;
    cfg.baseline.hidden = vec![32, 16];
    cfg.training.epochs = 5;
    cfg
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn round_trips_and_determinism() -> Verdict {
    let cfg = small_config();
    let cs = cfg.scenario().generate().unwrap();
    let mut buf = Vec::new();
    write_dataset(&mut buf, &cs.positions, &cs.channels).unwrap();
    let back = read_dataset(&mut buf.as_slice()).unwrap();
    let bits = |a: &Array2<f64>| a.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let cbits = |a: &Array2<Complex64>| a.iter().flat_map(|v| [v.re.to_bits(), v.im.to_bits()]).collect::<Vec<_>>();
    let dataset_ok = bits(&back.positions) == bits(&cs.positions) && cbits(&back.channels) == cbits(&cs.channels);

    let mut models_ok = true;
    for arm in [Arm::Smart, Arm::Random, Arm::Mlp] {
        let model = init_model(&cfg, &cs, arm).unwrap();
        let mut a = Vec::new();
        write_model(&mut a, &model).unwrap();
        let mut b = Vec::new();
        write_model(&mut b, &read_model(&mut a.as_slice()).unwrap()).unwrap();
        models_ok &= a == b && read_model(&mut a.as_slice()).unwrap() == model;
    }

    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_compare(&cfg, d1.path()).unwrap();
    cmd_compare(&cfg, d2.path()).unwrap();
    let (f1, f2) = (csv_files(d1.path()), csv_files(d2.path()));
    let identical = !f1.is_empty() && f1 == f2;
    verdict(
        dataset_ok && models_ok && identical,
        format!(
            "dataset bit-exact: {dataset_ok}; hybrid/random/mlp models bit-exact: {models_ok}; two compare runs, {} CSVs byte-identical: {identical}",
            f1.len()
        ),
    )
}

fn run(id: &str, title: &str, check: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        verdict(false, format!("panicked: {msg}"))
    });
    report(id, title, &outcome, start);
    outcome.pass
}

fn report(id: &str, title: &str, v: &Verdict, start: Instant) {
    let status = if v.pass { "PASS" } else { "FAIL" };
    println!(
        "{status} [{id}] {title} ({:.1}s): {}",
        start.elapsed().as_secs_f64(),
        v.detail
    );
}

fn main() {
    // Panics inside a check are reported on its line.
    panic::set_hook(Box::new(|_| {}));
    println!("acceptance criteria");
    let mut results = vec![
        run("1", "parameter counts", parameter_counts),
        run("2", "pseudo-distance invariance and range", distance_invariance),
        run("3", "encoder output bit-identical under scaling/phase", encoder_invariance),
        run("4", "composite gradient checks", gradient_checks),
        run("5", "Isomap grid recovery and MDS triangle", isomap_recovery),
        run("6", "TW/CT oracle equivalence", tw_ct_oracles),
    ];

    let start = Instant::now();
    let runs = panic::catch_unwind(|| [1, 2, 3].map(desk_run));
    let titles = [
        ("7a", "desk-scale smart-init loss decreases, seeds 1-3"),
        ("7b", "training improves smart-init TW and CT at K=1%, seeds 1-3"),
        ("7c", "untrained smart-init beats trained MLP at K=1%, seeds 1-3"),
    ];
    match runs {
        Ok(runs) => {
            for ((id, title), v) in titles.iter().zip(desk_trend(&runs)) {
                report(id, title, &v, start);
                results.push(v.pass);
            }
        }
        Err(_) => {
            for (id, title) in titles {
                report(id, title, &verdict(false, "desk run panicked"), start);
                results.push(false);
            }
        }
    }

    results.push(run("8", "triplet mining constants and invariants", mining_constants));
    results.push(run("9", "file round-trips and compare determinism", round_trips_and_determinism));

    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
