//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p kfca-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use kfca_core::delta::{analytic_delta, empirical_delta, shirk_scale};
use kfca_core::mechanism::{ca_score_matrix, expected_reward, ScoreMatrix};
use kfca_core::rng::Domain;
use kfca_core::robustness::{
    binary_robustness, multiclass_robustness, permutation_differential, simulate_gap, simulate_robustness, Attacker,
    RobustnessConfig,
};
use kfca_core::shapley::{exact_shapley, mc_shapley, CoalitionOracle, FnGame, McConfig, StoppingRule, TabularGame};
use kfca_core::sim::{heterogeneity_sweep, run_simulation, NoiseSpec, SimConfig};
use kfca_core::stats::MeanEstimate;
use kfca_core::strategy::ReportStrategy;
use kfca_core::truthfulness::{random_categorical_delta, summarize_profiles, worst_case_permutation};
use kfca_core::world::{symmetric_channel, ClientChannel};
use kfca_core::{AttackSpec, DeltaMatrix, LabelSpace, Matrix, SignalWorld, Streams};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

fn c01_ca_label_flip() -> Check {
    let labels = LabelSpace::binary();
    let delta = empirical_delta(&[1, 0, 1, 0, 1, 0], &[0, 1, 0, 1, 0, 1], labels).map_err(err)?;
    let want = [-0.25, 0.25, 0.25, -0.25];
    for (got, want) in delta.entries().iter().zip(want) {
        ensure((got - want).abs() <= 1e-12, || format!("delta entries {:?}", delta.entries()))?;
    }
    let score = ca_score_matrix(&delta);
    let truthful = expected_reward(&delta, &score, &ReportStrategy::Truthful, &ReportStrategy::Truthful).map_err(err)?;
    let flip = ReportStrategy::flip(labels);
    let flipped = expected_reward(&delta, &score, &flip, &flip).map_err(err)?;
    ensure((truthful - 0.5).abs() <= 1e-12 && (flipped - 0.5).abs() <= 1e-12, || {
        format!("truthful {truthful}, flip {flipped}")
    })?;
    Ok(format!("delta exact, truthful = flip = {truthful}"))
}

fn random_deltas(labels: usize, count: usize) -> Vec<DeltaMatrix> {
    let space = LabelSpace::new(labels).expect("small label count");
    let streams = Streams::new(2024);
    (0..count)
        .map(|k| random_categorical_delta(space, &mut streams.stream(Domain::Delta, &[labels as u64, k as u64])))
        .collect()
}

fn c02_kfca_strict() -> Check {
    let mut margin = f64::INFINITY;
    for l in 2..=4 {
        for (k, delta) in random_deltas(l, 100).iter().enumerate() {
            let s = summarize_profiles(delta, &ScoreMatrix::kfca(delta.labels())).map_err(err)?;
            ensure(s.maximizers == factorial(l) && s.maximizers_all_shared_bijections, || {
                format!("L = {l}, delta {k}: {} maximizers", s.maximizers)
            })?;
            ensure(s.strictly_truthful(), || format!("L = {l}, delta {k}: not strict"))?;
            margin = margin.min(s.truthful_value - s.best_other_value);
        }
    }
    Ok(format!("300 deltas, smallest truthful margin {margin:.3e}"))
}

fn c03_ca_weak() -> Check {
    let mut worst_constant: f64 = 0.0;
    for l in 2..=4 {
        for (k, delta) in random_deltas(l, 100).iter().enumerate() {
            let s = summarize_profiles(delta, &ca_score_matrix(delta)).map_err(err)?;
            ensure(s.truthful_is_max(), || format!("L = {l}, delta {k}: truthful below max"))?;
            ensure(s.max_abs_constant_value <= 1e-12, || {
                format!("L = {l}, delta {k}: constant profile scores {}", s.max_abs_constant_value)
            })?;
            worst_constant = worst_constant.max(s.max_abs_constant_value);
        }
    }
    Ok(format!("300 deltas, largest |constant value| {worst_constant:.1e}"))
}

fn c04_binary_robustness() -> Check {
    let streams = Streams::new(4);
    let mut worst: f64 = 0.0;
    for alpha in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let world = SignalWorld::binary_symmetric(&[alpha]).map_err(err)?;
        for lambda in [0.0, 0.2, 0.4, 0.6] {
            let cfg = RobustnessConfig::new(lambda, AttackSpec::SignFlip);
            let r = simulate_robustness(&world, &cfg, &streams).map_err(err)?;
            let closed = binary_robustness(alpha, lambda).map_err(err)?;
            let z = (r.simulated_mean - closed).abs() / r.simulated_stderr;
            ensure(z <= 3.0, || {
                format!(
                    "alpha {alpha}, lambda {lambda}: simulated {} +/- {}, closed {closed}",
                    r.simulated_mean, r.simulated_stderr
                )
            })?;
            worst = worst.max(z);
            let expected_sign = if lambda < 0.5 { 1.0 } else { -1.0 };
            ensure(closed * expected_sign > 0.0, || format!("closed form sign at lambda {lambda}"))?;
            if closed.abs() > 3.0 * r.simulated_stderr {
                ensure(r.simulated_mean * expected_sign > 0.0, || {
                    format!("simulated sign at alpha {alpha}, lambda {lambda}")
                })?;
            }
        }
        let at_half = binary_robustness(alpha, 0.5).map_err(err)?;
        ensure(at_half == 0.0, || format!("alpha {alpha}: E(0.5) = {at_half}"))?;
    }
    Ok(format!("20 cells, largest deviation {worst:.2} sigma"))
}

fn c05_multiclass() -> Check {
    let prior = [0.5, 0.5];
    let flip = ReportStrategy::flip(LabelSpace::binary()).transition(LabelSpace::binary());
    let mut worst: f64 = 0.0;
    for alpha in [0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.45] {
        let honest = symmetric_channel(LabelSpace::binary(), alpha);
        let malicious = honest.mul(&flip);
        for lambda in [0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.9, 1.0] {
            let m = multiclass_robustness(&prior, &honest, &malicious, lambda).map_err(err)?;
            let b = binary_robustness(alpha, lambda).map_err(err)?;
            worst = worst.max((m.e_total - b).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("largest difference {worst:e}"))?;
    for l in 2..=4 {
        let space = LabelSpace::new(l).map_err(err)?;
        let honest = symmetric_channel(space, 0.2);
        let same = multiclass_robustness(&space.uniform(), &honest, &honest.clone(), 0.3).map_err(err)?;
        ensure(same.threshold.is_none(), || format!("L = {l}: threshold defined with A = B"))?;
    }
    Ok(format!("binary reduction within {worst:.1e}; threshold undefined when A = B"))
}

/// Worlds where every client shares one informative channel.
fn shared_channel_worlds() -> Vec<(&'static str, SignalWorld)> {
    let asym = Matrix::from_rows(&[vec![0.8, 0.15, 0.05], vec![0.1, 0.7, 0.2], vec![0.05, 0.15, 0.8]]).expect("square");
    let asym_world = SignalWorld::new(
        LabelSpace::new(3).expect("3 labels"),
        vec![0.5, 0.3, 0.2],
        vec![ClientChannel {
            channel: asym,
            baseline: vec![1.0 / 3.0; 3],
            effort: 1.0,
            informative: true,
        }],
    )
    .expect("valid world");
    vec![
        ("binary alpha 0.2", SignalWorld::binary_symmetric(&[0.2]).expect("valid")),
        ("L3 alpha 0.15", SignalWorld::symmetric(LabelSpace::new(3).expect("3"), &[0.15]).expect("valid")),
        ("L3 asymmetric", asym_world),
    ]
}

fn c06_permutation_differential() -> Check {
    let streams = Streams::new(6);
    let mut worst: f64 = 0.0;
    for (name, world) in shared_channel_worlds() {
        let delta = analytic_delta(&world, 0, 0).map_err(err)?;
        let pi = worst_case_permutation(&delta).map_err(err)?;
        let attacker = Attacker::Strategy(ReportStrategy::permutation(pi.clone()).map_err(err)?);
        for lambda in [0.0, 0.25, 0.4] {
            let cfg = RobustnessConfig::new(lambda, attacker.clone());
            let gap = simulate_gap(&world, &cfg, &streams).map_err(err)?;
            let predicted = permutation_differential(&delta, &pi, lambda).map_err(err)?;
            let z = (gap.simulated_mean - predicted).abs() / gap.simulated_stderr;
            ensure(z <= 3.0, || {
                format!(
                    "{name}, lambda {lambda}: gap {} +/- {}, predicted {predicted}",
                    gap.simulated_mean, gap.simulated_stderr
                )
            })?;
            worst = worst.max(z);
        }
    }
    Ok(format!("3 worlds x 3 lambdas, largest deviation {worst:.2} sigma"))
}

fn c07_shirking() -> Check {
    const SAMPLES: usize = 1_000_000;
    const BATCHES: usize = 100;
    let base = SignalWorld::binary_symmetric(&[0.1, 0.1]).map_err(err)?;
    let full = analytic_delta(&base, 0, 1).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (k, (e1, e2)) in [(1.0, 1.0), (0.5, 0.5), (0.5, 1.0), (0.0, 1.0)].into_iter().enumerate() {
        let world = base.clone().with_effort(0, e1).and_then(|w| w.with_effort(1, e2)).map_err(err)?;
        let streams = Streams::new(70 + k as u64);
        let truths = world.sample_truths(SAMPLES, &mut streams.stream(Domain::Truth, &[]));
        let r0 = world.sample_client_signals(0, &truths, &mut streams.task_stream(Domain::Signal, &[0]));
        let r1 = world.sample_client_signals(1, &truths, &mut streams.task_stream(Domain::Signal, &[1]));
        let target = shirk_scale(&full, e1, e2).map_err(err)?;
        let whole = empirical_delta(&r0, &r1, world.labels()).map_err(err)?;
        let size = SAMPLES / BATCHES;
        let batches: Vec<DeltaMatrix> = (0..BATCHES)
            .map(|b| empirical_delta(&r0[b * size..(b + 1) * size], &r1[b * size..(b + 1) * size], world.labels()))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        for e in 0..target.entries().len() {
            let xs: Vec<f64> = batches.iter().map(|d| d.entries()[e]).collect();
            // batch spread scaled to the full sample
            let sigma = MeanEstimate::from_samples(&xs).stderr;
            let dev = (whole.entries()[e] - target.entries()[e]).abs();
            ensure(dev <= 3.0 * sigma, || {
                format!(
                    "efforts ({e1}, {e2}) entry {e}: {} vs {} (sigma {sigma:.2e})",
                    whole.entries()[e],
                    target.entries()[e]
                )
            })?;
            worst = worst.max(dev / sigma);
        }
    }
    Ok(format!("4 effort pairs at 1e6 samples, largest deviation {worst:.2} sigma"))
}

fn c08_shapley_exact() -> Check {
    let phi = exact_shapley(&TabularGame::worked_example()).map_err(err)?.values;
    let want = [0.73 / 3.0, 0.88 / 3.0, 1.03 / 3.0];
    for (i, (g, w)) in phi.iter().zip(want).enumerate() {
        ensure((g - w).abs() <= 1e-9, || format!("phi_{i} = {g}, want {w}"))?;
    }
    let sum: f64 = phi.iter().sum();
    ensure((sum - 0.88).abs() <= 1e-9, || format!("sum {sum}"))?;

    let mut rng = Streams::new(8).stream(Domain::Shapley, &[u64::MAX]);
    let n = 6;
    let u: Vec<f64> = (0..1 << n).map(|_| rng.random::<f64>()).collect();
    let w: Vec<f64> = (0..1 << n).map(|_| rng.random::<f64>()).collect();
    let game = |v: &[f64]| TabularGame::new(n, v.to_vec()).expect("valid");
    let phi_u = exact_shapley(&game(&u)).map_err(err)?.values;
    let phi_w = exact_shapley(&game(&w)).map_err(err)?.values;
    // efficiency
    let total: f64 = phi_u.iter().sum();
    ensure((total - (u[(1 << n) - 1] - u[0])).abs() <= 1e-9, || "efficiency".into())?;
    // additivity
    let sum_game: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + b).collect();
    let phi_sum = exact_shapley(&game(&sum_game)).map_err(err)?.values;
    for i in 0..n {
        ensure((phi_sum[i] - phi_u[i] - phi_w[i]).abs() <= 1e-9, || format!("additivity at {i}"))?;
    }
    // symmetry: value depends on coalition size only, plus a bonus for player 5
    let sym: Vec<f64> = (0..1u64 << n)
        .map(|s| {
            let k = (s & 0b11111).count_ones() as f64;
            k.sqrt() + if s & 0b100000 != 0 { 0.3 * k } else { 0.0 }
        })
        .collect();
    let phi_sym = exact_shapley(&game(&sym)).map_err(err)?.values;
    for i in 1..5 {
        ensure((phi_sym[i] - phi_sym[0]).abs() <= 1e-9, || format!("symmetry at {i}"))?;
    }
    // null player: player 2 never changes the value
    let null: Vec<f64> = (0..1u64 << n).map(|s| u[(s & !0b100) as usize]).collect();
    let phi_null = exact_shapley(&game(&null)).map_err(err)?.values;
    ensure(phi_null[2].abs() <= 1e-9, || format!("null player gets {}", phi_null[2]))?;
    Ok(format!("phi = ({:.5}, {:.5}, {:.5}), axioms hold", phi[0], phi[1], phi[2]))
}

fn c09_mc_shapley() -> Check {
    let game = TabularGame::worked_example();
    let exact = exact_shapley(&game).map_err(err)?.values;
    let cfg = McConfig {
        max_permutations: 100,
        truncation_eps: None,
        stopping: None,
    };
    let runs: Vec<Vec<f64>> = (0..200u64)
        .map(|seed| mc_shapley(&game, &cfg, &Streams::new(seed)).map(|r| r.values))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        let xs: Vec<f64> = runs.iter().map(|r| r[i]).collect();
        let est = MeanEstimate::from_samples(&xs);
        ensure(est.within(exact[i], 3.0), || {
            format!("player {i}: {} +/- {} vs {}", est.mean, est.stderr, exact[i])
        })?;
        worst = worst.max((est.mean - exact[i]).abs() / est.stderr);
    }
    let weights = [0.5, 1.0, 2.0, 0.25];
    let additive = FnGame::new(4, |s: u64| (0..4).filter(|i| s >> i & 1 == 1).map(|i| weights[i]).sum());
    let stop_cfg = McConfig {
        max_permutations: 1000,
        truncation_eps: None,
        stopping: Some(StoppingRule::default()),
    };
    let r = mc_shapley(&additive, &stop_cfg, &Streams::new(9)).map_err(err)?;
    let first_check = StoppingRule::default().window + 1;
    ensure(r.converged && r.permutations_used == first_check, || {
        format!("additive game stopped after {} permutations", r.permutations_used)
    })?;
    ensure(additive.players() == 4, String::new)?;
    Ok(format!(
        "200 seeds within {worst:.2} sigma; additive game stops at permutation {first_check}"
    ))
}

fn c10_attack_ordering() -> Check {
    let lags = [2, 3, 4, 5];
    let mut attacks = vec![
        AttackSpec::Sparse(0.75),
        AttackSpec::Sparse(0.5),
        AttackSpec::Sparse(0.25),
        AttackSpec::Zero,
        AttackSpec::Random,
        AttackSpec::SignFlip,
    ];
    attacks.extend(lags.iter().map(|&k| AttackSpec::Lagged(k)));
    attacks.push(AttackSpec::Stale);
    let cfg = SimConfig {
        rounds: 10,
        tasks: 10_000,
        persistence: 0.8,
        noise: NoiseSpec::Fixed(0.1),
        seed: 10,
        ..SimConfig::with_population(10, &attacks)
    };
    let run = run_simulation(&cfg).map_err(err)?;
    let all = run.attack_summary(0);
    let mean = |a: AttackSpec| all.iter().find(|s| s.attack == a).expect("configured attack");
    let chain = [
        AttackSpec::Honest,
        AttackSpec::Sparse(0.75),
        AttackSpec::Sparse(0.5),
        AttackSpec::Sparse(0.25),
    ];
    for w in chain.windows(2) {
        ensure(mean(w[0]).mean > mean(w[1]).mean, || format!("{} not above {}", w[0], w[1]))?;
    }
    let last = mean(AttackSpec::Sparse(0.25)).mean;
    for a in [AttackSpec::Zero, AttackSpec::Random] {
        let s = mean(a);
        ensure(last > s.mean && s.mean > mean(AttackSpec::SignFlip).mean, || format!("{a} out of order"))?;
        ensure(s.mean.abs() <= 3.0 * s.stderr + 1e-12, || format!("{a}: {} +/- {}", s.mean, s.stderr))?;
    }
    let flip = mean(AttackSpec::SignFlip);
    ensure(flip.mean + 3.0 * flip.stderr < 0.0, || format!("sign flip {} +/- {}", flip.mean, flip.stderr))?;
    let late = run.attack_summary(lags[lags.len() - 1] + 1);
    let lagged: Vec<_> = lags
        .iter()
        .map(|&k| late.iter().find(|s| s.attack == AttackSpec::Lagged(k)).expect("lag"))
        .collect();
    for w in lagged.windows(2) {
        let tol = 3.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        ensure(w[1].mean <= w[0].mean + tol, || {
            format!("{} ({}) above {} ({})", w[1].attack, w[1].mean, w[0].attack, w[0].mean)
        })?;
    }
    Ok(format!(
        "honest {:.3} > sparse {:.3}/{:.3}/{:.3} > zero {:.3}, random {:.3} > flip {:.3}; lags {}",
        mean(AttackSpec::Honest).mean,
        mean(AttackSpec::Sparse(0.75)).mean,
        mean(AttackSpec::Sparse(0.5)).mean,
        last,
        mean(AttackSpec::Zero).mean,
        mean(AttackSpec::Random).mean,
        flip.mean,
        lagged.iter().map(|s| format!("{:.3}", s.mean)).collect::<Vec<_>>().join(" > ")
    ))
}

fn c11_heterogeneity() -> Check {
    let base = SimConfig {
        rounds: 5,
        tasks: 10_000,
        seed: 11,
        ..SimConfig::with_population(10, &[])
    };
    let points = heterogeneity_sweep(&[0.1, 0.5, 1.0, 5.0, 100.0], &base).map_err(err)?;
    for p in &points {
        ensure(p.max_alpha < 0.5, || format!("concentration {}: alpha {}", p.concentration, p.max_alpha))?;
        ensure(p.categorical_holds_fraction == 1.0, || {
            format!("concentration {}: holds on {}", p.concentration, p.categorical_holds_fraction)
        })?;
    }
    let mut alphas = vec![0.1; 10];
    alphas[0] = 0.5;
    let forced = SimConfig {
        noise: NoiseSpec::PerClient(alphas),
        ..base
    };
    let run = run_simulation(&forced).map_err(err)?;
    let with_zero: Vec<_> = run.verdicts().into_iter().filter(|v| v.client_a == 0 || v.client_b == 0).collect();
    ensure(!with_zero.is_empty(), || "no sampled pair contains the forced client".into())?;
    ensure(with_zero.iter().all(|v| !v.analytic_holds), || "analytic delta still categorical".into())?;
    let failed = with_zero.iter().filter(|v| !v.empirical.holds).count();
    ensure(failed > 0, || "every empirical check passed".into())?;
    Ok(format!(
        "5 levels hold on every pair; alpha = 0.5 fails {failed}/{} empirical checks",
        with_zero.len()
    ))
}

fn kfca(dir: &Path, args: &[&str]) -> Result<std::process::Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_kfca"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .map_err(err)?;
    if out.status.success() {
        Ok(out)
    } else {
        Err(format!("kfca {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn c12_scaling() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    kfca(
        dir.path(),
        &["bench", "--n-grid", "10,20,40,80", "--p-grid", "5", "--tasks", "100000", "--ca-tasks", "20000", "--repeats", "5"],
    )?;
    let fit: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("bench_fit.json")).map_err(err)?).map_err(err)?;
    let slope = |m: &str| {
        fit["fits"]
            .as_array()
            .and_then(|a| a.iter().find(|f| f["mechanism"] == m))
            .and_then(|f| f["slope_vs_n"].as_f64())
            .ok_or_else(|| format!("no fit for {m}"))
    };
    let (k, c) = (slope("kfca")?, slope("ca-empirical")?);
    ensure((0.8..=1.2).contains(&k), || format!("KFCA slope {k:.3}"))?;
    ensure((1.7..=2.3).contains(&c), || format!("estimated-delta CA slope {c:.3}"))?;
    Ok(format!("KFCA slope {k:.3}, estimated-delta CA slope {c:.3}"))
}

fn files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).map_err(err)? {
        let e = e.map_err(err)?;
        let name = e.file_name().to_string_lossy().into_owned();
        if name != "manifest.json" {
            out.push((name, std::fs::read(e.path()).map_err(err)?));
        }
    }
    out.sort();
    Ok(out)
}

fn c13_determinism() -> Check {
    let root = tempfile::tempdir().map_err(err)?;
    let reports = root.path().join("reports.csv");
    std::fs::write(&reports, "client,0,1,2,3,4,5,6,7\n0,0,1,1,0,1,0,0,1\n1,0,1,0,0,1,1,0,1\n2,1,1,1,0,0,0,0,1\n")
        .map_err(err)?;
    let reports = reports.to_string_lossy().into_owned();
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("simulate", vec!["simulate", "--set", "run.rounds=4", "--set", "run.tasks=3000", "--set", "attacks.9=sign_flip"]),
        ("simulate-d", vec!["--seed", "3", "simulate", "--set", "run.mode=kfca_d", "--set", "run.labels=3", "--set", "run.tasks=2000", "--set", "noise.concentration=0.5"]),
        ("truthfulness", vec!["--seed", "5", "truthfulness", "--labels", "3", "--delta-source", "random"]),
        ("robustness", vec!["robustness", "--trials", "30", "--tasks", "2000", "--lambdas", "0,0.3,0.6"]),
        ("shapley", vec!["shapley", "--alphas", "0.1,0.2,0.3,0.15,0.25", "--permutations", "2000", "--truncation", "0.01", "--tasks", "3000"]),
        ("delta-check", vec!["delta-check", "--reports", &reports]),
        ("commit", vec!["commit", "--reports", &reports, "--salt", "pepper"]),
    ];
    let mut checked = 0;
    for (name, args) in runs {
        let first = root.path().join(format!("{name}-first"));
        let mut a = vec!["--workers", "4"];
        a.extend(args.iter().copied());
        kfca(&first, &a)?;
        let manifest = first.join("manifest.json");
        let manifest = manifest.to_string_lossy();
        let original = files(&first)?;
        for workers in ["1", "max"] {
            let again = root.path().join(format!("{name}-{workers}"));
            kfca(&again, &["--workers", workers, "replay", &manifest, "--check"])?;
            let replayed = files(&again)?;
            ensure(replayed == original, || format!("{name}: replay with --workers {workers} differs"))?;
            checked += replayed.len();
        }
    }
    Ok(format!("7 commands replayed with 1 and max workers, {checked} files identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 13] = [
        ("CA label-flip reproduction", c01_ca_label_flip),
        ("KFCA strict truthfulness", c02_kfca_strict),
        ("CA weak truthfulness", c03_ca_weak),
        ("binary robustness closed form", c04_binary_robustness),
        ("multi-class reduction", c05_multiclass),
        ("permutation differential", c06_permutation_differential),
        ("shirking scales delta", c07_shirking),
        ("Shapley axioms and worked game", c08_shapley_exact),
        ("Monte Carlo Shapley consistency", c09_mc_shapley),
        ("attack ordering", c10_attack_ordering),
        ("categorical condition under heterogeneity", c11_heterogeneity),
        ("scaling", c12_scaling),
        ("determinism", c13_determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
