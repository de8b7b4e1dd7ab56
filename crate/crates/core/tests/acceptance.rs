// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Criteria run one after another so that wall-clock
//! measurements are not disturbed by each other.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pwbandits::cpd::{glr_statistic, GlrConfig, GlrDetector};
use pwbandits::env::{builtin_problem, PiecewiseEnv};
use pwbandits::harness::{
    check_assumptions, default_tunings, run_experiment, AlgorithmResult, ExperimentConfig,
    ExperimentResult, GlrSpec, PolicySpec, RosterEntry, Verdict,
};
use pwbandits::kl::{
    beta_threshold, h, h_inv, kl_bernoulli, kl_gaussian, klucb_upper, Divergence, ThresholdFamily,
};
use pwbandits::policies::RestartMode;
use pwbandits::statcheck::{detection_delay, false_alarm_rate, two_sample_tail, TrialConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn env(name: &str) -> PiecewiseEnv {
    builtin_problem(name).expect("builtin problem")
}

fn experiment(envname: &str, reps: usize, seed: u64, roster: Vec<RosterEntry>) -> ExperimentResult {
    let mut cfg = ExperimentConfig::new(format!("builtin:{envname}"), roster);
    cfg.repetitions = reps;
    cfg.base_seed = seed;
    cfg.stride = 1000;
    cfg.keep_curves = false;
    let e = cfg.environment(Path::new(".")).expect("environment");
    run_experiment(&cfg, &e).expect("experiment")
}

fn by_name<'a>(res: &'a ExperimentResult, name: &str) -> &'a AlgorithmResult {
    res.algorithms.iter().find(|a| a.algorithm == name).expect(name)
}

fn spec(name: &str) -> RosterEntry {
    RosterEntry::new(PolicySpec::from_name(name).unwrap())
}

/// Running totals of forced-exploration violations over every run.
#[derive(Default)]
struct SamplingTally {
    runs: usize,
    violations: u64,
}

impl SamplingTally {
    fn add(&mut self, res: &ExperimentResult) {
        for a in &res.algorithms {
            for r in &a.runs {
                if let Some(v) = r.sampling_violations {
                    self.runs += 1;
                    self.violations += v;
                }
            }
        }
    }
}

fn kernel() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..1000 {
        let mean: f64 = rng.random();
        let count = rng.random_range(1..=1000) as f64;
        let budget: f64 = rng.random();
        let q = klucb_upper(mean, count, budget);
        if q < 1.0 {
            worst = worst.max((count * kl_bernoulli(mean, q) - budget).abs());
            checked += 1;
        }
    }
    let mut pinsker_ok = true;
    for i in 0..=31 {
        for j in 0..=31 {
            let (x, y) = (i as f64 / 31.0, j as f64 / 31.0);
            pinsker_ok &= kl_bernoulli(x, y) >= kl_gaussian(x, y) - 1e-15;
        }
    }
    let mut h_err = 0.0f64;
    for i in 0..1000 {
        let u = 1.01 * (1e6f64 / 1.01).powf(i as f64 / 999.0);
        h_err = h_err.max((h_inv(h(u)).unwrap() - u).abs() / u);
    }
    let el = start.elapsed();
    outcome(
        worst <= 1e-9 && pinsker_ok && h_err <= 1e-9 && within(el, 1.0),
        format!(
            "max residual {worst:.1e} on {checked} triples, pinsker {pinsker_ok}, \
             h_inv(h) rel err {h_err:.1e}, {el:.2?}"
        ),
    )
}

/// First `n` at which some split reaches `beta(n)`, by a from-scratch
/// double loop.
fn brute_force_alarm(stream: &[f64], cfg: &GlrConfig) -> Option<usize> {
    (2..=stream.len()).find(|&n| {
        let beta = cfg.beta(n);
        beta.is_finite()
            && (1..n).any(|s| glr_statistic(&stream[..n], s, Divergence::Bernoulli) >= beta)
    })
}

fn glr_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut mismatches, mut alarms) = (0, 0);
    for i in 0..200 {
        let len = rng.random_range(2..=200);
        let cut = rng.random_range(1..=len);
        let (m0, m1): (f64, f64) = (rng.random(), rng.random());
        let stream: Vec<f64> = (0..len)
            .map(|t| {
                let m = if t < cut { m0 } else { m1 };
                if rng.random::<f64>() < m { 1.0 } else { 0.0 }
            })
            .collect();
        let delta = [0.01, 0.05, 0.2][i % 3];
        for family in [ThresholdFamily::Full, ThresholdFamily::Practical] {
            let cfg = GlrConfig::new(delta, family);
            let mut det = GlrDetector::new(cfg).unwrap();
            let online = stream.iter().position(|&x| det.step(x)).map(|p| p + 1);
            let offline = brute_force_alarm(&stream, &cfg);
            alarms += online.is_some() as usize;
            mismatches += (online != offline) as usize;
        }
    }
    let el = start.elapsed();
    outcome(
        mismatches == 0 && within(el, 30.0),
        format!("{mismatches} mismatches over 400 stream/threshold pairs ({alarms} alarms), {el:.2?}"),
    )
}

fn false_alarm() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for delta in [0.05, 0.01] {
        let mut cfg = TrialConfig::new(0.5, delta, ThresholdFamily::Full);
        cfg.n_max = 1000;
        cfg.repetitions = 2000;
        cfg.stride_s = 5;
        cfg.seed = 3;
        let r = false_alarm_rate(&cfg).unwrap();
        ok &= r.rate <= delta;
        parts.push(format!(
            "delta={delta}: {}/{} = {:.4} (CI [{:.4}, {:.4}])",
            r.alarms, r.repetitions, r.rate, r.ci_low, r.ci_high
        ));
    }
    let el = start.elapsed();
    outcome(ok && within(el, 300.0), format!("{}, {el:.2?}", parts.join("; ")))
}

fn delay() -> Outcome {
    let start = Instant::now();
    let delta = 0.01;
    let mut cfg = TrialConfig::new(0.5, delta, ThresholdFamily::Practical).with_change(0.9, 500);
    cfg.repetitions = 1000;
    cfg.seed = 4;
    let r = detection_delay(&cfg).unwrap();
    let gap: f64 = 0.4;
    let envelope = 4.0 * beta_threshold(2500, delta, ThresholdFamily::Practical) / (gap * gap);
    let p95 = r.p95.unwrap_or(usize::MAX);
    let el = start.elapsed();
    outcome(
        r.miss_rate <= 0.01 && (p95 as f64) <= envelope && within(el, 300.0),
        format!(
            "miss rate {:.3}, early {}, median {:?}, p95 {p95} <= {envelope:.1}, {el:.2?}",
            r.miss_rate, r.early, r.median
        ),
    )
}

fn two_sample() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (a, b)) in [(0.5, 0.5), (0.3, 0.8)].into_iter().enumerate() {
        let pts = two_sample_tail(100, 100, a, b, &[0.5, 1.0, 2.0], 100_000, 5 + i as u64).unwrap();
        for p in pts {
            ok &= p.ok;
            parts.push(format!("({a},{b}) u={}: {:.4} vs {:.4}", p.u, p.empirical, p.bound));
        }
    }
    let el = start.elapsed();
    outcome(ok && within(el, 60.0), format!("{}, {el:.2?}", parts.join("; ")))
}

fn table_one(pb1: &ExperimentResult, el: Duration) -> Outcome {
    let order = ["oracle", "glr-klucb-local", "glr-klucb-global", "cusum-klucb", "klucb"];
    let means: Vec<f64> = order.iter().map(|n| by_name(pb1, n).mean_final_regret).collect();
    let sorted = means.windows(2).all(|w| w[0] < w[1]);
    let local = means[1];
    let listing: Vec<String> = order.iter().zip(&means).map(|(n, m)| format!("{n} {m:.1}")).collect();
    outcome(
        sorted && (40.0..=130.0).contains(&local) && within(el, 900.0),
        format!("{} (1000 reps), {el:.2?}", listing.join(" < ")),
    )
}

fn local_vs_global(pb1: &ExperimentResult, tally: &mut SamplingTally) -> Outcome {
    let pb2 = experiment(
        "pb2",
        1000,
        8,
        vec![spec("glr-klucb-local"), spec("glr-klucb-global")],
    );
    tally.add(&pb2);
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, res) in [("problem 1", pb1), ("problem 2", &pb2)] {
        let l = by_name(res, "glr-klucb-local").mean_final_regret;
        let g = by_name(res, "glr-klucb-global").mean_final_regret;
        ok &= l <= g;
        parts.push(format!("{name}: local {l:.1} vs global {g:.1}"));
    }
    outcome(ok, parts.join("; "))
}

fn glr_entry(label: &str, spec: GlrSpec) -> RosterEntry {
    RosterEntry::labeled(label, PolicySpec::GlrKlucbLocal(spec))
}

fn subsampling(tally: &mut SamplingTally) -> Outcome {
    let stride = |d: usize| GlrSpec {
        stride_n: Some(d),
        stride_s: Some(d),
        ..GlrSpec::default()
    };
    let mut cfg = ExperimentConfig::new(
        "builtin:pb1",
        vec![glr_entry("d=1", stride(1)), glr_entry("d=20", stride(20))],
    );
    cfg.repetitions = 50;
    cfg.base_seed = 9;
    cfg.stride = 1000;
    cfg.parallel = 1;
    cfg.keep_curves = false;
    let e = cfg.environment(Path::new(".")).unwrap();
    let res = run_experiment(&cfg, &e).unwrap();
    tally.add(&res);
    let (full, sub) = (by_name(&res, "d=1"), by_name(&res, "d=20"));
    let speedup = full.mean_wall_ms / sub.mean_wall_ms;
    let ratio = sub.mean_final_regret / full.mean_final_regret;
    outcome(
        speedup >= 10.0 && ratio <= 1.5,
        format!(
            "d=1: {:.1} regret, {:.1} ms/run; d=20: {:.1} regret, {:.1} ms/run; \
             speedup {speedup:.1}x, regret ratio {ratio:.2}",
            full.mean_final_regret, full.mean_wall_ms, sub.mean_final_regret, sub.mean_wall_ms
        ),
    )
}

fn alpha0_sweep(tally: &mut SamplingTally) -> Outcome {
    let roster = [0.0, 0.01, 0.1, 1.0]
        .iter()
        .map(|&a0| {
            glr_entry(
                &format!("alpha0={a0}"),
                GlrSpec {
                    alpha0: Some(a0),
                    ..GlrSpec::default()
                },
            )
        })
        .collect();
    let res = experiment("pb1", 200, 10, roster);
    tally.add(&res);
    let means: Vec<f64> = res.algorithms.iter().map(|a| a.mean_final_regret).collect();
    let max = means.iter().cloned().fold(f64::MIN, f64::max);
    let min = means.iter().cloned().fold(f64::MAX, f64::min);
    let listing: Vec<String> = res
        .algorithms
        .iter()
        .map(|a| format!("{} {:.1}", a.algorithm, a.mean_final_regret))
        .collect();
    outcome(
        max / min <= 2.0,
        format!("{}; max/min {:.2}", listing.join(", "), max / min),
    )
}

fn assumptions() -> Outcome {
    let pb1 = env("pb1");
    let tun = default_tunings(&pb1.metadata(), true, RestartMode::Local, 1.0).unwrap();
    let r1 = check_assumptions(&pb1, tun.alpha, tun.delta, ThresholdFamily::Full).unwrap();
    let definite = |v: Verdict| v != Verdict::NotCheckable;
    let pb3 = env("pb3");
    let t3 = default_tunings(&pb3.metadata(), true, RestartMode::Local, 1.0).unwrap();
    let r3 = check_assumptions(&pb3, t3.alpha, t3.delta, ThresholdFamily::Full).unwrap();
    outcome(
        definite(r1.global) && definite(r1.local) && r3.violations() >= 1,
        format!(
            "problem 1: global {:?}, local {:?} ({} violations); problem 3: {} violations",
            r1.global,
            r1.local,
            r1.violations(),
            r3.violations()
        ),
    )
}

fn forced_exploration(tally: &mut SamplingTally) -> Outcome {
    for (name, reps) in [("pb1", 20), ("pb2", 20), ("pb3", 5), ("pb4", 20)] {
        let res = experiment(
            name,
            reps,
            11,
            vec![spec("glr-klucb-local"), spec("glr-klucb-global"), spec("m-klucb")],
        );
        tally.add(&res);
    }
    outcome(
        tally.runs > 0 && tally.violations == 0,
        format!("{} violations over {} runs with alpha > 0", tally.violations, tally.runs),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: usize, what: &str, o: Outcome| {
        let tag = if o.ok { "PASS" } else { "FAIL" };
        failed += !o.ok as usize;
        println!("{tag} criterion {id:>2} ({what}): {}", o.detail);
    };
    report(1, "kernel correctness", kernel());
    report(2, "GLR brute-force equivalence", glr_equivalence());
    report(3, "false-alarm rate", false_alarm());
    report(4, "detection delay", delay());
    report(5, "two-sample tail", two_sample());

    let mut tally = SamplingTally::default();
    let start = Instant::now();
    let pb1 = experiment(
        "pb1",
        1000,
        7,
        ["oracle", "glr-klucb-local", "glr-klucb-global", "cusum-klucb", "klucb"]
            .into_iter()
            .map(spec)
            .collect(),
    );
    let el = start.elapsed();
    tally.add(&pb1);
    report(7, "problem 1 ordering", table_one(&pb1, el));
    report(8, "local <= global", local_vs_global(&pb1, &mut tally));
    report(9, "sub-sampling trade-off", subsampling(&mut tally));
    report(10, "alpha0 robustness", alpha0_sweep(&mut tally));
    report(11, "assumption checker", assumptions());
    report(6, "forced-exploration invariant", forced_exploration(&mut tally));

    println!("{failed} of 11 criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
