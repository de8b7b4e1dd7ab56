// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded simulation runs, repetitions, aggregation and result files.

mod output;
mod spec;
mod tunings;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use output::{emit_results, OutputFormat};
pub use spec::{glr_params, GlrSpec, PolicySpec, DEFAULT_ALPHA0, DEFAULT_GLR_STRIDE, POLICY_NAMES};
pub use tunings::{
    check_assumptions, default_tunings, detection_window, AssumptionReport, SpacingCheck, Tunings,
    Verdict,
};

use crate::env::{bernoulli, load_env, PiecewiseEnv};
use crate::error::{Error, Result};
use crate::policies::{Policy, RestartEvent};

/// Upper bound applied to computed exploration rates.
pub const ALPHA_CAP: f64 = 0.99;

/// SplitMix64 finaliser, used to derive independent seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of repetition `rep`.
pub fn rep_seed(base_seed: u64, rep: usize) -> u64 {
    base_seed ^ splitmix64(rep as u64)
}

/// Seed of the policy's private generator for a run seeded with `seed`.
pub fn policy_seed(seed: u64) -> u64 {
    splitmix64(seed ^ 0x706F_6C69_6379_0000)
}

/// Rounds at which cumulative regret is recorded: every `stride`-th round,
/// plus the horizon.
pub fn recorded_times(horizon: u64, stride: u64) -> Vec<u64> {
    let stride = stride.max(1);
    let mut times: Vec<u64> = (1..=horizon / stride).map(|i| i * stride).collect();
    if times.last() != Some(&horizon) {
        times.push(horizon);
    }
    times
}

/// Pseudo-regret of a fixed sequence of choices (one per round).
pub fn pseudo_regret(env: &PiecewiseEnv, choices: &[usize]) -> f64 {
    choices
        .iter()
        .zip(1u64..)
        .map(|(&a, t)| {
            let m = env.means_at(t);
            env.oracle_mean(t).1 - m[a]
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub t: u64,
    pub event: RestartEvent,
}

/// Outcome of one simulated run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretCurve {
    pub seed: u64,
    /// Cumulative pseudo-regret at [`recorded_times`].
    pub cum_regret: Vec<f64>,
    pub final_regret: f64,
    pub restarts: Vec<RestartRecord>,
    /// Violations of the forced-exploration sampling bound, for policies that
    /// use forced exploration.
    pub sampling_violations: Option<u64>,
    pub wall_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub stride: u64,
    pub record_timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            stride: 10,
            record_timing: true,
        }
    }
}

/// Tracks, per arm, the running maximum of `n_i(s) - (alpha / K) s` since the
/// arm's last restart. A pair `s < t` violates
/// `n_i(t) - n_i(s) >= floor((alpha / K)(t - s))` exactly when
/// `n_i(t) - (alpha/K) t <= max_s (n_i(s) - (alpha/K) s) - 1`, because the
/// left side of the bound is an integer.
struct SamplingCheck {
    rate: f64,
    counts: Vec<u64>,
    best: Vec<f64>,
    violations: u64,
}

impl SamplingCheck {
    fn new(arms: usize, alpha: f64) -> Self {
        Self {
            rate: alpha / arms as f64,
            counts: vec![0; arms],
            best: vec![0.0; arms],
            violations: 0,
        }
    }

    fn observe(&mut self, t: u64, arm: usize, event: RestartEvent) {
        self.counts[arm] += 1;
        let reset = |c: &mut Self, i: usize| {
            c.counts[i] = 0;
            c.best[i] = -c.rate * t as f64;
        };
        match event {
            RestartEvent::None => {}
            RestartEvent::Local(i) => reset(self, i),
            RestartEvent::Global => (0..self.counts.len()).for_each(|i| reset(self, i)),
        }
        for i in 0..self.counts.len() {
            let g = self.counts[i] as f64 - self.rate * t as f64;
            if g <= self.best[i] - 1.0 - 1e-9 {
                self.violations += 1;
            }
            if g > self.best[i] {
                self.best[i] = g;
            }
        }
    }
}

/// Plays `policy` on `env` for the whole horizon.
pub fn simulate(
    env: &PiecewiseEnv,
    policy: &mut dyn Policy,
    seed: u64,
    opts: RunOptions,
) -> Result<RegretCurve> {
    if policy.arms() != env.arms() {
        return Err(Error::validation(format!(
            "policy {} has {} arms, environment has {}",
            policy.name(),
            policy.arms(),
            env.arms()
        )));
    }
    let start = opts.record_timing.then(Instant::now);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let segments = env.segments();
    let best: Vec<f64> = segments
        .iter()
        .map(|s| crate::env::argmax(&s.means).1)
        .collect();
    let stride = opts.stride.max(1);
    let horizon = env.horizon();
    let mut cum_regret = Vec::with_capacity((horizon / stride + 1) as usize);
    let mut restarts = Vec::new();
    let mut check = policy
        .forced_exploration_rate()
        .map(|a| SamplingCheck::new(env.arms(), a));
    let mut seg = 0usize;
    let mut regret = 0.0;
    for t in 1..=horizon {
        while seg + 1 < segments.len() && segments[seg + 1].start <= t {
            seg += 1;
        }
        let arm = policy.choose(t);
        if arm >= env.arms() {
            return Err(Error::Runtime(format!(
                "policy {} chose arm {arm} at t = {t}",
                policy.name()
            )));
        }
        let mu = segments[seg].means[arm];
        let reward = bernoulli(mu, &mut rng);
        let event = policy.update(arm, reward, t);
        regret += best[seg] - mu;
        if event != RestartEvent::None {
            restarts.push(RestartRecord { t, event });
        }
        if let Some(c) = check.as_mut() {
            c.observe(t, arm, event);
        }
        if t % stride == 0 || t == horizon {
            cum_regret.push(regret);
        }
    }
    Ok(RegretCurve {
        seed,
        cum_regret,
        final_regret: regret,
        restarts,
        sampling_violations: check.map(|c| c.violations),
        wall_ms: start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3),
    })
}

/// Builds the policy described by `spec` and runs it with `seed`.
pub fn run_single(
    env: &PiecewiseEnv,
    spec: &PolicySpec,
    seed: u64,
    opts: RunOptions,
) -> Result<RegretCurve> {
    let mut policy = spec.build(env, policy_seed(seed))?;
    simulate(env, policy.as_mut(), seed, opts)
}

/// Roster entry: a policy plus an optional display label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub spec: PolicySpec,
}

impl RosterEntry {
    pub fn new(spec: PolicySpec) -> Self {
        Self { label: None, spec }
    }

    pub fn labeled(label: impl Into<String>, spec: PolicySpec) -> Self {
        Self {
            label: Some(label.into()),
            spec,
        }
    }

    pub fn display_name(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.spec.name().to_string())
    }
}

fn default_reps() -> usize {
    100
}
fn default_stride() -> u64 {
    10
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Environment file (relative to the config file) or `builtin:pbN`.
    pub environment: String,
    /// Optional horizon override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Record cumulative regret every `stride` rounds.
    #[serde(default = "default_stride")]
    pub stride: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub parallel: usize,
    /// When false, wall-clock times are reported as 0 so result documents
    /// are bit-identical across runs.
    #[serde(default = "yes")]
    pub record_timing: bool,
    /// Keep every per-run curve (needed for the curves file).
    #[serde(default = "yes")]
    pub keep_curves: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub algorithms: Vec<RosterEntry>,
}

impl ExperimentConfig {
    pub fn new(environment: impl Into<String>, algorithms: Vec<RosterEntry>) -> Self {
        Self {
            environment: environment.into(),
            horizon: None,
            repetitions: default_reps(),
            base_seed: 0,
            stride: default_stride(),
            parallel: 0,
            record_timing: true,
            keep_curves: true,
            output_dir: None,
            format: OutputFormat::default(),
            algorithms,
        }
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML config and returns it with the directory that relative
    /// paths are resolved against.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::parse(&text, &path.display().to_string())?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::validation("repetitions must be >= 1"));
        }
        if self.stride == 0 {
            return Err(Error::validation("stride must be >= 1"));
        }
        if self.horizon == Some(0) {
            return Err(Error::validation("horizon must be >= 1"));
        }
        Ok(())
    }

    /// Loads the environment, resolving relative paths against `base`.
    pub fn environment(&self, base: &Path) -> Result<PiecewiseEnv> {
        let env = if self.environment.starts_with("builtin:") {
            load_env(&self.environment)?
        } else {
            let p = Path::new(&self.environment);
            load_env(if p.is_absolute() { p.to_path_buf() } else { base.join(p) })?
        };
        match self.horizon {
            Some(h) if h != env.horizon() => env.with_horizon(h),
            _ => Ok(env),
        }
    }
}

/// Per-run numbers kept in results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rep: usize,
    pub seed: u64,
    pub final_regret: f64,
    pub restarts: usize,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling_violations: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmResult {
    pub algorithm: String,
    pub spec: PolicySpec,
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
    pub mean_restarts: f64,
    pub mean_wall_ms: f64,
    /// Total forced-exploration violations (`None` if not applicable).
    pub sampling_violations: Option<u64>,
    pub mean_curve: Vec<f64>,
    pub runs: Vec<RunSummary>,
    /// Per-run curves, in repetition order (empty unless kept).
    #[serde(default)]
    pub curves: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub horizon: u64,
    pub times: Vec<u64>,
    pub algorithms: Vec<AlgorithmResult>,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Aggregates ordered runs of one algorithm.
pub fn aggregate(
    entry: &RosterEntry,
    runs: Vec<RegretCurve>,
    keep_curves: bool,
) -> AlgorithmResult {
    let n = runs.len() as f64;
    let finals: Vec<f64> = runs.iter().map(|r| r.final_regret).collect();
    let (mean_final_regret, std_final_regret) = mean_std(&finals);
    let len = runs.first().map_or(0, |r| r.cum_regret.len());
    let mut mean_curve = vec![0.0; len];
    for r in &runs {
        for (m, v) in mean_curve.iter_mut().zip(&r.cum_regret) {
            *m += v;
        }
    }
    mean_curve.iter_mut().for_each(|m| *m /= n);
    let sampling_violations = runs
        .iter()
        .map(|r| r.sampling_violations)
        .try_fold(0u64, |acc, v| v.map(|v| acc + v));
    let summaries = runs
        .iter()
        .enumerate()
        .map(|(rep, r)| RunSummary {
            rep,
            seed: r.seed,
            final_regret: r.final_regret,
            restarts: r.restarts.len(),
            wall_ms: r.wall_ms,
            sampling_violations: r.sampling_violations,
        })
        .collect();
    AlgorithmResult {
        algorithm: entry.display_name(),
        spec: entry.spec.clone(),
        mean_final_regret,
        std_final_regret,
        mean_restarts: runs.iter().map(|r| r.restarts.len() as f64).sum::<f64>() / n,
        mean_wall_ms: runs.iter().map(|r| r.wall_ms).sum::<f64>() / n,
        sampling_violations,
        mean_curve,
        runs: summaries,
        curves: if keep_curves {
            runs.into_iter().map(|r| r.cum_regret).collect()
        } else {
            Vec::new()
        },
    }
}

/// Runs every roster entry for `config.repetitions` seeded repetitions.
///
/// Repetitions run on a pool of `config.parallel` threads, and results are
/// reduced in repetition order, so aggregates do not depend on the number
/// of threads. Any failing run aborts the whole experiment.
pub fn run_experiment(config: &ExperimentConfig, env: &PiecewiseEnv) -> Result<ExperimentResult> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if config.parallel > 0 {
        builder = builder.num_threads(config.parallel);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Runtime(format!("cannot start worker pool: {e}")))?;
    let opts = RunOptions {
        stride: config.stride,
        record_timing: config.record_timing,
    };
    // Fail fast on bad parameters before spending time on other entries.
    for entry in &config.algorithms {
        entry.spec.build(env, 0)?;
    }
    let mut algorithms = Vec::with_capacity(config.algorithms.len());
    for entry in &config.algorithms {
        let runs = pool.install(|| {
            (0..config.repetitions)
                .into_par_iter()
                .map(|rep| run_single(env, &entry.spec, rep_seed(config.base_seed, rep), opts))
                .collect::<Result<Vec<_>>>()
        })?;
        algorithms.push(aggregate(entry, runs, config.keep_curves));
    }
    Ok(ExperimentResult {
        config: config.clone(),
        horizon: env.horizon(),
        times: recorded_times(env.horizon(), config.stride),
        algorithms,
    })
}
