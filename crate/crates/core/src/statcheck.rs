// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte-Carlo checks of the GLR detector and of the two-sample
//! concentration bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::cpd::{ChangeDetector, GlrConfig, GlrDetector};
use crate::env::bernoulli;
use crate::error::{Error, Result};
use crate::harness::rep_seed;
use crate::kl::{Divergence, ThresholdFamily};

/// One family of detector trials on Bernoulli streams.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub mu0: f64,
    /// Post-change mean (delay trials only).
    pub mu1: f64,
    /// Number of pre-change samples (delay trials only).
    pub tau: usize,
    /// Samples per stream: the whole stream for false-alarm trials, the
    /// post-change part for delay trials.
    pub n_max: usize,
    pub repetitions: usize,
    pub delta: f64,
    pub threshold: ThresholdFamily,
    pub divergence: Divergence,
    pub stride_n: usize,
    pub stride_s: usize,
    pub seed: u64,
}

impl TrialConfig {
    /// False-alarm trial defaults: 5000 samples, 1000 repetitions, full scan.
    pub fn new(mu0: f64, delta: f64, threshold: ThresholdFamily) -> Self {
        Self {
            mu0,
            mu1: mu0,
            tau: 0,
            n_max: 5000,
            repetitions: 1000,
            delta,
            threshold,
            divergence: Divergence::Bernoulli,
            stride_n: 1,
            stride_s: 1,
            seed: 0,
        }
    }

    /// Delay trial defaults: `tau` pre-change samples, 2000 after.
    pub fn with_change(mut self, mu1: f64, tau: usize) -> Self {
        self.mu1 = mu1;
        self.tau = tau;
        self.n_max = 2000;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("mu0", self.mu0), ("mu1", self.mu1)] {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::validation(format!("{name} must lie in [0, 1], got {m}")));
            }
        }
        if self.repetitions == 0 || self.n_max == 0 {
            return Err(Error::validation("repetitions and n_max must be >= 1"));
        }
        self.detector().validate()
    }

    pub fn detector(&self) -> GlrConfig {
        GlrConfig::new(self.delta, self.threshold)
            .with_strides(self.stride_n, self.stride_s)
            .with_divergence(self.divergence)
    }

    fn rng(&self, rep: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(rep_seed(self.seed, rep))
    }
}

/// Two-sided Clopper-Pearson interval for `k` successes out of `n`.
pub fn clopper_pearson(k: usize, n: usize, level: f64) -> (f64, f64) {
    let a = (1.0 - level) / 2.0;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(kf, nf - kf + 1.0).map_or(0.0, |b| b.inverse_cdf(a))
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(kf + 1.0, nf - kf).map_or(1.0, |b| b.inverse_cdf(1.0 - a))
    };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FalseAlarmReport {
    pub repetitions: usize,
    pub alarms: usize,
    pub rate: f64,
    /// 95% Clopper-Pearson interval.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Binomial standard error of `rate`.
    pub std_error: f64,
    pub delta: f64,
}

/// Index (1-based) of the first alarm on `stream`, if any.
fn first_alarm(cfg: &GlrConfig, stream: impl Iterator<Item = f64>) -> Result<Option<usize>> {
    let mut det = GlrDetector::new(*cfg)?;
    for (i, x) in stream.enumerate() {
        if det.push(x) {
            return Ok(Some(i + 1));
        }
    }
    Ok(None)
}

/// Fraction of iid Bernoulli(`mu0`) streams of length `n_max` on which the
/// detector fires.
pub fn false_alarm_rate(cfg: &TrialConfig) -> Result<FalseAlarmReport> {
    cfg.validate()?;
    let det = cfg.detector();
    let fired = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = cfg.rng(rep);
            first_alarm(&det, (0..cfg.n_max).map(|_| bernoulli(cfg.mu0, &mut rng)))
                .map(|a| a.is_some())
        })
        .collect::<Result<Vec<bool>>>()?;
    let alarms = fired.iter().filter(|&&f| f).count();
    let n = cfg.repetitions;
    let rate = alarms as f64 / n as f64;
    let (ci_low, ci_high) = clopper_pearson(alarms, n, 0.95);
    Ok(FalseAlarmReport {
        repetitions: n,
        alarms,
        rate,
        ci_low,
        ci_high,
        std_error: (rate * (1.0 - rate) / n as f64).sqrt(),
        delta: cfg.delta,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayReport {
    pub repetitions: usize,
    /// Alarms raised before the change.
    pub early: usize,
    /// Streams with no alarm at all.
    pub misses: usize,
    pub miss_rate: f64,
    /// Sorted delays (alarm index minus `tau`) of post-change detections.
    pub delays: Vec<usize>,
    pub median: Option<usize>,
    pub p95: Option<usize>,
}

/// Nearest-rank quantile of sorted data.
pub fn quantile(sorted: &[usize], p: f64) -> Option<usize> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (p * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

/// Detection delay on streams of `tau` Bernoulli(`mu0`) samples followed by
/// `n_max` Bernoulli(`mu1`) samples.
pub fn detection_delay(cfg: &TrialConfig) -> Result<DelayReport> {
    cfg.validate()?;
    let det = cfg.detector();
    let alarms = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = cfg.rng(rep);
            let stream = (0..cfg.tau + cfg.n_max).map(|i| {
                let mu = if i < cfg.tau { cfg.mu0 } else { cfg.mu1 };
                bernoulli(mu, &mut rng)
            });
            first_alarm(&det, stream)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut delays = Vec::new();
    let (mut early, mut misses) = (0, 0);
    for a in alarms {
        match a {
            None => misses += 1,
            Some(i) if i <= cfg.tau => early += 1,
            Some(i) => delays.push(i - cfg.tau),
        }
    }
    delays.sort_unstable();
    Ok(DelayReport {
        repetitions: cfg.repetitions,
        early,
        misses,
        miss_rate: misses as f64 / cfg.repetitions as f64,
        median: quantile(&delays, 0.5),
        p95: quantile(&delays, 0.95),
        delays,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub u: f64,
    pub empirical: f64,
    /// `2 exp(-2u)`.
    pub bound: f64,
    pub std_error: f64,
    /// `empirical <= bound + 3 std_error`.
    pub ok: bool,
}

/// Empirical tail of `(s r / (s + r)) (mean_a - mean_b - (mu_a - mu_b))^2`
/// for `s` Bernoulli(`mu_a`) and `r` Bernoulli(`mu_b`) samples, against the
/// sub-Gaussian bound `2 exp(-2u)`.
pub fn two_sample_tail(
    s: u64,
    r: u64,
    mu_a: f64,
    mu_b: f64,
    u_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<TailPoint>> {
    if s == 0 || r == 0 || reps == 0 {
        return Err(Error::validation("s, r and reps must be >= 1"));
    }
    let binom = |m: f64, n: u64| {
        Binomial::new(n, m).map_err(|e| Error::validation(format!("bad mean {m}: {e}")))
    };
    let (da, db) = (binom(mu_a, s)?, binom(mu_b, r)?);
    let weight = (s * r) as f64 / (s + r) as f64;
    let gap = mu_a - mu_b;
    let stats: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(rep_seed(seed, rep));
            let ma = da.sample(&mut rng) as f64 / s as f64;
            let mb = db.sample(&mut rng) as f64 / r as f64;
            weight * (ma - mb - gap).powi(2)
        })
        .collect();
    Ok(u_grid
        .iter()
        .map(|&u| {
            let p = stats.iter().filter(|&&x| x >= u).count() as f64 / reps as f64;
            let bound = 2.0 * (-2.0 * u).exp();
            let std_error = (p * (1.0 - p) / reps as f64).sqrt();
            TailPoint {
                u,
                empirical: p,
                bound,
                std_error,
                ok: p <= bound + 3.0 * std_error,
            }
        })
        .collect())
}

/// Draws one Bernoulli stream; exposed for paired comparisons.
pub fn bernoulli_stream(mu: f64, len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| bernoulli(mu, &mut rng)).collect()
}
