// SPDX-License-Identifier: MIT OR Apache-2.0

//! Bernoulli (and Gaussian) GLR change-point detector.
//!
//! At buffer length `n`, the statistic for a split `s` is
//! `s * d(mean[1..s], mean[1..n]) + (n - s) * d(mean[s+1..n], mean[1..n])`
//! and a change is reported once its supremum over the candidate splits
//! reaches `beta(n, delta)`.
//!
//! Two sub-sampling knobs keep the scan cheap: the test only runs when
//! `n % stride_n == 0`, and only splits that are multiples of `stride_s`
//! are considered. Both restrict the set of `(n, s)` pairs, so the
//! false-alarm control of the full scan carries over unchanged.

use serde::{Deserialize, Serialize};

use super::ChangeDetector;
use crate::error::{Error, Result};
use crate::kl::{beta_threshold, Divergence, ThresholdFamily};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlrConfig {
    pub delta: f64,
    #[serde(default)]
    pub threshold: ThresholdFamily,
    #[serde(default)]
    pub divergence: Divergence,
    /// Test only when the buffer length is a multiple of this.
    #[serde(default = "one")]
    pub stride_n: usize,
    /// Only consider splits that are multiples of this.
    #[serde(default = "one")]
    pub stride_s: usize,
}

fn one() -> usize {
    1
}

impl GlrConfig {
    pub fn new(delta: f64, threshold: ThresholdFamily) -> Self {
        Self {
            delta,
            threshold,
            divergence: Divergence::Bernoulli,
            stride_n: 1,
            stride_s: 1,
        }
    }

    pub fn with_strides(mut self, stride_n: usize, stride_s: usize) -> Self {
        self.stride_n = stride_n;
        self.stride_s = stride_s;
        self
    }

    pub fn with_divergence(mut self, divergence: Divergence) -> Self {
        self.divergence = divergence;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::validation(format!(
                "GLR delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.stride_n == 0 || self.stride_s == 0 {
            return Err(Error::validation("GLR strides must be >= 1"));
        }
        Ok(())
    }

    pub fn beta(&self, n: usize) -> f64 {
        beta_threshold(n as u64, self.delta, self.threshold)
    }
}

/// Two-segment statistic for one split, computed from scratch.
///
/// `split` is the length of the left segment and must satisfy
/// `1 <= split < samples.len()`.
pub fn glr_statistic(samples: &[f64], split: usize, divergence: Divergence) -> f64 {
    let n = samples.len();
    assert!(split >= 1 && split < n, "split {split} outside [1, {n})");
    let left: f64 = samples[..split].iter().sum::<f64>() / split as f64;
    let right: f64 = samples[split..].iter().sum::<f64>() / (n - split) as f64;
    let pooled: f64 = samples.iter().sum::<f64>() / n as f64;
    split as f64 * divergence.eval(left, pooled)
        + (n - split) as f64 * divergence.eval(right, pooled)
}

/// Streaming GLR detector over an append-only reward buffer.
#[derive(Clone, Debug)]
pub struct GlrDetector {
    config: GlrConfig,
    samples: Vec<f64>,
    /// `prefix[k]` is the sum of the first `k` samples.
    prefix: Vec<f64>,
}

impl GlrDetector {
    pub fn new(config: GlrConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            samples: Vec::new(),
            prefix: vec![0.0],
        })
    }

    pub fn config(&self) -> &GlrConfig {
        &self.config
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Appends a reward and runs the test if this buffer length is scheduled.
    pub fn step(&mut self, reward: f64) -> bool {
        debug_assert!((0.0..=1.0).contains(&reward));
        self.samples.push(reward);
        let last = *self.prefix.last().unwrap_or(&0.0);
        self.prefix.push(last + reward);

        let n = self.samples.len();
        if n < 2 || n % self.config.stride_n != 0 {
            return false;
        }
        let beta = self.config.beta(n);
        if !beta.is_finite() {
            return false;
        }
        self.scan(|stat| stat >= beta)
    }

    /// Supremum of the statistic over the candidate splits of the current buffer,
    /// ignoring the `stride_n` schedule. Returns `(value, split)`.
    pub fn sup_statistic(&self) -> (f64, Option<usize>) {
        let n = self.samples.len();
        if n < 2 {
            return (0.0, None);
        }
        let pooled = self.pooled_mean();
        let mut best = (0.0, None);
        self.walk_splits(|s, left, right| {
            let stat = self.split_statistic(n, s, left, right, pooled);
            if best.1.is_none() || stat > best.0 {
                best = (stat, Some(s));
            }
            false
        });
        best
    }

    /// Split means for every candidate split, produced by the sliding update.
    /// Exposed so tests can compare against a from-scratch recomputation.
    pub fn sliding_means(&self) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        self.walk_splits(|s, left, right| {
            out.push((s, left, right));
            false
        });
        out
    }

    fn pooled_mean(&self) -> f64 {
        let n = self.samples.len();
        (self.prefix[n] / n as f64).clamp(0.0, 1.0)
    }

    #[inline]
    fn split_statistic(&self, n: usize, s: usize, left: f64, right: f64, pooled: f64) -> f64 {
        let d = self.config.divergence;
        s as f64 * d.eval(left, pooled) + (n - s) as f64 * d.eval(right, pooled)
    }

    /// Walks the candidate splits in order, stopping early once `stop` is true.
    fn scan(&self, mut stop: impl FnMut(f64) -> bool) -> bool {
        let n = self.samples.len();
        if n < 2 {
            return false;
        }
        let pooled = self.pooled_mean();
        self.walk_splits(|s, left, right| stop(self.split_statistic(n, s, left, right, pooled)))
    }

    /// Sliding left/right means: starting from an empty left segment, each
    /// move of the split folds the next block of `stride_s` samples from the
    /// right mean into the left mean in O(1).
    fn walk_splits(&self, mut visit: impl FnMut(usize, f64, f64) -> bool) -> bool {
        let n = self.samples.len();
        let stride = self.config.stride_s;
        if n < 2 {
            return false;
        }
        let mut left = 0.0;
        let mut right = self.prefix[n] / n as f64;
        let mut s = 0usize;
        while s + stride < n {
            let block = self.prefix[s + stride] - self.prefix[s];
            let next = s + stride;
            left = (s as f64 * left + block) / next as f64;
            right = ((n - s) as f64 * right - block) / (n - next) as f64;
            s = next;
            if visit(s, left.clamp(0.0, 1.0), right.clamp(0.0, 1.0)) {
                return true;
            }
        }
        false
    }
}

impl ChangeDetector for GlrDetector {
    fn push(&mut self, reward: f64) -> bool {
        self.step(reward)
    }

    fn reset(&mut self) {
        self.samples.clear();
        self.prefix.clear();
        self.prefix.push(0.0);
    }

    fn len(&self) -> usize {
        self.samples.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// First `n` at which some `(n, s)` pair crosses the threshold, by an
    /// exhaustive from-scratch double loop.
    fn offline_first_detection(stream: &[f64], cfg: &GlrConfig) -> Option<usize> {
        for n in 2..=stream.len() {
            if n % cfg.stride_n != 0 {
                continue;
            }
            let beta = cfg.beta(n);
            let hit = (1..n)
                .filter(|s| s % cfg.stride_s == 0)
                .any(|s| glr_statistic(&stream[..n], s, cfg.divergence) >= beta);
            if hit {
                return Some(n);
            }
        }
        None
    }

    fn online_first_detection(stream: &[f64], cfg: GlrConfig) -> Option<usize> {
        let mut det = GlrDetector::new(cfg).unwrap();
        stream
            .iter()
            .position(|&x| det.step(x))
            .map(|i| i + 1)
    }

    #[test]
    fn statistic_examples() {
        let ones = vec![1.0; 10];
        for s in 1..10 {
            assert_eq!(glr_statistic(&ones, s, Divergence::Bernoulli), 0.0);
        }
        assert_abs_diff_eq!(
            glr_statistic(&[0.0, 1.0], 1, Divergence::Bernoulli),
            2.0 * 2f64.ln(),
            epsilon = 1e-12
        );
        let mut step = vec![0.0; 20];
        step.extend(vec![1.0; 20]);
        assert_abs_diff_eq!(
            glr_statistic(&step, 20, Divergence::Bernoulli),
            40.0 * 2f64.ln(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn fires_on_step_stream() {
        let mut stream = vec![0.0; 40];
        stream.extend(vec![1.0; 40]);
        let cfg = GlrConfig::new(0.1, ThresholdFamily::Practical);
        let online = online_first_detection(&stream, cfg);
        assert_abs_diff_eq!(cfg.beta(80), 9.974_237_333_672_978, epsilon = 1e-9);
        assert!(online.is_some_and(|n| n <= 80));
        assert_eq!(online, offline_first_detection(&stream, &cfg));
        assert!(online.unwrap() > 40);
    }

    #[test]
    fn constant_streams_never_fire() {
        for value in [0.0, 1.0, 0.5] {
            for (dn, ds) in [(1, 1), (5, 3), (20, 20)] {
                let cfg = GlrConfig::new(0.5, ThresholdFamily::Practical).with_strides(dn, ds);
                let mut det = GlrDetector::new(cfg).unwrap();
                assert!((0..500).all(|_| !det.step(value)));
            }
        }
    }

    #[test]
    fn not_evaluated_off_schedule() {
        let cfg = GlrConfig::new(0.1, ThresholdFamily::Practical).with_strides(7, 1);
        let mut stream = vec![0.0; 40];
        stream.extend(vec![1.0; 40]);
        let n = online_first_detection(&stream, cfg).unwrap();
        assert_eq!(n % 7, 0);
        assert_eq!(Some(n), offline_first_detection(&stream, &cfg));
    }

    #[test]
    fn sliding_means_match_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for stride in [1, 3, 10] {
            let cfg = GlrConfig::new(0.1, ThresholdFamily::Infinite).with_strides(1, stride);
            let mut det = GlrDetector::new(cfg).unwrap();
            let stream: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
            for &x in &stream {
                det.step(x);
            }
            let means = det.sliding_means();
            assert_eq!(means.len(), (stream.len() - 1) / stride);
            for (s, left, right) in means {
                let l: f64 = stream[..s].iter().sum::<f64>() / s as f64;
                let r: f64 = stream[s..].iter().sum::<f64>() / (stream.len() - s) as f64;
                assert!((left - l).abs() <= 1e-9, "s={s}");
                assert!((right - r).abs() <= 1e-9, "s={s}");
            }
        }
    }

    #[test]
    fn matches_brute_force_on_random_streams() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..60 {
            let len = rng.random_range(2..=150);
            let change = rng.random_range(1..len);
            let (p0, p1) = (rng.random::<f64>(), rng.random::<f64>());
            let stream: Vec<f64> = (0..len)
                .map(|i| {
                    let p = if i < change { p0 } else { p1 };
                    f64::from(rng.random::<f64>() < p)
                })
                .collect();
            for family in [ThresholdFamily::Practical, ThresholdFamily::Full] {
                let delta = [0.01, 0.1, 0.5][trial % 3];
                let cfg = GlrConfig::new(delta, family);
                assert_eq!(
                    online_first_detection(&stream, cfg),
                    offline_first_detection(&stream, &cfg),
                    "trial {trial}"
                );
            }
        }
    }

    #[test]
    fn subsampled_never_fires_before_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let stream: Vec<f64> = (0..600)
                .map(|i| {
                    let p = if i < 300 { 0.3 } else { 0.8 };
                    f64::from(rng.random::<f64>() < p)
                })
                .collect();
            let full = GlrConfig::new(0.05, ThresholdFamily::Practical);
            let sub = full.with_strides(20, 20);
            let a = online_first_detection(&stream, full);
            let b = online_first_detection(&stream, sub);
            match (a, b) {
                (Some(a), Some(b)) => assert!(b >= a),
                (None, Some(_)) => panic!("sub-sampled fired, full scan did not"),
                _ => {}
            }
        }
    }

    #[test]
    fn reset_clears_buffer() {
        let mut det = GlrDetector::new(GlrConfig::new(0.1, ThresholdFamily::Practical)).unwrap();
        for _ in 0..10 {
            det.push(1.0);
        }
        assert_eq!(det.len(), 10);
        det.reset();
        assert!(det.is_empty());
        assert_eq!(det.sup_statistic(), (0.0, None));
    }

    #[test]
    fn config_validation() {
        assert!(GlrDetector::new(GlrConfig::new(0.0, ThresholdFamily::Full)).is_err());
        assert!(GlrDetector::new(GlrConfig::new(0.1, ThresholdFamily::Full).with_strides(0, 1)).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariance_within_segments(
            bits in proptest::collection::vec(proptest::bool::ANY, 4..60),
            split_frac in 0.05f64..0.95,
            seed in 0u64..1000,
        ) {
            let xs: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
            let n = xs.len();
            let s = ((n as f64 * split_frac) as usize).clamp(1, n - 1);
            let mut shuffled = xs.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            use rand::seq::SliceRandom;
            shuffled[..s].shuffle(&mut rng);
            shuffled[s..].shuffle(&mut rng);
            for d in [Divergence::Bernoulli, Divergence::Gaussian] {
                let a = glr_statistic(&xs, s, d);
                let b = glr_statistic(&shuffled, s, d);
                prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            }
        }

        #[test]
        fn bernoulli_dominates_gaussian(
            xs in proptest::collection::vec(0.0f64..=1.0, 2..80),
            split_frac in 0.0f64..1.0,
        ) {
            let n = xs.len();
            let s = ((n as f64 * split_frac) as usize).clamp(1, n - 1);
            let b = glr_statistic(&xs, s, Divergence::Bernoulli);
            let g = glr_statistic(&xs, s, Divergence::Gaussian);
            prop_assert!(b >= g - 1e-12);
        }
    }
}
