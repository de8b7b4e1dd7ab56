// SPDX-License-Identifier: MIT OR Apache-2.0

//! Two-sided CUSUM test.
//!
//! The first `warmup` samples only build a reference mean. After that, two
//! clamped random walks track upward and downward drifts larger than
//! `epsilon`, and a change is flagged once either reaches `threshold`.

use serde::{Deserialize, Serialize};

use super::ChangeDetector;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CusumConfig {
    /// Number of samples used for the reference mean (`M`).
    pub warmup: usize,
    /// Drift magnitude (`epsilon`).
    pub epsilon: f64,
    /// Detection threshold (`h`).
    pub threshold: f64,
    /// Only test when the sample count is a multiple of this.
    pub check_every: usize,
}

impl CusumConfig {
    pub fn new(warmup: usize, epsilon: f64, threshold: f64) -> Self {
        Self {
            warmup,
            epsilon,
            threshold,
            check_every: 1,
        }
    }

    pub fn with_check_every(mut self, every: usize) -> Self {
        self.check_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.warmup == 0 {
            return Err(Error::validation("CUSUM warmup M must be >= 1"));
        }
        if self.check_every == 0 {
            return Err(Error::validation("CUSUM check_every must be >= 1"));
        }
        if !(self.epsilon >= 0.0) || self.threshold.is_nan() {
            return Err(Error::validation("CUSUM needs epsilon >= 0 and a numeric threshold"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CusumDetector {
    config: CusumConfig,
    count: usize,
    warmup_sum: f64,
    reference: f64,
    g_plus: f64,
    g_minus: f64,
}

impl CusumDetector {
    pub fn new(config: CusumConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            count: 0,
            warmup_sum: 0.0,
            reference: 0.0,
            g_plus: 0.0,
            g_minus: 0.0,
        })
    }

    /// Reference mean once the warm-up is complete.
    pub fn reference_mean(&self) -> Option<f64> {
        (self.count >= self.config.warmup).then_some(self.reference)
    }

    /// Current `(g_plus, g_minus)` accumulators.
    pub fn accumulators(&self) -> (f64, f64) {
        (self.g_plus, self.g_minus)
    }

    pub fn step(&mut self, reward: f64) -> bool {
        self.count += 1;
        let warmup = self.config.warmup;
        if self.count <= warmup {
            self.warmup_sum += reward;
            if self.count == warmup {
                self.reference = self.warmup_sum / warmup as f64;
            }
            return false;
        }
        let eps = self.config.epsilon;
        self.g_plus = (self.g_plus + (reward - self.reference - eps)).max(0.0);
        self.g_minus = (self.g_minus + (self.reference - reward - eps)).max(0.0);
        if self.count % self.config.check_every != 0 {
            return false;
        }
        self.g_plus.max(self.g_minus) >= self.config.threshold
    }
}

impl ChangeDetector for CusumDetector {
    fn push(&mut self, reward: f64) -> bool {
        self.step(reward)
    }

    fn reset(&mut self) {
        self.count = 0;
        self.warmup_sum = 0.0;
        self.reference = 0.0;
        self.g_plus = 0.0;
        self.g_minus = 0.0;
    }

    fn len(&self) -> usize {
        self.count
    }
}
