// SPDX-License-Identifier: MIT OR Apache-2.0

//! klUCB with a windowed two-halves test per arm and global restarts.

use serde::{Deserialize, Serialize};

use super::{check_arms, check_rate, forced_arm, Budget, IndexCore, Policy, RestartEvent};
use crate::cpd::{ChangeDetector, MTestConfig, MTestDetector};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MKlUcbParams {
    /// Even window length.
    pub window: usize,
    /// Threshold on the difference of half-window sums.
    pub threshold: f64,
    /// Forced-exploration rate.
    pub gamma: f64,
}

impl MKlUcbParams {
    /// `b = sqrt(w ln(2 K T))` and `gamma = sqrt(Upsilon K (2b + 3 sqrt w) / (2T))`.
    pub fn recommended(window: usize, arms: usize, horizon: u64, upsilon: usize) -> Self {
        let w = window as f64;
        let (k, t) = (arms as f64, horizon as f64);
        let b = (w * (2.0 * k * t).ln()).sqrt();
        let gamma = (upsilon.max(1) as f64 * k * (2.0 * b + 3.0 * w.sqrt()) / (2.0 * t)).sqrt();
        Self {
            window,
            threshold: b,
            gamma: gamma.min(0.99),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MKlUcb {
    core: IndexCore,
    detectors: Vec<MTestDetector>,
    gamma: f64,
}

impl MKlUcb {
    pub fn new(arms: usize, params: MKlUcbParams) -> Result<Self> {
        check_arms(arms)?;
        check_rate("gamma", params.gamma)?;
        let detector = MTestDetector::new(MTestConfig::from_sum_threshold(
            params.window,
            params.threshold,
        ))?;
        Ok(Self {
            core: IndexCore::new(arms, Budget::SinceRestart),
            detectors: vec![detector; arms],
            gamma: params.gamma,
        })
    }

    /// Total number of rewards buffered across arms.
    pub fn buffered(&self) -> usize {
        self.detectors.iter().map(|d| d.buffer_len()).sum()
    }
}

impl Policy for MKlUcb {
    fn name(&self) -> &'static str {
        "m-klucb"
    }

    fn arms(&self) -> usize {
        self.core.arms()
    }

    fn choose(&mut self, t: u64) -> usize {
        forced_arm(t, self.arms(), self.gamma).unwrap_or_else(|| self.core.best(t))
    }

    fn update(&mut self, arm: usize, reward: f64, t: u64) -> RestartEvent {
        self.core.record(arm, reward);
        if self.detectors[arm].push(reward) {
            self.core.reset_all(t);
            self.detectors.iter_mut().for_each(ChangeDetector::reset);
            return RestartEvent::Global;
        }
        RestartEvent::None
    }

    fn forced_exploration_rate(&self) -> Option<f64> {
        (self.gamma > 0.0).then_some(self.gamma)
    }
}
