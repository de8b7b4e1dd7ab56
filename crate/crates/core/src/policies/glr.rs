// SPDX-License-Identifier: MIT OR Apache-2.0

//! klUCB index combined with one Bernoulli GLR detector per arm.

use serde::{Deserialize, Serialize};

use super::{check_arms, check_rate, forced_arm, Budget, IndexCore, Policy, RestartEvent, RestartMode};
use crate::cpd::{ChangeDetector, GlrConfig, GlrDetector};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlrKlUcbParams {
    /// Forced-exploration rate.
    pub alpha: f64,
    pub mode: RestartMode,
    pub detector: GlrConfig,
}

#[derive(Clone, Debug)]
pub struct GlrKlUcb {
    core: IndexCore,
    detectors: Vec<GlrDetector>,
    params: GlrKlUcbParams,
}

impl GlrKlUcb {
    pub fn new(arms: usize, params: GlrKlUcbParams) -> Result<Self> {
        check_arms(arms)?;
        check_rate("alpha", params.alpha)?;
        let detector = GlrDetector::new(params.detector)?;
        Ok(Self {
            core: IndexCore::new(arms, Budget::SinceRestart),
            detectors: vec![detector; arms],
            params,
        })
    }

    /// Plays since the last restart of each arm.
    pub fn counts(&self) -> &[u64] {
        &self.core.counts
    }

    /// Last restart time of each arm (0 before any restart).
    pub fn restart_times(&self) -> &[u64] {
        &self.core.tau
    }

    pub fn detector_len(&self, arm: usize) -> usize {
        self.detectors[arm].len()
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.core.mean(arm)
    }
}

impl Policy for GlrKlUcb {
    fn name(&self) -> &'static str {
        match self.params.mode {
            RestartMode::Local => "glr-klucb-local",
            RestartMode::Global => "glr-klucb-global",
        }
    }

    fn arms(&self) -> usize {
        self.core.arms()
    }

    fn choose(&mut self, t: u64) -> usize {
        forced_arm(t, self.arms(), self.params.alpha).unwrap_or_else(|| self.core.best(t))
    }

    fn update(&mut self, arm: usize, reward: f64, t: u64) -> RestartEvent {
        self.core.record(arm, reward);
        if !self.detectors[arm].push(reward) {
            return RestartEvent::None;
        }
        match self.params.mode {
            RestartMode::Local => {
                self.core.reset_arm(arm, t);
                self.detectors[arm].reset();
                RestartEvent::Local(arm)
            }
            RestartMode::Global => {
                self.core.reset_all(t);
                self.detectors.iter_mut().for_each(ChangeDetector::reset);
                RestartEvent::Global
            }
        }
    }

    fn forced_exploration_rate(&self) -> Option<f64> {
        (self.params.alpha > 0.0).then_some(self.params.alpha)
    }
}
