// SPDX-License-Identifier: MIT OR Apache-2.0

//! klUCB with a CUSUM detector per arm, random exploration and local restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_arms, Budget, IndexCore, Policy, RestartEvent};
use crate::cpd::{ChangeDetector, CusumConfig, CusumDetector};
use crate::error::{Error, Result};

/// Exploration budget of the CUSUM-klUCB index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CusumBudget {
    /// `f(n_t)` with `n_t` the total number of plays since the arms' restarts.
    #[default]
    TotalCount,
    /// `f(t - tau_i)`, as in GLR-klUCB.
    SinceRestart,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CusumKlUcbParams {
    pub detector: CusumConfig,
    /// Probability of playing a uniformly random arm.
    pub alpha: f64,
    #[serde(default)]
    pub budget: CusumBudget,
}

impl CusumKlUcbParams {
    /// `h = ln(T / Upsilon)` and `alpha = sqrt(Upsilon ln(T / Upsilon) / T)`.
    pub fn recommended(warmup: usize, epsilon: f64, horizon: u64, upsilon: usize) -> Self {
        let (t, u) = (horizon as f64, upsilon.max(1) as f64);
        let h = (t / u).ln();
        Self {
            detector: CusumConfig::new(warmup, epsilon, h),
            alpha: (u * h / t).sqrt().clamp(0.0, 1.0),
            budget: CusumBudget::TotalCount,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CusumKlUcb {
    core: IndexCore,
    detectors: Vec<CusumDetector>,
    alpha: f64,
    rng: ChaCha8Rng,
}

impl CusumKlUcb {
    pub fn new(arms: usize, params: CusumKlUcbParams, seed: u64) -> Result<Self> {
        check_arms(arms)?;
        if !(0.0..=1.0).contains(&params.alpha) {
            return Err(Error::validation(format!(
                "CUSUM-klUCB alpha must lie in [0, 1], got {}",
                params.alpha
            )));
        }
        let budget = match params.budget {
            CusumBudget::TotalCount => Budget::TotalCount,
            CusumBudget::SinceRestart => Budget::SinceRestart,
        };
        let detector = CusumDetector::new(params.detector)?;
        Ok(Self {
            core: IndexCore::new(arms, budget),
            detectors: vec![detector; arms],
            alpha: params.alpha,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl Policy for CusumKlUcb {
    fn name(&self) -> &'static str {
        "cusum-klucb"
    }

    fn arms(&self) -> usize {
        self.core.arms()
    }

    fn choose(&mut self, t: u64) -> usize {
        if self.alpha > 0.0 && self.rng.random::<f64>() < self.alpha {
            return self.rng.random_range(0..self.arms());
        }
        self.core.best(t)
    }

    fn update(&mut self, arm: usize, reward: f64, t: u64) -> RestartEvent {
        self.core.record(arm, reward);
        if self.detectors[arm].push(reward) {
            self.core.reset_arm(arm, t);
            self.detectors[arm].reset();
            return RestartEvent::Local(arm);
        }
        RestartEvent::None
    }
}
