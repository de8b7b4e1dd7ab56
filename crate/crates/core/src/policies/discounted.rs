// SPDX-License-Identifier: MIT OR Apache-2.0

//! Discounted klUCB.

use super::{check_arms, klucb_argmax, Policy, RestartEvent};
use crate::error::{Error, Result};
use crate::kl::f_explore_real;

/// klUCB on discounted counts `N_i = sum_s gamma^(t-s) 1(A_s = i)` and
/// discounted sums, with exploration budget `f(1 + sum_i N_i)`.
#[derive(Clone, Debug)]
pub struct DKlUcb {
    gamma: f64,
    counts: Vec<f64>,
    sums: Vec<f64>,
    stats: Vec<(f64, f64, f64)>,
    scratch: Vec<f64>,
}

impl DKlUcb {
    pub fn new(arms: usize, gamma: f64) -> Result<Self> {
        check_arms(arms)?;
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::validation(format!(
                "discount factor must lie in (0, 1], got {gamma}"
            )));
        }
        Ok(Self {
            gamma,
            counts: vec![0.0; arms],
            sums: vec![0.0; arms],
            stats: Vec::with_capacity(arms),
            scratch: Vec::with_capacity(arms),
        })
    }

    /// `1 - sqrt(Upsilon / T) / 4`.
    pub fn recommended_gamma(horizon: u64, upsilon: usize) -> f64 {
        1.0 - (upsilon.max(1) as f64 / horizon as f64).sqrt() / 4.0
    }

    pub fn discounted_counts(&self) -> &[f64] {
        &self.counts
    }
}

impl Policy for DKlUcb {
    fn name(&self) -> &'static str {
        "d-klucb"
    }

    fn arms(&self) -> usize {
        self.counts.len()
    }

    fn choose(&mut self, _t: u64) -> usize {
        let total: f64 = self.counts.iter().sum();
        let budget = f_explore_real(1.0 + total);
        self.stats.clear();
        for (&n, &s) in self.counts.iter().zip(&self.sums) {
            let mean = if n > 0.0 { s / n } else { 0.0 };
            self.stats.push((mean, n, budget));
        }
        klucb_argmax(&self.stats, &mut self.scratch)
    }

    fn update(&mut self, arm: usize, reward: f64, _t: u64) -> RestartEvent {
        if self.gamma < 1.0 {
            self.counts.iter_mut().for_each(|n| *n *= self.gamma);
            self.sums.iter_mut().for_each(|s| *s *= self.gamma);
        }
        self.counts[arm] += 1.0;
        self.sums[arm] += reward;
        RestartEvent::None
    }
}
