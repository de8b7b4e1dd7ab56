// SPDX-License-Identifier: MIT OR Apache-2.0

//! Thompson sampling with Beta(1, 1) priors, and its discounted variant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use super::{check_arms, Policy, RestartEvent};
use crate::error::{Error, Result};

/// Beta-Bernoulli Thompson sampling. With `gamma < 1` every arm's success
/// and failure counts are multiplied by `gamma` each round (DTS).
#[derive(Clone, Debug)]
pub struct Thompson {
    successes: Vec<f64>,
    failures: Vec<f64>,
    gamma: f64,
    rng: ChaCha8Rng,
    draws: Vec<f64>,
}

impl Thompson {
    pub fn new(arms: usize, seed: u64) -> Result<Self> {
        Self::discounted(arms, 1.0, seed)
    }

    pub fn discounted(arms: usize, gamma: f64, seed: u64) -> Result<Self> {
        check_arms(arms)?;
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::validation(format!(
                "discount factor must lie in (0, 1], got {gamma}"
            )));
        }
        Ok(Self {
            successes: vec![0.0; arms],
            failures: vec![0.0; arms],
            gamma,
            rng: ChaCha8Rng::seed_from_u64(seed),
            draws: vec![0.0; arms],
        })
    }

    /// Posterior parameters `(a, b)` of `arm`.
    pub fn posterior(&self, arm: usize) -> (f64, f64) {
        (1.0 + self.successes[arm], 1.0 + self.failures[arm])
    }
}

impl Policy for Thompson {
    fn name(&self) -> &'static str {
        if self.gamma < 1.0 {
            "dts"
        } else {
            "ts"
        }
    }

    fn arms(&self) -> usize {
        self.successes.len()
    }

    fn choose(&mut self, _t: u64) -> usize {
        for arm in 0..self.arms() {
            let (a, b) = self.posterior(arm);
            let beta = Beta::new(a, b).expect("positive Beta parameters");
            self.draws[arm] = beta.sample(&mut self.rng);
        }
        crate::env::argmax(&self.draws).0
    }

    fn update(&mut self, arm: usize, reward: f64, _t: u64) -> RestartEvent {
        if self.gamma < 1.0 {
            self.successes.iter_mut().for_each(|s| *s *= self.gamma);
            self.failures.iter_mut().for_each(|f| *f *= self.gamma);
        }
        self.successes[arm] += reward;
        self.failures[arm] += 1.0 - reward;
        RestartEvent::None
    }
}
