// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sliding-window klUCB.

use std::collections::VecDeque;

use super::{check_arms, klucb_argmax, Policy, RestartEvent};
use crate::error::{Error, Result};
use crate::kl::f_explore;

/// klUCB on the rewards collected during the last `window` rounds, with
/// exploration budget `f(min(t, window))`.
#[derive(Clone, Debug)]
pub struct SwKlUcb {
    window: u64,
    history: Vec<VecDeque<(u64, f64)>>,
    sums: Vec<f64>,
    stats: Vec<(f64, f64, f64)>,
    scratch: Vec<f64>,
}

impl SwKlUcb {
    pub fn new(arms: usize, window: u64) -> Result<Self> {
        check_arms(arms)?;
        if window == 0 {
            return Err(Error::validation("SW-klUCB window must be >= 1"));
        }
        Ok(Self {
            window,
            history: vec![VecDeque::new(); arms],
            sums: vec![0.0; arms],
            stats: Vec::with_capacity(arms),
            scratch: Vec::with_capacity(arms),
        })
    }

    /// `2 sqrt(T ln T / Upsilon)`, rounded to the nearest round count.
    pub fn recommended_window(horizon: u64, upsilon: usize) -> u64 {
        let t = horizon as f64;
        ((2.0 * (t * t.ln() / upsilon.max(1) as f64).sqrt()).round() as u64).max(1)
    }

    /// Observations of `arm` currently inside the window.
    pub fn window_count(&self, arm: usize) -> usize {
        self.history[arm].len()
    }

    fn evict(&mut self, t: u64) {
        // Keep rounds t - window .. t - 1.
        let Some(oldest) = t.checked_sub(self.window) else {
            return;
        };
        for (h, sum) in self.history.iter_mut().zip(&mut self.sums) {
            while h.front().is_some_and(|&(s, _)| s < oldest) {
                let (_, r) = h.pop_front().unwrap();
                *sum -= r;
            }
            if h.is_empty() {
                *sum = 0.0;
            }
        }
    }
}

impl Policy for SwKlUcb {
    fn name(&self) -> &'static str {
        "sw-klucb"
    }

    fn arms(&self) -> usize {
        self.history.len()
    }

    fn choose(&mut self, t: u64) -> usize {
        self.evict(t);
        let budget = f_explore(t.min(self.window));
        self.stats.clear();
        for (h, &sum) in self.history.iter().zip(&self.sums) {
            let n = h.len() as f64;
            let mean = if n > 0.0 { sum / n } else { 0.0 };
            self.stats.push((mean, n, budget));
        }
        klucb_argmax(&self.stats, &mut self.scratch)
    }

    fn update(&mut self, arm: usize, reward: f64, t: u64) -> RestartEvent {
        self.history[arm].push_back((t, reward));
        self.sums[arm] += reward;
        RestartEvent::None
    }
}
