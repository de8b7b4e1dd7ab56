// SPDX-License-Identifier: MIT OR Apache-2.0

//! Windowed two-halves mean test.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ChangeDetector;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MTestConfig {
    /// Even window length `w`.
    pub window: usize,
    /// Threshold on the absolute difference of the two half-window means.
    pub threshold: f64,
}

impl MTestConfig {
    pub fn new(window: usize, threshold: f64) -> Self {
        Self { window, threshold }
    }

    /// Converts a threshold on the difference of half-window *sums* into the
    /// equivalent threshold on half-window means.
    pub fn from_sum_threshold(window: usize, sum_threshold: f64) -> Self {
        Self::new(window, 2.0 * sum_threshold / window as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 2 || self.window % 2 != 0 {
            return Err(Error::validation(format!(
                "M-test window must be even and >= 2, got {}",
                self.window
            )));
        }
        if self.threshold.is_nan() {
            return Err(Error::validation("M-test threshold is NaN"));
        }
        Ok(())
    }
}

/// Keeps the last `window` rewards; once full, flags a change when the two
/// halves have means at least `threshold` apart.
#[derive(Clone, Debug)]
pub struct MTestDetector {
    config: MTestConfig,
    buffer: VecDeque<f64>,
}

impl MTestDetector {
    pub fn new(config: MTestConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            buffer: VecDeque::with_capacity(config.window + 1),
        })
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    /// `|mean(first half) - mean(second half)|`, if the window is full.
    pub fn half_difference(&self) -> Option<f64> {
        let w = self.config.window;
        if self.buffer.len() < w {
            return None;
        }
        let half = w / 2;
        let first: f64 = self.buffer.iter().take(half).sum();
        let second: f64 = self.buffer.iter().skip(half).sum();
        Some((first - second).abs() / half as f64)
    }

    pub fn step(&mut self, reward: f64) -> bool {
        self.buffer.push_back(reward);
        if self.buffer.len() > self.config.window {
            self.buffer.pop_front();
        }
        self.half_difference()
            .is_some_and(|d| d >= self.config.threshold)
    }
}

impl ChangeDetector for MTestDetector {
    fn push(&mut self, reward: f64) -> bool {
        self.step(reward)
    }

    fn reset(&mut self) {
        self.buffer.clear();
    }

    fn len(&self) -> usize {
        self.buffer.len()
    }
}
