// SPDX-License-Identifier: MIT OR Apache-2.0

//! Streaming change-point detectors working on a single arm's rewards.
//!
//! Detectors only report a flag. Restart semantics (which buffers to clear)
//! belong to the policy that owns them.

mod cusum;
mod glr;
mod mtest;

pub use cusum::{CusumConfig, CusumDetector};
pub use glr::{glr_statistic, GlrConfig, GlrDetector};
pub use mtest::{MTestConfig, MTestDetector};

/// Common surface of the per-arm detectors.
pub trait ChangeDetector: Send {
    /// Appends one reward; returns true when a change is detected.
    fn push(&mut self, reward: f64) -> bool;

    /// Forgets every stored sample.
    fn reset(&mut self);

    /// Samples seen since the last reset.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
