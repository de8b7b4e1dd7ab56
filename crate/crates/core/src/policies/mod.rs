// SPDX-License-Identifier: MIT OR Apache-2.0

//! Bandit policies behind one `choose` / `update` interface.
//!
//! Arms are 0-based and time is 1-based. Every argmax breaks ties toward the
//! lowest arm index.

mod cusum;
mod discounted;
mod glr;
mod klucb;
mod mklucb;
mod sliding;
mod thompson;

use serde::{Deserialize, Serialize};

pub use cusum::{CusumBudget, CusumKlUcb, CusumKlUcbParams};
pub use discounted::DKlUcb;
pub use glr::{GlrKlUcb, GlrKlUcbParams};
pub use klucb::{KlUcb, OracleRestart};
pub use mklucb::{MKlUcb, MKlUcbParams};
pub use sliding::SwKlUcb;
pub use thompson::Thompson;

use crate::error::{Error, Result};
use crate::kl::{f_explore, klucb_upper};

/// What an update did to the policy's statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "arm")]
pub enum RestartEvent {
    None,
    /// Only this arm's statistics were reset.
    Local(usize),
    /// Every arm was reset.
    Global,
}

/// Restart mode of GLR-klUCB.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartMode {
    #[default]
    Local,
    Global,
}

impl std::str::FromStr for RestartMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(Self::Local),
            "global" => Ok(Self::Global),
            other => Err(Error::validation(format!(
                "unknown restart mode {other:?} (expected local|global)"
            ))),
        }
    }
}

pub trait Policy: Send {
    /// Stable name used in configs and output files.
    fn name(&self) -> &'static str;

    fn arms(&self) -> usize;

    /// Arm to play at round `t`.
    fn choose(&mut self, t: u64) -> usize;

    /// Feeds the reward of the arm played at round `t`.
    fn update(&mut self, arm: usize, reward: f64, t: u64) -> RestartEvent;

    /// Rate of the deterministic round-robin exploration, when the policy
    /// uses it. The harness checks the minimum-sampling guarantee for these.
    fn forced_exploration_rate(&self) -> Option<f64> {
        None
    }
}

impl Policy for Box<dyn Policy> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn arms(&self) -> usize {
        (**self).arms()
    }
    fn choose(&mut self, t: u64) -> usize {
        (**self).choose(t)
    }
    fn update(&mut self, arm: usize, reward: f64, t: u64) -> RestartEvent {
        (**self).update(arm, reward, t)
    }
    fn forced_exploration_rate(&self) -> Option<f64> {
        (**self).forced_exploration_rate()
    }
}

/// Arm forced at round `t` by the `t mod floor(K / alpha)` schedule.
pub fn forced_arm(t: u64, arms: usize, alpha: f64) -> Option<usize> {
    if !(alpha > 0.0) {
        return None;
    }
    let period = ((arms as f64) / alpha).floor() as u64;
    if period == 0 {
        return None;
    }
    let r = t % period;
    (r >= 1 && r <= arms as u64).then(|| (r - 1) as usize)
}

pub(crate) fn check_rate(name: &str, value: f64) -> Result<()> {
    if !(0.0..1.0).contains(&value) {
        return Err(Error::validation(format!(
            "{name} must lie in [0, 1), got {value}"
        )));
    }
    Ok(())
}

pub(crate) fn check_arms(arms: usize) -> Result<()> {
    if arms == 0 {
        return Err(Error::validation("policy needs at least one arm"));
    }
    Ok(())
}

/// Lowest-index argmax of klUCB indices.
///
/// `stats` holds `(mean, count, budget)` per arm. An arm whose Pinsker bound
/// is strictly below an index already computed cannot win, so its exact
/// index is skipped.
pub(crate) fn klucb_argmax(stats: &[(f64, f64, f64)], scratch: &mut Vec<f64>) -> usize {
    scratch.clear();
    scratch.extend(stats.iter().map(|&(m, n, b)| {
        if n <= 0.0 {
            1.0
        } else {
            (m + (b.max(0.0) / n / 2.0).sqrt()).min(1.0)
        }
    }));
    let lead = crate::env::argmax(scratch).0;
    let (m, n, b) = stats[lead];
    let mut best = (lead, klucb_upper(m, n, b));
    for (i, &(m, n, b)) in stats.iter().enumerate() {
        if i == lead || scratch[i] < best.1 {
            continue;
        }
        let q = klucb_upper(m, n, b);
        if q > best.1 || (q == best.1 && i < best.0) {
            best = (i, q);
        }
    }
    best.0
}

/// How the exploration budget of an arm's index is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Budget {
    /// `f(t - tau_i)`.
    SinceRestart,
    /// `f(sum_i n_i)`.
    TotalCount,
}

/// Per-arm counts, sums and restart times with the klUCB index.
#[derive(Clone, Debug)]
pub(crate) struct IndexCore {
    pub counts: Vec<u64>,
    pub sums: Vec<f64>,
    pub tau: Vec<u64>,
    budget: Budget,
    stats: Vec<(f64, f64, f64)>,
    scratch: Vec<f64>,
}

impl IndexCore {
    pub fn new(arms: usize, budget: Budget) -> Self {
        Self {
            counts: vec![0; arms],
            sums: vec![0.0; arms],
            tau: vec![0; arms],
            budget,
            stats: Vec::with_capacity(arms),
            scratch: Vec::with_capacity(arms),
        }
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn mean(&self, arm: usize) -> f64 {
        if self.counts[arm] == 0 {
            0.0
        } else {
            self.sums[arm] / self.counts[arm] as f64
        }
    }

    pub fn index(&self, arm: usize, t: u64) -> f64 {
        klucb_upper(self.mean(arm), self.counts[arm] as f64, self.budget_for(arm, t))
    }

    fn budget_for(&self, arm: usize, t: u64) -> f64 {
        match self.budget {
            Budget::SinceRestart => f_explore(t.saturating_sub(self.tau[arm])),
            Budget::TotalCount => f_explore(self.counts.iter().sum()),
        }
    }

    pub fn best(&mut self, t: u64) -> usize {
        let mut stats = std::mem::take(&mut self.stats);
        stats.clear();
        stats.extend(
            (0..self.arms()).map(|i| (self.mean(i), self.counts[i] as f64, self.budget_for(i, t))),
        );
        let arm = klucb_argmax(&stats, &mut self.scratch);
        self.stats = stats;
        arm
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
    }

    pub fn reset_arm(&mut self, arm: usize, t: u64) {
        self.counts[arm] = 0;
        self.sums[arm] = 0.0;
        self.tau[arm] = t;
    }

    pub fn reset_all(&mut self, t: u64) {
        for arm in 0..self.arms() {
            self.reset_arm(arm, t);
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn forced_schedule() {
        // K = 3, alpha = 0.3 -> period 10.
        let forced: Vec<Option<usize>> = (1..=13).map(|t| forced_arm(t, 3, 0.3)).collect();
        assert_eq!(&forced[..3], &[Some(0), Some(1), Some(2)]);
        assert!(forced[3..10].iter().all(Option::is_none));
        assert_eq!(&forced[10..], &[Some(0), Some(1), Some(2)]);
        assert!((1..100).all(|t| forced_arm(t, 3, 0.0).is_none()));
    }

    #[test]
    fn argmax_ties_lowest_index() {
        let stats = [(0.0, 0.0, 1.0), (0.0, 0.0, 1.0), (0.5, 10.0, 2.0)];
        let mut s = Vec::new();
        assert_eq!(klucb_argmax(&stats, &mut s), 0);
        let stats = [(0.2, 10.0, 1.0), (0.9, 10.0, 1.0), (0.9, 10.0, 1.0)];
        assert_eq!(klucb_argmax(&stats, &mut s), 1);
    }

    proptest! {
        #[test]
        fn pruned_argmax_matches_exhaustive(
            raw in proptest::collection::vec((0.0f64..=1.0, 0u32..50, 0.0f64..10.0), 1..8)
        ) {
            let stats: Vec<(f64, f64, f64)> = raw.iter().map(|&(m, n, b)| (m, n as f64, b)).collect();
            let idx: Vec<f64> = stats.iter().map(|&(m, n, b)| klucb_upper(m, n, b)).collect();
            let expected = crate::env::argmax(&idx).0;
            let mut s = Vec::new();
            prop_assert_eq!(klucb_argmax(&stats, &mut s), expected);
        }
    }
}
