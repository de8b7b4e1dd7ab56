// SPDX-License-Identifier: MIT OR Apache-2.0

use super::{check_arms, check_rate, forced_arm, Budget, IndexCore, Policy, RestartEvent};
use crate::env::PiecewiseEnv;
use crate::error::Result;

/// Stationary klUCB, optionally with the deterministic forced exploration
/// of GLR-klUCB (and nothing else).
#[derive(Clone, Debug)]
pub struct KlUcb {
    core: IndexCore,
    alpha: f64,
}

impl KlUcb {
    pub fn new(arms: usize) -> Result<Self> {
        Self::with_forced_exploration(arms, 0.0)
    }

    pub fn with_forced_exploration(arms: usize, alpha: f64) -> Result<Self> {
        check_arms(arms)?;
        check_rate("alpha", alpha)?;
        Ok(Self {
            core: IndexCore::new(arms, Budget::SinceRestart),
            alpha,
        })
    }

    /// Current klUCB index of `arm` at round `t`.
    pub fn index(&self, arm: usize, t: u64) -> f64 {
        self.core.index(arm, t)
    }

    pub fn counts(&self) -> &[u64] {
        &self.core.counts
    }
}

impl Policy for KlUcb {
    fn name(&self) -> &'static str {
        "klucb"
    }

    fn arms(&self) -> usize {
        self.core.arms()
    }

    fn choose(&mut self, t: u64) -> usize {
        forced_arm(t, self.arms(), self.alpha).unwrap_or_else(|| self.core.best(t))
    }

    fn update(&mut self, arm: usize, reward: f64, _t: u64) -> RestartEvent {
        self.core.record(arm, reward);
        RestartEvent::None
    }

    fn forced_exploration_rate(&self) -> Option<f64> {
        (self.alpha > 0.0).then_some(self.alpha)
    }
}

/// klUCB that knows the true breakpoints and restarts right after each of
/// them, either every arm or only the arms whose mean changed.
#[derive(Clone, Debug)]
pub struct OracleRestart {
    core: IndexCore,
    /// `(breakpoint, arms reset there)`, sorted by time.
    schedule: Vec<(u64, Vec<usize>)>,
    next: usize,
}

impl OracleRestart {
    /// Resets every arm at each breakpoint.
    pub fn new(arms: usize, mut breakpoints: Vec<u64>) -> Result<Self> {
        check_arms(arms)?;
        breakpoints.sort_unstable();
        breakpoints.dedup();
        let all: Vec<usize> = (0..arms).collect();
        Ok(Self {
            core: IndexCore::new(arms, Budget::SinceRestart),
            schedule: breakpoints.into_iter().map(|b| (b, all.clone())).collect(),
            next: 0,
        })
    }

    /// Resets, at each breakpoint of `env`, only the arms whose mean changes.
    pub fn per_arm(env: &PiecewiseEnv) -> Result<Self> {
        let arms = env.arms();
        check_arms(arms)?;
        let means: Vec<&[f64]> = env.segments().iter().map(|s| s.means.as_slice()).collect();
        let schedule = env
            .breakpoints()
            .into_iter()
            .zip(means.windows(2))
            .map(|(b, w)| (b, (0..arms).filter(|&i| w[0][i] != w[1][i]).collect()))
            .collect();
        Ok(Self {
            core: IndexCore::new(arms, Budget::SinceRestart),
            schedule,
            next: 0,
        })
    }
}

impl Policy for OracleRestart {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn arms(&self) -> usize {
        self.core.arms()
    }

    fn choose(&mut self, t: u64) -> usize {
        self.core.best(t)
    }

    /// Reports `Local(i)` when a single arm is reset and `Global` otherwise.
    fn update(&mut self, arm: usize, reward: f64, t: u64) -> RestartEvent {
        self.core.record(arm, reward);
        while self.next < self.schedule.len() && self.schedule[self.next].0 < t {
            self.next += 1;
        }
        match self.schedule.get(self.next) {
            Some((b, reset)) if *b == t => {
                self.next += 1;
                reset.iter().for_each(|&i| self.core.reset_arm(i, t));
                match reset.as_slice() {
                    [i] if self.core.arms() > 1 => RestartEvent::Local(*i),
                    _ => RestartEvent::Global,
                }
            }
            _ => RestartEvent::None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::builtin_problem;
    use crate::policies::testutil::{play, play_table};

    #[test]
    fn fresh_state() {
        let mut p = KlUcb::new(3).unwrap();
        assert_eq!(p.index(1, 1), 1.0);
        assert_eq!(p.choose(1), 0);
    }

    #[test]
    fn finds_the_better_arm() {
        let env = PiecewiseEnv::stationary(vec![0.1, 0.9], 10_000).unwrap();
        let mut p = KlUcb::new(2).unwrap();
        let (choices, _) = play(&mut p, &env, 3);
        let late = &choices[5000..];
        let good = late.iter().filter(|&&a| a == 1).count();
        assert!(good as f64 > 0.95 * late.len() as f64);
        assert_eq!(p.counts().iter().sum::<u64>(), 10_000);
    }

    #[test]
    fn oracle_without_breakpoints_is_klucb() {
        let env = PiecewiseEnv::stationary(vec![0.3, 0.5, 0.6], 2000).unwrap();
        let a = play_table(&mut KlUcb::new(3).unwrap(), &env, 9);
        let b = play_table(&mut OracleRestart::new(3, vec![]).unwrap(), &env, 9);
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_restarts_at_breakpoints() {
        let env = builtin_problem("pb1").unwrap();
        let mut p = OracleRestart::new(3, env.breakpoints()).unwrap();
        let (_, events) = play(&mut p, &env, 1);
        let times: Vec<u64> = events
            .iter()
            .enumerate()
            .filter(|(_, e)| **e == RestartEvent::Global)
            .map(|(i, _)| i as u64 + 1)
            .collect();
        assert_eq!(times, env.breakpoints());
    }

    #[test]
    fn per_arm_oracle_resets_changed_arms() {
        let env = builtin_problem("pb1").unwrap();
        let mut p = OracleRestart::per_arm(&env).unwrap();
        let (_, events) = play(&mut p, &env, 1);
        let restarts: Vec<(u64, RestartEvent)> = events
            .iter()
            .zip(1u64..)
            .filter(|(e, _)| **e != RestartEvent::None)
            .map(|(e, t)| (t, *e))
            .collect();
        let expected: Vec<(u64, RestartEvent)> = env
            .metadata()
            .arm_changes
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |c| (c.time, RestartEvent::Local(i))))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        assert_eq!(restarts, expected);
        let env = builtin_problem("pb2").unwrap();
        let (_, events) = play(&mut OracleRestart::per_arm(&env).unwrap(), &env, 1);
        assert_eq!(events.iter().filter(|e| **e == RestartEvent::Global).count(), 4);
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(KlUcb::with_forced_exploration(3, 1.0).is_err());
        assert!(KlUcb::with_forced_exploration(3, -0.1).is_err());
        assert!(KlUcb::new(0).is_err());
    }
}
