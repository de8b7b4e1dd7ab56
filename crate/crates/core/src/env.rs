// SPDX-License-Identifier: MIT OR Apache-2.0

//! Piece-wise stationary Bernoulli environments.
//!
//! Arms are 0-based. Time is 1-based: rounds run over `1..=horizon`, and a
//! segment starting at `start` covers every round up to the next start.
//! The k-th breakpoint `tau^(k)` is the last round of segment k, so it equals
//! `start_{k+1} - 1`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One stationary stretch: means from `start` until the next segment begins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: u64,
    pub means: Vec<f64>,
}

/// On-disk shape of an environment document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub arms: usize,
    pub horizon: u64,
    pub segments: Vec<Segment>,
}

/// A validated, immutable piece-wise stationary problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvSpec", into = "EnvSpec")]
pub struct PiecewiseEnv {
    arms: usize,
    horizon: u64,
    segments: Vec<Segment>,
}

impl TryFrom<EnvSpec> for PiecewiseEnv {
    type Error = Error;

    fn try_from(spec: EnvSpec) -> Result<Self> {
        Self::new(spec.arms, spec.horizon, spec.segments)
    }
}

impl From<PiecewiseEnv> for EnvSpec {
    fn from(env: PiecewiseEnv) -> Self {
        EnvSpec {
            arms: env.arms,
            horizon: env.horizon,
            segments: env.segments,
        }
    }
}

/// A single change of one arm's mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmChange {
    /// Last round with the old mean.
    pub time: u64,
    pub before: f64,
    pub after: f64,
}

impl ArmChange {
    /// Signed change `after - before`.
    pub fn gap(&self) -> f64 {
        self.after - self.before
    }
}

/// Ground-truth summary of an environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvMetadata {
    pub arms: usize,
    pub horizon: u64,
    /// Number of breakpoints.
    pub upsilon: usize,
    /// Total number of per-arm changes.
    pub changes: usize,
    pub breakpoints: Vec<u64>,
    /// Largest absolute change at each breakpoint.
    pub breakpoint_gaps: Vec<f64>,
    /// Per-arm change list, in time order.
    pub arm_changes: Vec<Vec<ArmChange>>,
    /// Smallest magnitude of any per-arm change (`None` when stationary).
    pub delta_change: Option<f64>,
    /// Smallest positive sub-optimality gap over all segments.
    pub delta_opt: Option<f64>,
}

impl PiecewiseEnv {
    pub fn new(arms: usize, horizon: u64, segments: Vec<Segment>) -> Result<Self> {
        if arms == 0 {
            return Err(Error::validation("environment needs at least one arm"));
        }
        if horizon == 0 {
            return Err(Error::validation("horizon must be >= 1"));
        }
        let Some(first) = segments.first() else {
            return Err(Error::validation("environment needs at least one segment"));
        };
        if first.start != 1 {
            return Err(Error::validation(format!(
                "first segment must start at t = 1, got {}",
                first.start
            )));
        }
        for (k, seg) in segments.iter().enumerate() {
            if seg.means.len() != arms {
                return Err(Error::validation(format!(
                    "segment {k} has {} means, expected {arms}",
                    seg.means.len()
                )));
            }
            if let Some((i, &m)) = seg
                .means
                .iter()
                .enumerate()
                .find(|(_, m)| !(0.0..=1.0).contains(*m))
            {
                return Err(Error::validation(format!(
                    "segment {k}, arm {i}: mean {m} outside [0, 1]"
                )));
            }
            if seg.start > horizon {
                return Err(Error::validation(format!(
                    "segment {k} starts at {} after the horizon {horizon}",
                    seg.start
                )));
            }
        }
        for (k, pair) in segments.windows(2).enumerate() {
            if pair[1].start <= pair[0].start {
                return Err(Error::validation(format!(
                    "non-increasing segment start: segment {} starts at {} after {}",
                    k + 1,
                    pair[1].start,
                    pair[0].start
                )));
            }
            if pair[0].means == pair[1].means {
                return Err(Error::validation(format!(
                    "segments {k} and {} have identical means",
                    k + 1
                )));
            }
        }
        Ok(Self {
            arms,
            horizon,
            segments,
        })
    }

    /// Single-segment environment.
    pub fn stationary(means: Vec<f64>, horizon: u64) -> Result<Self> {
        Self::new(means.len(), horizon, vec![Segment { start: 1, means }])
    }

    /// Same problem truncated or extended to another horizon. Segments that
    /// would start after the new horizon are dropped.
    pub fn with_horizon(&self, horizon: u64) -> Result<Self> {
        let segments = self
            .segments
            .iter()
            .filter(|s| s.start <= horizon)
            .cloned()
            .collect();
        Self::new(self.arms, horizon, segments)
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Index of the segment containing round `t` (clamped to the table).
    pub fn segment_index(&self, t: u64) -> usize {
        self.segments.partition_point(|s| s.start <= t).saturating_sub(1)
    }

    /// Mean vector in force at round `t`.
    pub fn means_at(&self, t: u64) -> &[f64] {
        &self.segments[self.segment_index(t)].means
    }

    fn check_round(&self, t: u64) -> Result<()> {
        if t == 0 || t > self.horizon {
            return Err(Error::domain(format!(
                "round {t} outside 1..={}",
                self.horizon
            )));
        }
        Ok(())
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm >= self.arms {
            return Err(Error::domain(format!(
                "arm {arm} out of range for K = {}",
                self.arms
            )));
        }
        Ok(())
    }

    pub fn mean(&self, arm: usize, t: u64) -> Result<f64> {
        self.check_arm(arm)?;
        self.check_round(t)?;
        Ok(self.means_at(t)[arm])
    }

    /// Best arm (lowest index on ties) and its mean at round `t`.
    pub fn oracle_mean(&self, t: u64) -> (usize, f64) {
        argmax(self.means_at(t))
    }

    /// Bernoulli reward of `arm` at round `t`.
    pub fn sample_reward<R: Rng + ?Sized>(&self, arm: usize, t: u64, rng: &mut R) -> Result<f64> {
        let mu = self.mean(arm, t)?;
        Ok(bernoulli(mu, rng))
    }

    /// Breakpoints `tau^(k)`, read from the segment table.
    pub fn breakpoints(&self) -> Vec<u64> {
        self.segments.iter().skip(1).map(|s| s.start - 1).collect()
    }

    pub fn upsilon(&self) -> usize {
        self.segments.len() - 1
    }

    pub fn metadata(&self) -> EnvMetadata {
        let breakpoints = self.breakpoints();
        let mut arm_changes = vec![Vec::new(); self.arms];
        let mut breakpoint_gaps = Vec::with_capacity(breakpoints.len());
        for (pair, &time) in self.segments.windows(2).zip(&breakpoints) {
            let mut largest = 0.0f64;
            for (i, (&before, &after)) in pair[0].means.iter().zip(&pair[1].means).enumerate() {
                if before != after {
                    arm_changes[i].push(ArmChange {
                        time,
                        before,
                        after,
                    });
                    largest = largest.max((after - before).abs());
                }
            }
            breakpoint_gaps.push(largest);
        }
        let changes = arm_changes.iter().map(Vec::len).sum();
        let delta_change = arm_changes
            .iter()
            .flatten()
            .map(|c| c.gap().abs())
            .reduce(f64::min);
        let delta_opt = self
            .segments
            .iter()
            .flat_map(|s| {
                let best = argmax(&s.means).1;
                s.means.iter().map(move |&m| best - m)
            })
            .filter(|&g| g > 0.0)
            .reduce(f64::min);
        EnvMetadata {
            arms: self.arms,
            horizon: self.horizon,
            upsilon: breakpoints.len(),
            changes,
            breakpoints,
            breakpoint_gaps,
            arm_changes,
            delta_change,
            delta_opt,
        }
    }
}

/// Scans every round and reports each `t < T` with `mu(t) != mu(t + 1)`.
pub fn breakpoints_from_means(env: &PiecewiseEnv) -> Vec<u64> {
    (1..env.horizon())
        .filter(|&t| env.means_at(t) != env.means_at(t + 1))
        .collect()
}

#[inline]
pub(crate) fn bernoulli<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> f64 {
    if rng.random::<f64>() < mu {
        1.0
    } else {
        0.0
    }
}

/// Lowest-index argmax.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Parses an environment document. `hint` picks the format: `json` or
/// anything else for TOML. `origin` is only used in error messages.
pub fn parse_env(text: &str, hint: &str, origin: &str) -> Result<PiecewiseEnv> {
    let spec: EnvSpec = if hint.eq_ignore_ascii_case("json") {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?
    } else {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?
    };
    PiecewiseEnv::try_from(spec)
        .map_err(|e| Error::validation(format!("{origin}: {}", strip_kind(&e))))
}

fn strip_kind(e: &Error) -> String {
    match e {
        Error::Validation(m) | Error::Domain(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Loads an environment from a file (TOML, or JSON for `.json`) or from a
/// shipped problem named `builtin:pbN`.
pub fn load_env(path: impl AsRef<Path>) -> Result<PiecewiseEnv> {
    let path = path.as_ref();
    if let Some(name) = path.to_str().and_then(|s| s.strip_prefix("builtin:")) {
        return builtin_problem(name)
            .ok_or_else(|| Error::validation(format!("unknown builtin problem {name:?}")));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("toml");
    parse_env(&text, ext, &path.display().to_string())
}

const BUILTINS: [(&str, &str); 5] = [
    ("pb1", include_str!("../../../problems/pb1.toml")),
    ("pb2", include_str!("../../../problems/pb2.toml")),
    ("pb3", include_str!("../../../problems/pb3.toml")),
    ("pb4", include_str!("../../../problems/pb4.toml")),
    ("pb5", include_str!("../../../problems/pb5.toml")),
];

/// Names of the shipped benchmark problems.
pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

/// One of the shipped benchmark problems (`pb1` .. `pb5`).
pub fn builtin_problem(name: &str) -> Option<PiecewiseEnv> {
    let (_, text) = BUILTINS.iter().find(|(n, _)| *n == name)?;
    Some(parse_env(text, "toml", name).expect("shipped problem is valid"))
}
