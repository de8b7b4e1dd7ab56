// SPDX-License-Identifier: MIT OR Apache-2.0

//! Theory-driven tunings of GLR-klUCB and the spacing conditions under
//! which its regret guarantees hold.

use serde::{Deserialize, Serialize};

use crate::env::{EnvMetadata, PiecewiseEnv};
use crate::error::{Error, Result};
use crate::kl::{beta_threshold, ThresholdFamily};
use crate::policies::RestartMode;

use super::ALPHA_CAP;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tunings {
    pub alpha: f64,
    pub delta: f64,
    pub alpha0: f64,
}

/// `(alpha, delta)` prescribed by the regret bounds.
///
/// | mode   | Upsilon known                               | unknown                  |
/// |--------|---------------------------------------------|--------------------------|
/// | global | `sqrt(U ln T / T)`, `1 / sqrt(U T)`         | `sqrt(ln T / T)`, `1/sqrt T` |
/// | local  | `sqrt(K U ln T / T)`, `1 / sqrt(K U T)`     | `sqrt(ln T / T)`, `1/sqrt T` |
///
/// `alpha` is then multiplied by `alpha0` and kept below 1.
pub fn default_tunings(
    meta: &EnvMetadata,
    upsilon_known: bool,
    mode: RestartMode,
    alpha0: f64,
) -> Result<Tunings> {
    if meta.horizon < 2 {
        return Err(Error::validation("tunings need a horizon T >= 2"));
    }
    if !(alpha0 >= 0.0) {
        return Err(Error::validation(format!("alpha0 must be >= 0, got {alpha0}")));
    }
    let t = meta.horizon as f64;
    let scale = if !upsilon_known {
        1.0
    } else {
        if meta.upsilon == 0 {
            return Err(Error::validation(
                "known-Upsilon tunings need at least one breakpoint",
            ));
        }
        let u = meta.upsilon as f64;
        match mode {
            RestartMode::Global => u,
            RestartMode::Local => meta.arms as f64 * u,
        }
    };
    let alpha = (alpha0 * (scale * t.ln() / t).sqrt()).min(ALPHA_CAP);
    let delta = 1.0 / (scale * t).sqrt();
    Ok(Tunings {
        alpha,
        delta,
        alpha0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotCheckable,
}

impl Verdict {
    fn all(items: impl IntoIterator<Item = bool>) -> Self {
        if items.into_iter().all(|ok| ok) {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

/// Spacing check of one breakpoint (global) or one arm change (local).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingCheck {
    /// `None` for breakpoint checks.
    pub arm: Option<usize>,
    /// 1-based index of the change.
    pub index: usize,
    pub time: u64,
    pub previous_time: u64,
    pub gap: f64,
    /// Detection window `d`.
    pub delay: u64,
    /// `2 max(d, d_prev)`.
    pub required: u64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub alpha: f64,
    pub delta: f64,
    pub threshold: ThresholdFamily,
    /// `beta(T, delta)`.
    pub beta: f64,
    pub global: Verdict,
    pub local: Verdict,
    pub breakpoints: Vec<SpacingCheck>,
    pub arm_changes: Vec<SpacingCheck>,
}

impl AssumptionReport {
    pub fn violations(&self) -> usize {
        self.breakpoints
            .iter()
            .chain(&self.arm_changes)
            .filter(|c| !c.ok)
            .count()
    }

    pub fn verdict(&self, mode: RestartMode) -> Verdict {
        match mode {
            RestartMode::Global => self.global,
            RestartMode::Local => self.local,
        }
    }
}

/// `ceil(4K beta / (alpha gap^2) + K / alpha)`.
pub fn detection_window(arms: usize, alpha: f64, gap: f64, beta: f64) -> u64 {
    let k = arms as f64;
    (4.0 * k * beta / (alpha * gap * gap) + k / alpha).ceil() as u64
}

fn spacing_checks(
    arms: usize,
    alpha: f64,
    beta: f64,
    arm: Option<usize>,
    changes: impl Iterator<Item = (u64, f64)>,
) -> Vec<SpacingCheck> {
    let mut out = Vec::new();
    let (mut prev_time, mut prev_delay) = (0u64, 0u64);
    for (index, (time, gap)) in changes.enumerate() {
        let delay = detection_window(arms, alpha, gap.abs(), beta);
        let required = 2 * delay.max(prev_delay);
        out.push(SpacingCheck {
            arm,
            index: index + 1,
            time,
            previous_time: prev_time,
            gap: gap.abs(),
            delay,
            required,
            ok: time - prev_time >= required,
        });
        prev_time = time;
        prev_delay = delay;
    }
    out
}

/// Checks both spacing assumptions with `beta(T, delta)`, using the
/// conventions `tau^(0) = 0` and `d^(0) = 0`. With `alpha = 0` the detection
/// windows are infinite and the report is `NotCheckable`.
pub fn check_assumptions(
    env: &PiecewiseEnv,
    alpha: f64,
    delta: f64,
    threshold: ThresholdFamily,
) -> Result<AssumptionReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::validation(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(alpha >= 0.0 && alpha < 1.0) {
        return Err(Error::validation(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    let meta = env.metadata();
    let beta = beta_threshold(env.horizon(), delta, threshold);
    if alpha == 0.0 {
        return Ok(AssumptionReport {
            alpha,
            delta,
            threshold,
            beta,
            global: Verdict::NotCheckable,
            local: Verdict::NotCheckable,
            breakpoints: Vec::new(),
            arm_changes: Vec::new(),
        });
    }
    let k = env.arms();
    let breakpoints = spacing_checks(
        k,
        alpha,
        beta,
        None,
        meta.breakpoints.iter().copied().zip(meta.breakpoint_gaps.iter().copied()),
    );
    let arm_changes: Vec<SpacingCheck> = meta
        .arm_changes
        .iter()
        .enumerate()
        .flat_map(|(i, changes)| {
            spacing_checks(k, alpha, beta, Some(i), changes.iter().map(|c| (c.time, c.gap())))
        })
        .collect();
    Ok(AssumptionReport {
        alpha,
        delta,
        threshold,
        beta,
        global: Verdict::all(breakpoints.iter().map(|c| c.ok)),
        local: Verdict::all(arm_changes.iter().map(|c| c.ok)),
        breakpoints,
        arm_changes,
    })
}
