// SPDX-License-Identifier: MIT OR Apache-2.0

//! Algorithm roster entries and their benchmark default tunings.

use serde::{Deserialize, Serialize};

use crate::cpd::{CusumConfig, GlrConfig};
use crate::env::PiecewiseEnv;
use crate::error::{Error, Result};
use crate::kl::ThresholdFamily;
use crate::policies::{
    CusumBudget, CusumKlUcb, CusumKlUcbParams, DKlUcb, GlrKlUcb, GlrKlUcbParams, KlUcb, MKlUcb,
    MKlUcbParams, OracleRestart, Policy, RestartMode, SwKlUcb, Thompson,
};

/// Default scale of the GLR-klUCB exploration rate.
pub const DEFAULT_ALPHA0: f64 = 0.05;
/// Default sub-sampling strides of the GLR test in benchmarks.
pub const DEFAULT_GLR_STRIDE: usize = 10;

/// Optional overrides for GLR-klUCB. Unset fields take the benchmark
/// defaults computed from the environment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlrSpec {
    /// Explicit forced-exploration rate; overrides `alpha0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride_s: Option<usize>,
}

/// One algorithm of a roster, by its stable name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum PolicySpec {
    Klucb,
    Ts,
    SwKlucb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<u64>,
    },
    DKlucb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    Dts {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    /// Oracle restarts: `local` (default) resets only the arms whose mean
    /// changes, `global` resets every arm.
    Oracle {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        restarts: Option<RestartMode>,
    },
    MKlucb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<usize>,
        /// Threshold on half-window sums.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    CusumKlucb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        warmup: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        check_every: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        budget: Option<CusumBudget>,
    },
    GlrKlucbLocal(GlrSpec),
    GlrKlucbGlobal(GlrSpec),
}

/// Every stable policy name.
pub const POLICY_NAMES: [&str; 10] = [
    "klucb",
    "ts",
    "sw-klucb",
    "d-klucb",
    "dts",
    "oracle",
    "m-klucb",
    "cusum-klucb",
    "glr-klucb-local",
    "glr-klucb-global",
];

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Klucb => "klucb",
            Self::Ts => "ts",
            Self::SwKlucb { .. } => "sw-klucb",
            Self::DKlucb { .. } => "d-klucb",
            Self::Dts { .. } => "dts",
            Self::Oracle { .. } => "oracle",
            Self::MKlucb { .. } => "m-klucb",
            Self::CusumKlucb { .. } => "cusum-klucb",
            Self::GlrKlucbLocal(_) => "glr-klucb-local",
            Self::GlrKlucbGlobal(_) => "glr-klucb-global",
        }
    }

    /// Parses a bare policy name into a spec with every parameter defaulted.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "klucb" => Self::Klucb,
            "ts" => Self::Ts,
            "sw-klucb" => Self::SwKlucb { window: None },
            "d-klucb" => Self::DKlucb { gamma: None },
            "dts" => Self::Dts { gamma: None },
            "oracle" => Self::Oracle { restarts: None },
            "m-klucb" => Self::MKlucb {
                window: None,
                threshold: None,
                gamma: None,
            },
            "cusum-klucb" => Self::CusumKlucb {
                warmup: None,
                epsilon: None,
                threshold: None,
                alpha: None,
                check_every: None,
                budget: None,
            },
            "glr-klucb-local" => Self::GlrKlucbLocal(GlrSpec::default()),
            "glr-klucb-global" => Self::GlrKlucbGlobal(GlrSpec::default()),
            other => {
                return Err(Error::validation(format!(
                    "unknown policy {other:?}; known: {}",
                    POLICY_NAMES.join(", ")
                )))
            }
        })
    }

    /// Instantiates the policy for `env`. `seed` drives the policy's own
    /// randomness (Thompson draws, random exploration).
    pub fn build(&self, env: &PiecewiseEnv, seed: u64) -> Result<Box<dyn Policy>> {
        let k = env.arms();
        let t = env.horizon();
        let upsilon = env.upsilon().max(1);
        Ok(match *self {
            Self::Klucb => Box::new(KlUcb::new(k)?),
            Self::Ts => Box::new(Thompson::new(k, seed)?),
            Self::SwKlucb { window } => Box::new(SwKlUcb::new(
                k,
                window.unwrap_or_else(|| SwKlUcb::recommended_window(t, upsilon)),
            )?),
            Self::DKlucb { gamma } => Box::new(DKlUcb::new(
                k,
                gamma.unwrap_or_else(|| DKlUcb::recommended_gamma(t, upsilon)),
            )?),
            Self::Dts { gamma } => Box::new(Thompson::discounted(k, gamma.unwrap_or(0.95), seed)?),
            Self::Oracle { restarts } => Box::new(match restarts.unwrap_or_default() {
                RestartMode::Local => OracleRestart::per_arm(env)?,
                RestartMode::Global => OracleRestart::new(k, env.breakpoints())?,
            }),
            Self::MKlucb {
                window,
                threshold,
                gamma,
            } => {
                let mut p = MKlUcbParams::recommended(window.unwrap_or(150), k, t, upsilon);
                if let Some(b) = threshold {
                    p.threshold = b;
                }
                if let Some(g) = gamma {
                    p.gamma = g;
                }
                Box::new(MKlUcb::new(k, p)?)
            }
            Self::CusumKlucb {
                warmup,
                epsilon,
                threshold,
                alpha,
                check_every,
                budget,
            } => {
                let mut p = CusumKlUcbParams::recommended(
                    warmup.unwrap_or(150),
                    epsilon.unwrap_or(0.1),
                    t,
                    upsilon,
                );
                if let Some(h) = threshold {
                    p.detector.threshold = h;
                }
                if let Some(a) = alpha {
                    p.alpha = a;
                }
                p.detector = CusumConfig {
                    check_every: check_every.unwrap_or(DEFAULT_GLR_STRIDE),
                    ..p.detector
                };
                p.budget = budget.unwrap_or_default();
                Box::new(CusumKlUcb::new(k, p, seed)?)
            }
            Self::GlrKlucbLocal(spec) => {
                Box::new(GlrKlUcb::new(k, glr_params(spec, RestartMode::Local, env)?)?)
            }
            Self::GlrKlucbGlobal(spec) => {
                Box::new(GlrKlUcb::new(k, glr_params(spec, RestartMode::Global, env)?)?)
            }
        })
    }
}

/// Benchmark defaults for GLR-klUCB on `env`:
/// local uses `alpha = alpha0 sqrt(Upsilon ln T / T)`, `delta = 1 / sqrt(Upsilon T)`,
/// global uses `alpha = alpha0 sqrt(K Upsilon ln T / T)`, `delta = 1 / sqrt(K Upsilon T)`.
pub fn glr_params(spec: GlrSpec, mode: RestartMode, env: &PiecewiseEnv) -> Result<GlrKlUcbParams> {
    let t = env.horizon() as f64;
    let scale = match mode {
        RestartMode::Local => env.upsilon().max(1) as f64,
        RestartMode::Global => (env.arms() * env.upsilon().max(1)) as f64,
    };
    let alpha0 = spec.alpha0.unwrap_or(DEFAULT_ALPHA0);
    if !(alpha0 >= 0.0) {
        return Err(Error::validation(format!("alpha0 must be >= 0, got {alpha0}")));
    }
    let alpha = spec
        .alpha
        .unwrap_or_else(|| (alpha0 * (scale * t.ln() / t).sqrt()).min(super::ALPHA_CAP));
    let delta = spec.delta.unwrap_or_else(|| 1.0 / (scale * t).sqrt());
    let detector = GlrConfig::new(delta, spec.threshold.unwrap_or_default()).with_strides(
        spec.stride_n.unwrap_or(DEFAULT_GLR_STRIDE),
        spec.stride_s.unwrap_or(DEFAULT_GLR_STRIDE),
    );
    detector.validate()?;
    Ok(GlrKlUcbParams {
        alpha,
        mode,
        detector,
    })
}
