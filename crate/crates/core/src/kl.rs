// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scalar kernels shared by the detectors and the index policies.
//!
//! Everything here is a pure function of its arguments. The hot-path
//! functions ([`kl_bernoulli`], [`klucb_upper`]) do not validate their
//! inputs; the `*_checked` style wrappers ([`kl_bern`], [`h_inv`]) do.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite stand-in for `kl(x, 0)` / `kl(x, 1)` when `x` is interior.
pub const KL_SENTINEL: f64 = 1e18;

/// Guaranteed bound on `|count * kl(mean, q) - budget|` for the value `q < 1`
/// returned by [`klucb_upper`].
pub const KLUCB_TOLERANCE: f64 = 1e-9;

/// Binary relative entropy `kl(x, y)` in nats, unchecked.
///
/// Uses `0 ln 0 = 0`. Returns [`KL_SENTINEL`] when `y` is 0 or 1 and differs
/// from `x`. Callers must keep both arguments in `[0, 1]`.
#[inline]
pub fn kl_bernoulli(x: f64, y: f64) -> f64 {
    if x == y {
        return 0.0;
    }
    if y <= 0.0 || y >= 1.0 {
        return KL_SENTINEL;
    }
    let mut d = 0.0;
    if x > 0.0 {
        d += x * (x / y).ln();
    }
    if x < 1.0 {
        d += (1.0 - x) * ((1.0 - x) / (1.0 - y)).ln();
    }
    d.max(0.0)
}

/// Checked binary relative entropy.
pub fn kl_bern(x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::domain(format!(
            "kl arguments must lie in [0, 1], got ({x}, {y})"
        )));
    }
    Ok(kl_bernoulli(x, y))
}

/// Quadratic divergence `2 (x - y)^2`, the Gaussian GLR with variance 1/4.
#[inline]
pub fn kl_gaussian(x: f64, y: f64) -> f64 {
    let d = x - y;
    2.0 * d * d
}

/// Divergence used inside a GLR scan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Divergence {
    #[default]
    Bernoulli,
    Gaussian,
}

impl Divergence {
    #[inline]
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            Divergence::Bernoulli => kl_bernoulli(x, y),
            Divergence::Gaussian => kl_gaussian(x, y),
        }
    }
}

/// klUCB upper confidence bound.
///
/// Largest `q` in `[mean, 1]` such that `count * kl(mean, q) <= budget`.
/// `count` is real so that discounted counts can be used; a non-positive
/// count means the arm carries no information and the bound is 1.
///
/// The root is bracketed above by the tighter of Pinsker's inequality and
/// `kl(m, q) >= m ln m + (1 - m) ln((1 - m) / (1 - q))`, then found with
/// Newton steps from that upper end. `kl(mean, .)` is convex and increasing
/// above `mean`, so the iterates decrease monotonically to the root;
/// bisection is only a safeguard against round-off.
pub fn klucb_upper(mean: f64, count: f64, budget: f64) -> f64 {
    if count <= 0.0 {
        return 1.0;
    }
    let mean = mean.clamp(0.0, 1.0);
    if budget <= 0.0 || mean >= 1.0 {
        return mean;
    }
    let level = budget / count;
    let excess = |q: f64| kl_bernoulli(mean, q) - level;

    let entropy = if mean > 0.0 { mean * mean.ln() } else { 0.0 };
    let pinsker = mean + (level / 2.0).sqrt();
    let tail = 1.0 - (1.0 - mean) * ((entropy - level) / (1.0 - mean)).exp();
    let mut lo = mean;
    let mut hi = pinsker.min(tail);
    let last = f64::from_bits(1.0f64.to_bits() - 1);
    if hi >= last {
        if excess(last) <= 0.0 {
            return 1.0;
        }
        hi = last;
    }
    let mut q = hi;
    for _ in 0..100 {
        let e = excess(q);
        if e > 0.0 {
            hi = q;
        } else {
            lo = q;
        }
        if e == 0.0 || hi - lo <= f64::EPSILON * hi {
            break;
        }
        let slope = (q - mean) / (q * (1.0 - q));
        let mut next = q - e / slope;
        if (next - q).abs() <= 4.0 * f64::EPSILON * q {
            break;
        }
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        q = next;
    }
    q
}

/// Exploration function `f(t) = ln t + 3 ln ln t`, zero for `t <= 1` and
/// clamped at zero where the raw value is negative.
#[inline]
pub fn f_explore(t: u64) -> f64 {
    f_explore_real(t as f64)
}

/// [`f_explore`] on a real argument (discounted time).
#[inline]
pub fn f_explore_real(t: f64) -> f64 {
    if t <= 1.0 {
        return 0.0;
    }
    let lt = t.ln();
    (lt + 3.0 * lt.ln()).max(0.0)
}

/// `h(u) = u - ln u` on `u >= 1`.
#[inline]
pub fn h(u: f64) -> f64 {
    u - u.ln()
}

/// Inverse of [`h`] on `[1, inf)`.
pub fn h_inv(y: f64) -> Result<f64> {
    if !(y >= 1.0) || !y.is_finite() {
        return Err(Error::domain(format!("h_inv needs y >= 1, got {y}")));
    }
    Ok(h_inv_unchecked(y))
}

/// Safeguarded Newton on `u - ln u - y` using the bracket `[y, 2y]`.
fn h_inv_unchecked(y: f64) -> f64 {
    if y <= 1.0 {
        return 1.0;
    }
    let phi = |u: f64| u - u.ln() - y;
    let (mut lo, mut hi) = (y, 2.0 * y);
    let mut u = (y + y.ln()).clamp(lo, hi);
    for _ in 0..200 {
        let value = phi(u);
        if value == 0.0 {
            return u;
        }
        if value < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let slope = 1.0 - 1.0 / u;
        let mut next = if slope > 0.0 { u - value / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-12 * u || hi - lo <= 1e-15 * hi {
            return next;
        }
        u = next;
    }
    u
}

fn h_tilde_crossover() -> f64 {
    static CROSSOVER: OnceLock<f64> = OnceLock::new();
    *CROSSOVER.get_or_init(|| h_inv_unchecked(1.0 / 1.5f64.ln()))
}

/// Two-branch `h~` used to build the uniform-in-time threshold.
pub fn h_tilde(x: f64) -> f64 {
    if x >= h_tilde_crossover() {
        let u = h_inv_unchecked(x);
        (1.0 / u).exp() * u
    } else {
        1.5 * (x - 1.5f64.ln().ln())
    }
}

/// The `T(x)` function of the full GLR threshold. Negative inputs are treated as 0.
pub fn cal_t(x: f64) -> f64 {
    let x = x.max(0.0);
    let zeta2 = PI * PI / 6.0;
    2.0 * h_tilde((h_inv_unchecked(1.0 + x) + (2.0 * zeta2).ln()) / 2.0)
}

/// Which GLR threshold function to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdFamily {
    /// Threshold with the proven false-alarm guarantee.
    Full,
    /// Leading term only, `ln(3 n^{3/2} / delta)`.
    #[default]
    Practical,
    /// `+inf`: the detector never fires. Reference point for `delta -> 0`.
    Infinite,
}

impl std::str::FromStr for ThresholdFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "practical" => Ok(Self::Practical),
            "infinite" => Ok(Self::Infinite),
            other => Err(Error::validation(format!(
                "unknown threshold family {other:?} (expected full|practical|infinite)"
            ))),
        }
    }
}

/// `beta(n, delta)` for the given family, without validating `delta`.
pub fn beta_threshold(n: u64, delta: f64, family: ThresholdFamily) -> f64 {
    let n = n.max(1) as f64;
    let log_term = (3.0 * n * n.sqrt() / delta).ln();
    match family {
        ThresholdFamily::Practical => log_term,
        ThresholdFamily::Full => 2.0 * cal_t(log_term / 2.0) + 6.0 * (1.0 + n.ln()).ln(),
        ThresholdFamily::Infinite => f64::INFINITY,
    }
}

/// Validated confidence level plus threshold family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    delta: f64,
    family: ThresholdFamily,
}

impl ThresholdParams {
    pub fn new(delta: f64, family: ThresholdFamily) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { delta, family })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn family(&self) -> ThresholdFamily {
        self.family
    }

    pub fn beta(&self, n: u64) -> f64 {
        beta_threshold(n, self.delta, self.family)
    }
}
