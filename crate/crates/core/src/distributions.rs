//! Single-variable discrete mutation distributions on the integers.
//!
//! Four symmetric laws are supported, each controlled through the expected
//! absolute step `s = E|z|` of one coordinate:
//!
//! | kind | parameter | support |
//! |------|-----------|---------|
//! | [`DistributionKind::Du`] discrete uniform | `N ≥ 0` integer | `{-N..N}` |
//! | [`DistributionKind::Sb`] shifted binomial | `N ≥ 0` even | `{-N/2..N/2}` |
//! | [`DistributionKind::Tn`] rounded normal | `σ > 0` | `Z` |
//! | [`DistributionKind::Dg`] double geometric | `0 < p < 1` | `Z` |

use std::f64::consts::{FRAC_2_SQRT_PI, LN_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Default probability mass allowed outside the summation window.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    Du,
    Sb,
    Tn,
    Dg,
}

impl DistributionKind {
    pub const ALL: [DistributionKind; 4] = [Self::Du, Self::Sb, Self::Tn, Self::Dg];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Du => "DU",
            Self::Sb => "SB",
            Self::Tn => "TN",
            Self::Dg => "DG",
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "du" => Ok(Self::Du),
            "sb" => Ok(Self::Sb),
            "tn" => Ok(Self::Tn),
            "dg" => Ok(Self::Dg),
            other => {
                Err(Error::ParamDomain(format!("unknown distribution kind '{other}' (expected du, sb, tn or dg)")))
            }
        }
    }
}

/// A validated distribution parameter.
///
/// The meaning of `value` depends on the kind: the half-width `N` for DU, the
/// number of trials `N` for SB, the standard deviation `σ` for TN and the
/// success probability `p` for DG.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistParam {
    kind: DistributionKind,
    value: f64,
}

impl DistParam {
    pub fn new(kind: DistributionKind, value: f64) -> Result<Self> {
        let ok = match kind {
            DistributionKind::Du => value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64,
            DistributionKind::Sb => {
                value >= 0.0 && value.fract() == 0.0 && value % 2.0 == 0.0 && value <= u32::MAX as f64
            }
            DistributionKind::Tn => value > 0.0 && value.is_finite(),
            DistributionKind::Dg => value > 0.0 && value < 1.0,
        };
        if ok {
            Ok(Self { kind, value })
        } else {
            let rule = match kind {
                DistributionKind::Du => "a non-negative integer",
                DistributionKind::Sb => "a non-negative even integer",
                DistributionKind::Tn => "a positive finite real",
                DistributionKind::Dg => "in the open interval (0, 1)",
            };
            Err(Error::ParamDomain(format!("{kind} parameter {value} must be {rule}")))
        }
    }

    pub fn du(n: u32) -> Self {
        Self { kind: DistributionKind::Du, value: n as f64 }
    }

    pub fn sb(n: u32) -> Result<Self> {
        Self::new(DistributionKind::Sb, n as f64)
    }

    pub fn tn(sigma: f64) -> Result<Self> {
        Self::new(DistributionKind::Tn, sigma)
    }

    pub fn dg(p: f64) -> Result<Self> {
        Self::new(DistributionKind::Dg, p)
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Integer parameter `N` of DU/SB.
    fn n(&self) -> u64 {
        self.value as u64
    }
}

/// Exact probability `Pr{z = k}`.
pub fn pmf_exact(param: &DistParam, k: i64) -> f64 {
    let a = k.unsigned_abs();
    match param.kind {
        DistributionKind::Du => {
            let n = param.n();
            if a <= n {
                1.0 / (2 * n + 1) as f64
            } else {
                0.0
            }
        }
        DistributionKind::Sb => {
            let n = param.n();
            let half = n / 2;
            if a > half {
                return 0.0;
            }
            let j = (half + a) as f64;
            let nf = n as f64;
            (ln_gamma(nf + 1.0) - ln_gamma(j + 1.0) - ln_gamma(nf - j + 1.0) - nf * LN_2).exp()
        }
        DistributionKind::Tn => {
            let scale = SQRT_2 * param.value;
            if a == 0 {
                erf(0.5 / scale)
            } else {
                // erfc keeps the far tail accurate where erf differences cancel.
                let lo = (a as f64 - 0.5) / scale;
                let hi = (a as f64 + 0.5) / scale;
                (0.5 * (erfc(lo) - erfc(hi))).max(0.0)
            }
        }
        DistributionKind::Dg => {
            let p = param.value;
            p / (2.0 - p) * (a as f64 * (-p).ln_1p()).exp()
        }
    }
}

/// Mean-value approximation `exp(-k²/(2σ²))/√π` of the rounded-normal pmf.
///
/// Not normalized: its sum over `Z` is close to one only for `σ ≈ 1/√2`.
pub fn tn_pmf_approx(sigma: f64, k: i64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::ParamDomain(format!("TN sigma {sigma} must be positive")));
    }
    let kf = k as f64;
    Ok(0.5 * FRAC_2_SQRT_PI * (-kf * kf / (2.0 * sigma * sigma)).exp())
}

/// Parameter whose per-coordinate expected absolute step is (approximately) `s`.
///
/// DU takes the floor of the exact inverse of `N(N+1)/(2N+1)`, SB the even
/// integer nearest to `2πs²` (the large-`N` inverse of the binomial mean
/// absolute deviation), TN uses `σ = √(π/2)·s` and DG
/// `p = 1 − s/(√(1+s²)+1)`.
pub fn param_from_step(kind: DistributionKind, s: f64) -> Result<DistParam> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::ParamDomain(format!("step size {s} must be positive and finite")));
    }
    match kind {
        DistributionKind::Du => {
            let n = ((2.0 * s - 1.0 + (1.0 + 4.0 * s * s).sqrt()) / 2.0 + 1e-9).floor();
            DistParam::new(kind, n.max(0.0))
        }
        DistributionKind::Sb => {
            let n = 2.0 * (PI * s * s).round();
            DistParam::new(kind, n)
        }
        DistributionKind::Tn => DistParam::tn(tn_sigma_for_step(s)),
        DistributionKind::Dg => DistParam::dg(dg_p_for_step(s)),
    }
}

/// `σ = √(π/2)·s`, unvalidated.
#[inline]
pub(crate) fn tn_sigma_for_step(s: f64) -> f64 {
    (PI / 2.0).sqrt() * s
}

/// `p = 1 − s/(√(1+s²)+1)`, unvalidated; may round to 1 for vanishing `s`.
#[inline]
pub(crate) fn dg_p_for_step(s: f64) -> f64 {
    let r = (1.0 + s * s).sqrt();
    // rearranged with r - s = 1/(r+s) to avoid cancellation for large s
    (1.0 + 1.0 / (r + s)) / (r + 1.0)
}

/// Per-coordinate expected absolute step `E|z|` implied by a parameter.
///
/// Exact for DU, SB and DG; for TN this is the continuous-normal value
/// `σ√(2/π)`, the exact inverse of [`param_from_step`]. Use
/// [`mean_abs_exact`] for the rounded-normal expectation.
pub fn step_from_param(param: &DistParam) -> f64 {
    match param.kind {
        DistributionKind::Du => {
            let n = param.value;
            n * (n + 1.0) / (2.0 * n + 1.0)
        }
        DistributionKind::Sb => {
            let m = (param.n() / 2) as f64;
            if m == 0.0 {
                0.0
            } else {
                (m.ln() + ln_gamma(2.0 * m + 1.0) - 2.0 * ln_gamma(m + 1.0) - 2.0 * m * LN_2).exp()
            }
        }
        DistributionKind::Tn => param.value * (2.0 / PI).sqrt(),
        DistributionKind::Dg => {
            let p = param.value;
            2.0 * (1.0 - p) / (p * (2.0 - p))
        }
    }
}

/// `E|z|` computed by summing the exact pmf over the truncation window.
pub fn mean_abs_exact(param: &DistParam) -> f64 {
    let k_max = support_window(param, DEFAULT_TAIL_EPS);
    (1..=k_max as i64).map(|k| 2.0 * k as f64 * pmf_exact(param, k)).sum()
}

/// Smallest `K` such that the mass outside `[-K, K]` is below `tail_eps`
/// (bounded supports return their half-width).
pub fn support_window(param: &DistParam, tail_eps: f64) -> u64 {
    match param.kind {
        DistributionKind::Du => param.n(),
        DistributionKind::Sb => param.n() / 2,
        DistributionKind::Tn => {
            // Two-sided tail erfc(x) <= exp(-x²) with x = (K + 1/2)/(√2σ).
            let x = (1.0 / tail_eps).ln().sqrt();
            (SQRT_2 * param.value * x - 0.5).ceil().max(0.0) as u64
        }
        DistributionKind::Dg => {
            // Two-sided tail 2(1-p)^(K+1)/(2-p).
            let p = param.value;
            let k1 = (tail_eps * (2.0 - p) / 2.0).ln() / (-p).ln_1p();
            (k1.ceil() - 1.0).max(0.0) as u64
        }
    }
}

/// Maps a uniform deviate `u ∈ [0, 1)` to a one-sided geometric variate with
/// `Pr{g = k} = p(1-p)^k` by inversion.
#[inline]
pub fn geometric_from_uniform(u: f64, p: f64) -> u64 {
    let g = ((-u).ln_1p() / (-p).ln_1p()).floor();
    // saturating float-to-int conversion guards u extremely close to 1
    g as u64
}

pub fn sample_geometric(p: f64, rng: &mut RandomSource) -> Result<u64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ParamDomain(format!("geometric p {p} must lie in (0, 1)")));
    }
    Ok(geometric_from_uniform(rng.uniform(), p))
}

/// Draws one variate distributed as [`pmf_exact`].
pub fn sample(param: &DistParam, rng: &mut RandomSource) -> i64 {
    match param.kind {
        DistributionKind::Du => {
            let n = param.n() as i64;
            if n == 0 {
                0
            } else {
                rng.int_inclusive(-n, n)
            }
        }
        DistributionKind::Sb => {
            let n = param.n();
            let mut heads = 0u64;
            let mut remaining = n;
            while remaining > 0 {
                let bits = rng.next_u64();
                if remaining >= 64 {
                    heads += bits.count_ones() as u64;
                    remaining -= 64;
                } else {
                    heads += (bits & ((1u64 << remaining) - 1)).count_ones() as u64;
                    remaining = 0;
                }
            }
            heads as i64 - (n / 2) as i64
        }
        DistributionKind::Tn => round_half_away(param.value * rng.standard_normal()),
        DistributionKind::Dg => {
            let p = param.value;
            let g1 = geometric_from_uniform(rng.uniform(), p);
            let g2 = geometric_from_uniform(rng.uniform(), p);
            g1 as i64 - g2 as i64
        }
    }
}

/// Rounds to the nearest integer, ties away from zero; saturates at the i64 range.
#[inline]
pub fn round_half_away(x: f64) -> i64 {
    x.round() as i64
}

fn check_tail_eps(tail_eps: f64) -> Result<()> {
    if tail_eps > 0.0 && tail_eps <= 1e-9 {
        Ok(())
    } else {
        Err(Error::ParamDomain(format!("tail_eps {tail_eps} must lie in (0, 1e-9]")))
    }
}

fn neg_p_log2_p(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits, summed over a window holding at least
/// `1 - tail_eps` of the mass. DU is evaluated in closed form.
pub fn entropy_exact(param: &DistParam, tail_eps: f64) -> Result<f64> {
    check_tail_eps(tail_eps)?;
    if param.kind == DistributionKind::Du {
        return Ok(((2 * param.n() + 1) as f64).log2());
    }
    let k_max = support_window(param, tail_eps) as i64;
    let tail: f64 = (1..=k_max).map(|k| neg_p_log2_p(pmf_exact(param, k))).sum();
    Ok(neg_p_log2_p(pmf_exact(param, 0)) + 2.0 * tail)
}

/// Entropy-like sum `-Σ q_k log2 q_k` over the unnormalized approximate TN pmf.
pub fn entropy_tn_approx(sigma: f64, tail_eps: f64) -> Result<f64> {
    check_tail_eps(tail_eps)?;
    let param = DistParam::tn(sigma)?;
    let k_max = support_window(&param, tail_eps) as i64;
    let mut h = neg_p_log2_p(tn_pmf_approx(sigma, 0)?);
    for k in 1..=k_max {
        h += 2.0 * neg_p_log2_p(tn_pmf_approx(sigma, k)?);
    }
    Ok(h)
}
