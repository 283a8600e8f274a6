//! Exponents of the random-sampling argument for the modified protocol.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::gfvec::check_prime;
use crate::typesys::pinsker_constant;

/// ε grid step for the one-dimensional minimizations.
pub const EPS_STEP: f64 = 1e-5;

/// The entropy-continuity modulus: 0 at 0, `−x·log_d(x/d)` on `(0, ½]`,
/// 1 above ½.
pub fn theta(x: f64, d: u32) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= 0.5 {
        -x * (x / d as f64).ln() / (d as f64).ln()
    } else {
        1.0
    }
}

/// `g(α) = √(α(1−α)) / (√α + √(1−α))`.
pub fn g_alpha(alpha: f64) -> f64 {
    (alpha * (1.0 - alpha)).sqrt() / (alpha.sqrt() + (1.0 - alpha).sqrt())
}

/// `min_{0≤ε≤2} [c·ε²/K_d + |γ − θ(ε)|⁺]`.
///
/// θ jumps at ½ for d > 2, so the infimum from the right of ½ is added as
/// an explicit candidate.
fn min_over_eps(c: f64, gamma: f64, d: u32) -> f64 {
    let kd = pinsker_constant(d);
    let f = |e: f64| c * e * e / kd + (gamma - theta(e, d)).max(0.0);
    let steps = (2.0 / EPS_STEP).round() as usize;
    let mut best = f64::INFINITY;
    let mut best_i = 0;
    for i in 0..=steps {
        let v = f(i as f64 * EPS_STEP);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    // Golden-section polish inside the bracketing cell pair.
    let lo = (best_i.saturating_sub(1)) as f64 * EPS_STEP;
    let hi = ((best_i + 1).min(steps)) as f64 * EPS_STEP;
    let (mut a, mut b) = (lo, hi);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if f(x1) <= f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    best = best.min(f(0.5 * (a + b)));
    let right_of_half = c * 0.25 / kd + (gamma - 1.0).max(0.0);
    best.min(right_of_half)
}

fn check_inputs(gamma: f64, d: u32) -> Result<()> {
    check_prime(d)?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("γ = {gamma} must be finite and nonnegative")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("α = {alpha} outside (0,1)")));
    }
    Ok(())
}

/// `E1(γ,α) = min_ε [(1−α)⁻¹(g(α)ε)²/K_d + |γ − θ(ε)|⁺]`.
pub fn e1(gamma: f64, alpha: f64, d: u32) -> Result<f64> {
    check_inputs(gamma, d)?;
    check_alpha(alpha)?;
    let g = g_alpha(alpha);
    Ok(min_over_eps(g * g / (1.0 - alpha), gamma, d))
}

/// `G = min_{α∈[r0,r1]} (1−α)⁻¹ g(α)²` on a grid that includes both ends.
pub fn g_min(r0: f64, r1: f64) -> Result<f64> {
    check_alpha(r0)?;
    check_alpha(r1)?;
    if r0 >= r1 {
        return Err(invalid(format!("need r0 < r1, got {r0} ≥ {r1}")));
    }
    let steps = 10_000;
    Ok((0..=steps)
        .map(|i| {
            let a = r0 + (r1 - r0) * i as f64 / steps as f64;
            g_alpha(a).powi(2) / (1.0 - a)
        })
        .fold(f64::INFINITY, f64::min))
}

/// `E2(γ,r0,r1) = min_ε [G·ε²/K_d + |γ − θ(ε)|⁺]`.
pub fn e2(gamma: f64, r0: f64, r1: f64, d: u32) -> Result<f64> {
    check_inputs(gamma, d)?;
    Ok(min_over_eps(g_min(r0, r1)?, gamma, d))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SamplingExponents {
    pub g_alpha: f64,
    pub e1: f64,
    pub big_g: f64,
    pub e2: f64,
}

pub fn sampling_exponents(
    gamma: f64,
    alpha: f64,
    r0: f64,
    r1: f64,
    d: u32,
) -> Result<SamplingExponents> {
    Ok(SamplingExponents {
        g_alpha: g_alpha(alpha),
        e1: e1(gamma, alpha, d)?,
        big_g: g_min(r0, r1)?,
        e2: e2(gamma, r0, r1, d)?,
    })
}

/// `2|P_N|²·d^{−N(g(α)ε)²/K_d}`, the bound on `Pr{||P_{Y′} − P_{Y″}||₁ ≥ ε}`
/// when n of N symbols are sampled and `α = (N−n)/N`.
pub fn sampling_tail_bound(big_n: u64, n: u64, eps: f64, alphabet: usize, d: u32) -> Result<f64> {
    if n == 0 || n >= big_n {
        return Err(invalid(format!("need 0 < n < N, got n={n}, N={big_n}")));
    }
    let alpha = (big_n - n) as f64 / big_n as f64;
    let types = crate::typesys::num_types(big_n, alphabet)? as f64;
    let g = g_alpha(alpha);
    let expo = big_n as f64 * (g * eps).powi(2) / pinsker_constant(d);
    Ok(2.0 * types * types * (d as f64).powf(-expo))
}
