//! Error exponents, the finite-n bounds built from them, and key rates.
//!
//! Entropies and divergences are in base d throughout, except [`e_gv`],
//! which is stated with the binary entropy and works in bits.

pub mod rates;
pub mod sampling;
pub mod simplex;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::typesys::{entropy_of, kl_of, Dist, JointDist};
pub use rates::{
    achievable_rates, chosen_rate_modified, q_star, rate_curve, select_rate, zero_crossings,
    ModifiedRate, RateCurvePoint, RateReport, RateSelection,
};
pub use sampling::{
    e1, e2, g_alpha, g_min, sampling_exponents, sampling_tail_bound, theta, SamplingExponents,
};
pub use simplex::{minimize, Minimum, SimplexGrid};

/// A minimized exponent with its minimizer.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentResult {
    pub value: f64,
    /// One distribution, or the pair for [`e_cond`].
    pub argmin: Vec<Dist>,
    /// Final step of the simplex search (0 for closed-form solutions).
    pub resolution: f64,
}

fn pos(t: f64) -> f64 {
    t.max(0.0)
}

fn alphabet_ok(p: &Dist) -> Result<usize> {
    let s = p.alphabet();
    if s < 2 {
        return Err(invalid("exponents need an alphabet of at least two symbols"));
    }
    Ok(s)
}

fn check_rate(r: f64) -> Result<()> {
    if !r.is_finite() || !(0.0..=1.0).contains(&r) {
        return Err(invalid(format!("rate {r} outside [0,1]")));
    }
    Ok(())
}

/// The objective `D(Q||p) + ½|1 − 2H(Q) − R|⁺`.
pub fn estar_objective(q: &[f64], r: f64, p: &[f64]) -> f64 {
    let base = p.len() as f64;
    kl_of(q, p, base) + 0.5 * pos(1.0 - 2.0 * entropy_of(q, base) - r)
}

/// `E*(R,p) = min_Q [D(Q||p) + ½|1 − 2H(Q) − R|⁺]`.
pub fn estar(r: f64, p: &Dist) -> Result<ExponentResult> {
    let s = alphabet_ok(p)?;
    estar_with(r, p, &SimplexGrid::default_for(s, 1), &[])
}

/// [`estar`] with an explicit grid and extra starting candidates.
pub fn estar_with(
    r: f64,
    p: &Dist,
    grid: &SimplexGrid,
    extra: &[Vec<f64>],
) -> Result<ExponentResult> {
    check_rate(r)?;
    let s = alphabet_ok(p)?;
    if grid.s != s || grid.blocks != 1 {
        return Err(invalid("grid shape does not match the alphabet"));
    }
    let probs = p.probs();
    let mut cands = vec![probs.to_vec(), tilted_candidate(r, &[probs])];
    cands.extend_from_slice(extra);
    let m = minimize(grid, &|q: &[f64]| estar_objective(q, r, probs), &cands);
    Ok(ExponentResult {
        value: m.value,
        argmin: vec![Dist::normalized(m.point)?],
        resolution: m.step,
    })
}

/// `p^{1/(1+λ)}` normalized.
fn tilt(p: &[f64], lam: f64) -> (Vec<f64>, f64) {
    let w: Vec<f64> = p
        .iter()
        .map(|&x| if x > 0.0 { x.powf(1.0 / (1.0 + lam)) } else { 0.0 })
        .collect();
    let z: f64 = w.iter().sum();
    (w.into_iter().map(|x| x / z).collect(), z)
}

/// Starting point from the dual of the hinge: with `|t|⁺ = max_{λ∈[0,1]} λt`
/// the inner minimum over each Q is attained at `Q ∝ p^{1/(1+λ)}`, and the
/// outer function `½λ(1−R)·c − (1+λ)Σ log Z` is concave in λ. The block
/// count gives `c` (the hinge weight) as 1 for one distribution and ½ per
/// block for two.
fn tilted_candidate(r: f64, blocks: &[&[f64]]) -> Vec<f64> {
    let base = blocks[0].len() as f64;
    let weight = if blocks.len() == 1 { 1.0 } else { 0.5 };
    let dual = |lam: f64| {
        let logs: f64 = blocks.iter().map(|p| tilt(p, lam).1.ln() / base.ln()).sum();
        weight * (0.5 * lam * (1.0 - r) * blocks.len() as f64 - (1.0 + lam) * logs)
    };
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..120 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if dual(x1) < dual(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    let lam = 0.5 * (a + b);
    blocks.iter().flat_map(|p| tilt(p, lam).0).collect()
}

/// `E*(R,p)` along a rate sweep. Each minimizer seeds the next rate, so
/// the sweep is non-increasing in R whenever the rates are increasing.
pub fn estar_sweep(rates: &[f64], p: &Dist) -> Result<Vec<ExponentResult>> {
    let s = alphabet_ok(p)?;
    let grid = SimplexGrid::default_for(s, 1);
    let mut out: Vec<ExponentResult> = Vec::with_capacity(rates.len());
    for &r in rates {
        let seed: Vec<Vec<f64>> = out
            .last()
            .map(|prev| vec![prev.argmin[0].probs().to_vec()])
            .unwrap_or_default();
        out.push(estar_with(r, p, &grid, &seed)?);
    }
    Ok(out)
}

/// `E(R,P̄,P̿) = min{E*(R,P̄), E*(R,P̿)}`.
pub fn e_joint(r: f64, pbar: &Dist, pdbar: &Dist) -> Result<ExponentResult> {
    if pbar.alphabet() != pdbar.alphabet() {
        return Err(Error::LengthMismatch {
            expected: pbar.alphabet(),
            got: pdbar.alphabet(),
        });
    }
    let a = estar(r, pbar)?;
    let b = estar(r, pdbar)?;
    Ok(if b.value < a.value { b } else { a })
}

/// `3(d−1)log_d(n+1) + log_d 2 + d`.
pub fn o_n(n: u64, d: u32) -> f64 {
    let ln_d = (d as f64).ln();
    3.0 * (d as f64 - 1.0) * ((n as f64 + 1.0).ln() / ln_d) + 2f64.ln() / ln_d + d as f64
}

/// `d^{−nE + o(n)} = 2·d^d·(n+1)^{3(d−1)}·d^{−nE}`, unclamped.
pub fn fidelity_bound(n: u64, e: f64, d: u32) -> f64 {
    (d as f64).powf(-(n as f64) * e + o_n(n, d))
}

/// The information-leakage bound `2·d^{−nE+o(n)}·[n(E+R) − o(n)]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LeakageBound {
    /// The formula as written.
    pub raw: f64,
    /// `raw` clamped to `[0, nR]`; `nR` digits is all a key of rate R holds.
    pub reported: f64,
    /// False when the formula does not beat the trivial `nR` cap.
    pub informative: bool,
}

pub fn leakage_bound(n: u64, e: f64, r: f64, d: u32) -> Result<LeakageBound> {
    if n == 0 {
        return Err(invalid("leakage bound needs n ≥ 1"));
    }
    if e < 0.0 || !e.is_finite() {
        return Err(invalid(format!("exponent {e} must be finite and nonnegative")));
    }
    check_rate(r)?;
    let raw = leakage_raw(n as f64, e, r, d);
    let cap = n as f64 * r;
    let informative = raw >= 0.0 && raw < cap;
    Ok(LeakageBound {
        raw,
        reported: if informative { raw } else { cap },
        informative,
    })
}

fn leakage_raw(n: f64, e: f64, r: f64, d: u32) -> f64 {
    let ln_d = (d as f64).ln();
    let o = 3.0 * (d as f64 - 1.0) * ((n + 1.0).ln() / ln_d) + 2f64.ln() / ln_d + d as f64;
    2.0 * (d as f64).powf(-n * e + o) * (n * (e + r) - o)
}

/// Smallest `n₀` such that the leakage bound strictly decreases on every
/// `n ≥ n₀` (with a positive bracket), found from the log-derivative.
pub fn leakage_monotone_threshold(e: f64, r: f64, d: u32) -> Result<u64> {
    if e <= 0.0 || !e.is_finite() {
        return Err(invalid("monotonicity needs a positive exponent"));
    }
    check_rate(r)?;
    let ln_d = (d as f64).ln();
    let k = 3.0 * (d as f64 - 1.0);
    // d/dn ln f = −E ln d + k/(n+1) + (E + R − o′)/(n(E+R) − o), o′ = k/((n+1) ln d).
    // Past the first n where the bracket is positive and the derivative is
    // negative, every term keeps shrinking, so the sign cannot flip back.
    let mut n: u64 = 1;
    loop {
        let nf = n as f64;
        let o = k * ((nf + 1.0).ln() / ln_d) + 2f64.ln() / ln_d + d as f64;
        let bracket = nf * (e + r) - o;
        let o_prime = k / ((nf + 1.0) * ln_d);
        if bracket > 0.0 && e + r > o_prime {
            let deriv = -e * ln_d + k / (nf + 1.0) + (e + r - o_prime) / bracket;
            if deriv < 0.0 {
                return Ok(n);
            }
        }
        n = n
            .checked_add(1.max(n / 64))
            .ok_or_else(|| invalid("no monotonicity threshold found"))?;
        if n > 1 << 40 {
            return Err(invalid("no monotonicity threshold found"));
        }
    }
}

/// Binary-entropy root `u ∈ [0, ½]` of `h₂(u) = t`, for `t ∈ [0,1]`.
fn h2_inverse(t: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if crate::typesys::h2(mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `U(i,j) = [i=1] + [j=1]` on the row-major 2×2 layout.
const GV_U: [f64; 4] = [0.0, 1.0, 1.0, 2.0];

/// `E_GV(R,P) = min D(Q||P)` over joints with `1 − 2h₂(Q̄(1)+Q̿(1)) ≤ R` or
/// `Q̄(1)+Q̿(1) ≥ 1`, in bits.
///
/// With `u = Q̄(1)+Q̿(1)` the feasible set is `u ∈ [u*, 1−u*] ∪ [1, 2]`
/// where `h₂(u*) = (1−R)/2`. The I-projection onto `E_Q[U] = c` is the
/// exponential tilt `Q ∝ P·e^{λU}`, and the divergence is convex in c, so
/// the minimum sits on the face nearest to `E_P[U]`.
pub fn e_gv(r: f64, pm: &JointDist) -> Result<ExponentResult> {
    check_rate(r)?;
    if pm.alphabet() != 2 {
        return Err(invalid("E_GV is only defined for d = 2"));
    }
    let p = pm.table();
    let u0: f64 = p.iter().zip(GV_U).map(|(a, u)| a * u).sum();
    let u_star = h2_inverse((1.0 - r) / 2.0);
    let feasible = |u: f64| (u >= u_star && u <= 1.0 - u_star) || u >= 1.0;
    if feasible(u0) {
        return Ok(ExponentResult {
            value: 0.0,
            argmin: vec![pm.as_dist()],
            resolution: 0.0,
        });
    }
    let faces: Vec<f64> = if u0 < u_star {
        vec![u_star]
    } else {
        vec![1.0 - u_star, 1.0]
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for c in faces {
        if let Some((v, q)) = tilt_projection(p, c) {
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, q));
            }
        }
    }
    Ok(match best {
        Some((value, q)) => ExponentResult {
            value,
            argmin: vec![Dist::normalized(q)?],
            resolution: 0.0,
        },
        None => ExponentResult {
            value: f64::INFINITY,
            argmin: vec![Dist::uniform(4)?],
            resolution: 0.0,
        },
    })
}

/// `min D(Q||P)` in bits subject to `E_Q[U] = c`, or None when no Q on the
/// support of P reaches c.
fn tilt_projection(p: &[f64], c: f64) -> Option<(f64, Vec<f64>)> {
    let supp: Vec<usize> = (0..4).filter(|&i| p[i] > 0.0).collect();
    let lo = supp.iter().map(|&i| GV_U[i]).fold(f64::INFINITY, f64::min);
    let hi = supp.iter().map(|&i| GV_U[i]).fold(f64::NEG_INFINITY, f64::max);
    if c < lo - 1e-15 || c > hi + 1e-15 {
        return None;
    }
    let edge = |target: f64| {
        let mass: f64 = supp.iter().filter(|&&i| GV_U[i] == target).map(|&i| p[i]).sum();
        let q: Vec<f64> = (0..4)
            .map(|i| if p[i] > 0.0 && GV_U[i] == target { p[i] / mass } else { 0.0 })
            .collect();
        Some((-mass.log2(), q))
    };
    if (c - hi).abs() <= 1e-15 {
        return edge(hi);
    }
    if (c - lo).abs() <= 1e-15 {
        return edge(lo);
    }
    let tilt = |lam: f64| -> (f64, Vec<f64>) {
        let m = supp
            .iter()
            .map(|&i| lam * GV_U[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = (0..4)
            .map(|i| if p[i] > 0.0 { p[i] * (lam * GV_U[i] - m).exp() } else { 0.0 })
            .collect();
        let z: f64 = w.iter().sum();
        let q: Vec<f64> = w.iter().map(|x| x / z).collect();
        let mean = q.iter().zip(GV_U).map(|(a, u)| a * u).sum();
        (mean, q)
    };
    let (mut a, mut b) = (-1.0f64, 1.0f64);
    while tilt(a).0 > c {
        a *= 2.0;
    }
    while tilt(b).0 < c {
        b *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if tilt(mid).0 < c {
            a = mid;
        } else {
            b = mid;
        }
    }
    let (_, q) = tilt(0.5 * (a + b));
    Some((kl_of(&q, p, 2.0), q))
}

/// The objective of the conditional-entropy exponent:
/// `[D(Q0||p0) + D(Q1||p1) + |1 − H(Q0) − H(Q1) − R|⁺]/2`.
pub fn ecs_objective(q: &[f64], r: f64, p0: &[f64], p1: &[f64]) -> f64 {
    let s = p0.len();
    let base = s as f64;
    let (q0, q1) = q.split_at(s);
    0.5 * (kl_of(q0, p0, base)
        + kl_of(q1, p1, base)
        + pos(1.0 - entropy_of(q0, base) - entropy_of(q1, base) - r))
}

/// `E*(R,p0,p1)` over pairs of distributions.
pub fn estar_cond(r: f64, p0: &Dist, p1: &Dist) -> Result<ExponentResult> {
    check_rate(r)?;
    let s = alphabet_ok(p0)?;
    if p1.alphabet() != s {
        return Err(Error::LengthMismatch {
            expected: s,
            got: p1.alphabet(),
        });
    }
    let (a, b) = (p0.probs(), p1.probs());
    let mut start = a.to_vec();
    start.extend_from_slice(b);
    let m = minimize(
        &SimplexGrid::default_for(s, 2),
        &|q: &[f64]| ecs_objective(q, r, a, b),
        &[start, tilted_candidate(r, &[a, b])],
    );
    let (q0, q1) = m.point.split_at(s);
    Ok(ExponentResult {
        value: m.value,
        argmin: vec![Dist::normalized(q0.to_vec())?, Dist::normalized(q1.to_vec())?],
        resolution: m.step,
    })
}

/// `E_c(R,P0,P1) = min{E*(R,P̄0,P̄1), E*(R,P̿0,P̿1)}`.
pub fn e_cond(r: f64, p0: &JointDist, p1: &JointDist) -> Result<ExponentResult> {
    if p0.alphabet() != p1.alphabet() {
        return Err(Error::LengthMismatch {
            expected: p0.alphabet(),
            got: p1.alphabet(),
        });
    }
    let (bar0, dbar0) = p0.marginals();
    let (bar1, dbar1) = p1.marginals();
    let a = estar_cond(r, &bar0, &bar1)?;
    let b = estar_cond(r, &dbar0, &dbar1)?;
    Ok(if b.value < a.value { b } else { a })
}

/// `sup{R : E*(R,p) ≥ E}`, as `min over D(Q||p) ≤ E of 1 − 2H(Q) − 2E +
/// 2D(Q||p)`, capped at 1. Negative when no rate reaches E.
pub fn max_rate_for(p: &Dist, e: f64) -> Result<f64> {
    let s = alphabet_ok(p)?;
    let probs = p.probs();
    let base = s as f64;
    let f = |q: &[f64]| {
        let div = kl_of(q, probs, base);
        if div > e {
            f64::INFINITY
        } else {
            1.0 - 2.0 * entropy_of(q, base) - 2.0 * e + 2.0 * div
        }
    };
    let m = minimize(&SimplexGrid::default_for(s, 1), &f, &[probs.to_vec()]);
    Ok(m.value.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typesys::h2;

    #[test]
    fn point_mass_exponent() {
        let p = Dist::point_mass(2, 0).unwrap();
        for r in [0.0, 0.3, 0.5, 0.9] {
            let e = estar(r, &p).unwrap();
            assert!((e.value - (1.0 - r) / 2.0).abs() < 1e-12);
        }
        let p3 = Dist::point_mass(3, 0).unwrap();
        assert!((estar(0.2, &p3).unwrap().value - 0.4).abs() < 1e-12);
    }

    #[test]
    fn zero_above_the_threshold() {
        let p = Dist::bernoulli(0.05).unwrap();
        let thr = 1.0 - 2.0 * h2(0.05);
        let e = estar(thr + 1e-9, &p).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.argmin[0], p);
        assert!(estar(thr - 1e-3, &p).unwrap().value > 0.0);
    }

    #[test]
    fn joint_bound_arithmetic() {
        let noiseless = Dist::point_mass(2, 0).unwrap();
        let e = e_joint(0.5, &noiseless, &noiseless).unwrap().value;
        assert!((e - 0.25).abs() < 1e-12);
        let direct = 2.0 * 4.0 * 21f64.powi(3) * 2f64.powf(-20.0 * 0.25);
        assert!((fidelity_bound(20, e, 2) / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_is_symmetric() {
        let a = Dist::bernoulli(0.02).unwrap();
        let b = Dist::bernoulli(0.07).unwrap();
        let x = e_joint(0.3, &a, &b).unwrap().value;
        let y = e_joint(0.3, &b, &a).unwrap().value;
        assert_eq!(x, y);
    }

    #[test]
    fn gv_examples() {
        // Q̄(1) + Q̿(1) ≥ 1 already.
        let p = JointDist::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(e_gv(0.2, &p).unwrap().value, 0.0);
        let z = JointDist::point_mass(2, 0, 0).unwrap();
        assert!(e_gv(0.5, &z).unwrap().value > 0.0);
        let p3 = JointDist::point_mass(3, 0, 0).unwrap();
        assert!(e_gv(0.5, &p3).is_err());
    }

    #[test]
    fn gv_projection_meets_the_face() {
        let q = 0.05;
        let p = JointDist::new(2, vec![1.0 - q, q / 3.0, q / 3.0, q / 3.0]).unwrap();
        // E_P[U] = 4q/3 already meets the constraint at R = 0.3.
        assert_eq!(e_gv(0.3, &p).unwrap().value, 0.0);
        let e = e_gv(0.1, &p).unwrap();
        let a = e.argmin[0].probs();
        let u = a[1] + a[2] + 2.0 * a[3];
        assert!((1.0 - 2.0 * h2(u) - 0.1).abs() < 1e-9);
        assert!(e.value > 0.0);
    }

    #[test]
    fn cond_reduces_to_estar_for_point_masses() {
        let z = JointDist::point_mass(2, 0, 0).unwrap();
        let e = e_cond(0.4, &z, &z).unwrap();
        assert!((e.value - 0.3).abs() < 1e-12);
    }

    #[test]
    fn leakage_threshold_and_clamp() {
        let b = leakage_bound(200, 0.1, 0.5, 2).unwrap();
        assert!(b.raw.is_finite());
        let z = leakage_bound(50, 0.0, 0.5, 2).unwrap();
        assert!(!z.informative);
        assert_eq!(z.reported, 25.0);
        let n0 = leakage_monotone_threshold(0.1, 0.5, 2).unwrap();
        for n in [n0, n0 + 1, 2 * n0, 10 * n0] {
            let a = leakage_bound(n, 0.1, 0.5, 2).unwrap().raw;
            let b = leakage_bound(2 * n, 0.1, 0.5, 2).unwrap().raw;
            assert!(b < a);
        }
    }

    #[test]
    fn max_rate_of_point_mass() {
        let p = Dist::point_mass(2, 0).unwrap();
        assert!((max_rate_for(&p, 0.01).unwrap() - 0.98).abs() < 1e-12);
    }
}
