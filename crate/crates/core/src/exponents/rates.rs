//! Achievable key rates and the rate-selection rules used by the protocols.

use rayon::prelude::*;
use serde::Serialize;

use super::{e_joint, max_rate_for};
use crate::error::{invalid, Error, Result};
use crate::typesys::{h2, kl_of, Dist, JointDist, TypeDist};

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("{name} = {p} outside (0,1)")));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    /// Expected share of equal-basis digits that are of the second kind.
    pub r: f64,
    /// `1 − p_a − p_b + 2p_a p_b`, the probability that the bases agree.
    pub sift: f64,
    pub p_c: f64,
    pub pbar_m: Dist,
    pub pdbar_m: Dist,
    pub r_qkd: f64,
    /// `R_qkd` with `p_a = p_b = p_c = ½`, i.e. `[1 − 2H(P_M)]/4` at d=2.
    pub r_mixture: f64,
    /// Conditional-entropy decoding: `(1−p_c)·2min{(1−p_a)(1−p_b), p_a p_b}·[1 − H(P̄) − H(P̿)]`.
    pub r_cond: f64,
    /// The code rate `1 − H(P̄) − H(P̿)` behind `r_cond`.
    pub r_cond_code: f64,
    /// `(1−p_c)·sift·[1 − H(P̄) − H(P̿)]/2`, kept for comparison.
    pub r_cond_halved: f64,
    pub r_modified: f64,
    /// `[1 − 2h₂(e_x + e_z)]/4` at d=2 when `e_x + e_z ≤ 1`.
    pub r_gv: Option<f64>,
}

pub fn achievable_rates(pa: f64, pb: f64, pc: f64, channel: &JointDist) -> Result<RateReport> {
    check_prob("p_a", pa)?;
    check_prob("p_b", pb)?;
    check_prob("p_c", pc)?;
    let d = channel.alphabet();
    let base = d as f64;
    let same0 = (1.0 - pa) * (1.0 - pb);
    let same1 = pa * pb;
    let r = same1 / (same1 + same0);
    let sift = same0 + same1;
    let (bar, dbar) = channel.marginals();
    let mixed = |r: f64| -> Result<(Dist, Dist)> {
        Ok((bar.mix(&dbar.flip(), r)?, dbar.mix(&bar, r)?))
    };
    let (pbar_m, pdbar_m) = mixed(r)?;
    let hmax = |a: &Dist, b: &Dist| a.entropy(base).max(b.entropy(base));
    let r_qkd = (1.0 - pc) * sift * (1.0 - 2.0 * hmax(&pbar_m, &pdbar_m));
    let (m_half_bar, m_half_dbar) = mixed(0.5)?;
    let r_mixture = 0.25 * (1.0 - 2.0 * hmax(&m_half_bar, &m_half_dbar));
    let r_cond_code = 1.0 - bar.entropy(base) - dbar.entropy(base);
    let r_cond = (1.0 - pc) * 2.0 * same0.min(same1) * r_cond_code;
    let r_cond_halved = (1.0 - pc) * sift * r_cond_code / 2.0;
    let r_modified = (1.0 - pa - pb) * (1.0 - 2.0 * hmax(&bar, &dbar));
    let r_gv = if d == 2 {
        let e = dbar.get(1) + bar.get(1);
        (e <= 1.0).then(|| 0.25 * (1.0 - 2.0 * h2(e)))
    } else {
        None
    };
    Ok(RateReport {
        r,
        sift,
        p_c: pc,
        pbar_m,
        pdbar_m,
        r_qkd,
        r_mixture,
        r_cond,
        r_cond_code,
        r_cond_halved,
        r_modified,
        r_gv,
    })
}

/// The root of `h₂(q) = ½` on `(0, ½)`.
pub fn q_star() -> f64 {
    let (mut lo, mut hi) = (1e-12f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h2(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RateCurvePoint {
    pub q: f64,
    /// `R_qkd` for independent X and Z flips, each with probability q.
    pub rate: f64,
    /// The closed form `(1−p_c)·sift·[1 − 2h₂(q)]` of the same quantity.
    pub r_symmetric: f64,
}

pub fn rate_curve(qs: &[f64], pa: f64, pb: f64, pc: f64) -> Result<Vec<RateCurvePoint>> {
    qs.iter()
        .map(|&q| {
            let flip = Dist::bernoulli(q)?;
            let channel = JointDist::product(&flip, &flip)?;
            let rep = achievable_rates(pa, pb, pc, &channel)?;
            Ok(RateCurvePoint {
                q,
                rate: rep.r_qkd,
                r_symmetric: (1.0 - pc) * rep.sift * (1.0 - 2.0 * h2(q)),
            })
        })
        .collect()
}

/// Linearly interpolated sign changes of `ys` over `xs`.
pub fn zero_crossings(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..xs.len().min(ys.len()) {
        let (y0, y1) = (ys[i - 1], ys[i]);
        if y0 == 0.0 && (i == 1 || ys[i - 2] != 0.0) {
            out.push(xs[i - 1]);
        } else if (y0 > 0.0 && y1 < 0.0) || (y0 < 0.0 && y1 > 0.0) {
            out.push(xs[i - 1] + (xs[i] - xs[i - 1]) * y0 / (y0 - y1));
        }
    }
    out
}

/// Rate step of [`select_rate`].
pub const RATE_STEP: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct RateSelection {
    pub rate: f64,
    pub abort: bool,
    pub reason: Option<String>,
    /// `ν·min D(Q||π̂)` over grid points at ℓ1 distance ε from the estimate.
    pub failure_exponent: f64,
    pub certification: &'static str,
    pub ball_step: f64,
    pub ball_points: usize,
    pub rate_step: f64,
}

/// Lattice spacing `ε/K` of the ball grid, by dimension of `{0,1}×F_d`.
fn ball_divisions(dim: usize) -> i32 {
    match dim {
        4 => 8,
        6 => 4,
        _ => 2,
    }
}

fn shell_divisions(dim: usize) -> i32 {
    match dim {
        4 => 40,
        6 => 12,
        _ => 4,
    }
}

/// Integer vectors with zero sum and `Σ|δ| ≤ k` (or `= k` when `shell`).
fn lattice(dim: usize, k: i32, shell: bool) -> Vec<Vec<i32>> {
    fn rec(dim: usize, k: i32, shell: bool, cur: &mut Vec<i32>, used: i32, sum: i32, out: &mut Vec<Vec<i32>>) {
        if cur.len() == dim - 1 {
            let last = -sum;
            let total = used + last.abs();
            if total <= k && (!shell || total == k) {
                let mut v = cur.clone();
                v.push(last);
                out.push(v);
            }
            return;
        }
        let left = k - used;
        for v in -left..=left {
            cur.push(v);
            rec(dim, k, shell, cur, used + v.abs(), sum + v, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, k, shell, &mut Vec::with_capacity(dim), 0, 0, &mut out);
    out
}

fn offset_points(center: &[f64], deltas: &[Vec<i32>], step: f64) -> Vec<Vec<f64>> {
    deltas
        .iter()
        .filter_map(|dl| {
            let p: Vec<f64> = center
                .iter()
                .zip(dl)
                .map(|(c, &k)| c + k as f64 * step)
                .collect();
            p.iter().all(|&x| x >= -1e-15).then(|| p.into_iter().map(|x| x.max(0.0)).collect())
        })
        .collect()
}

/// The marginal pair `((1−α)p + αf(q), (1−α)q + αp)` of `π_{α,p,q}`, or
/// None when `α ∈ {0,1}`.
fn marginal_pair(pi: &[f64], d: usize) -> Option<(Dist, Dist)> {
    let (pi0, pi1) = pi.split_at(d);
    let alpha: f64 = pi1.iter().sum();
    let rest: f64 = pi0.iter().sum();
    if alpha <= 1e-15 || rest <= 1e-15 {
        return None;
    }
    let m1: Vec<f64> = (0..d).map(|i| pi0[i] + pi1[(d - i) % d]).collect();
    let m2: Vec<f64> = (0..d)
        .map(|i| pi1[i] * rest / alpha + pi0[i] * alpha / rest)
        .collect();
    Some((Dist::normalized(m1).ok()?, Dist::normalized(m2).ok()?))
}

/// Picks the largest rate on the `RATE_STEP` grid whose joint exponent stays
/// at least `e_target` for every grid point of the ε-ball around
/// `π̂ = π_{λ′/ν, P_U, P_W}`.
#[allow(clippy::too_many_arguments)]
pub fn select_rate(
    eps: f64,
    pu: &TypeDist,
    pw: &TypeDist,
    lambda: u64,
    lambda_p: u64,
    e_target: f64,
    d: u32,
) -> Result<RateSelection> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(invalid(format!("ε = {eps} must be finite and nonnegative")));
    }
    if !(e_target > 0.0 && e_target.is_finite()) {
        return Err(invalid(format!("target exponent {e_target} must be positive")));
    }
    let nu = lambda + lambda_p;
    if nu == 0 {
        return Err(invalid("rate selection needs at least one estimation sample"));
    }
    let d = d as usize;
    for (t, n) in [(pu, lambda), (pw, lambda_p)] {
        if t.alphabet() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                got: t.alphabet(),
            });
        }
        if t.n() != n {
            return Err(invalid(format!("type has {} samples, expected {n}", t.n())));
        }
    }
    let ah = lambda_p as f64 / nu as f64;
    let share = |t: &TypeDist, i: usize| {
        if t.n() == 0 {
            0.0
        } else {
            t.counts()[i] as f64 / t.n() as f64
        }
    };
    let center: Vec<f64> = (0..d)
        .map(|i| (1.0 - ah) * share(pu, i))
        .chain((0..d).map(|i| ah * share(pw, i)))
        .collect();
    let dim = 2 * d;
    let k = ball_divisions(dim);
    let ball_step = eps / k as f64;
    let points = if eps == 0.0 {
        vec![center.clone()]
    } else {
        offset_points(&center, &lattice(dim, k, false), ball_step)
    };
    let failure_exponent = if eps == 0.0 {
        0.0
    } else {
        let kf = shell_divisions(dim);
        let shell = offset_points(&center, &lattice(dim, kf, true), eps / kf as f64);
        nu as f64
            * shell
                .iter()
                .map(|q| kl_of(q, &center, d as f64))
                .fold(f64::INFINITY, f64::min)
    };
    let abort = |reason: &str| RateSelection {
        rate: 0.0,
        abort: true,
        reason: Some(reason.to_string()),
        failure_exponent,
        certification: "grid-certified",
        ball_step,
        ball_points: points.len(),
        rate_step: RATE_STEP,
    };
    let pairs: Option<Vec<(Dist, Dist)>> = points.iter().map(|p| marginal_pair(p, d)).collect();
    let Some(pairs) = pairs else {
        return Ok(abort("the ε-ball reaches α ∈ {0,1}"));
    };
    let caps: Vec<f64> = pairs
        .par_iter()
        .map(|(m1, m2)| Ok(max_rate_for(m1, e_target)?.min(max_rate_for(m2, e_target)?)))
        .collect::<Result<_>>()?;
    let worst = caps.iter().copied().fold(f64::INFINITY, f64::min);
    if worst <= 0.0 {
        return Ok(abort("no positive rate meets the target exponent"));
    }
    let mut idx = (worst / RATE_STEP + 1e-9).floor() as i64;
    while idx > 0 {
        let rate = idx as f64 * RATE_STEP;
        let ok = pairs
            .par_iter()
            .map(|(m1, m2)| Ok(e_joint(rate, m1, m2)?.value >= e_target * (1.0 - 1e-9)))
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .all(|b| b);
        if ok {
            return Ok(RateSelection {
                rate,
                abort: false,
                reason: None,
                failure_exponent,
                certification: "grid-certified",
                ball_step,
                ball_points: points.len(),
                rate_step: RATE_STEP,
            });
        }
        idx -= 1;
    }
    Ok(abort("no positive rate meets the target exponent"))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModifiedRate {
    pub rate: f64,
    pub abort: bool,
}

/// `R = 1 − 2max{H(P_ξ), H(P_ζ)} − 2γ` from the two estimation types.
pub fn chosen_rate_modified(gamma: f64, est_x: &TypeDist, est_z: &TypeDist, d: u32) -> Result<ModifiedRate> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("γ = {gamma} must be positive")));
    }
    let base = d as f64;
    let rate = 1.0 - 2.0 * est_x.entropy(base).max(est_z.entropy(base)) - 2.0 * gamma;
    Ok(ModifiedRate {
        rate,
        abort: rate <= 0.0,
    })
}

/// The smallest available key length k with `k/n ≥ R`.
pub fn min_code_size(n: usize, rate: f64, available: &[usize]) -> Option<usize> {
    available
        .iter()
        .copied()
        .filter(|&k| k as f64 >= rate * n as f64 - 1e-12)
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flips(q: f64) -> JointDist {
        let f = Dist::bernoulli(q).unwrap();
        JointDist::product(&f, &f).unwrap()
    }

    #[test]
    fn mixing_weight_at_half() {
        let rep = achievable_rates(0.5, 0.5, 0.3, &flips(0.02)).unwrap();
        assert_eq!(rep.r, 0.5);
    }

    #[test]
    fn mixture_prefactor() {
        let p = JointDist::new(2, vec![0.9, 0.04, 0.05, 0.01]).unwrap();
        let rep = achievable_rates(0.5, 0.5, 0.5, &p).unwrap();
        assert!((rep.r_qkd - rep.r_mixture).abs() < 1e-15);
        let (bar, dbar) = p.marginals();
        let m = bar.mix(&dbar, 0.5).unwrap();
        assert!((rep.r_mixture - (1.0 - 2.0 * m.entropy(2.0)) / 4.0).abs() < 1e-15);
        assert!((rep.r_cond - 0.5 * 0.5 * rep.r_cond_code).abs() < 1e-15);
    }

    #[test]
    fn threshold_root() {
        let q = q_star();
        assert!((h2(q) - 0.5).abs() < 1e-12);
        assert!((q - 0.1100).abs() < 1e-4);
        let below = achievable_rates(0.4, 0.3, 0.2, &flips(q - 1e-4)).unwrap();
        let above = achievable_rates(0.4, 0.3, 0.2, &flips(q + 1e-4)).unwrap();
        assert!(below.r_qkd > 0.0 && above.r_qkd < 0.0);
    }

    #[test]
    fn crossings_interpolate() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 0.5, -0.5, -1.0];
        assert_eq!(zero_crossings(&xs, &ys), vec![1.5]);
    }

    #[test]
    fn noiseless_selection_is_tight() {
        let pu = TypeDist::new(vec![500, 0]).unwrap();
        let pw = TypeDist::new(vec![500, 0]).unwrap();
        let sel = select_rate(0.0, &pu, &pw, 500, 500, 0.01, 2).unwrap();
        assert!(!sel.abort);
        assert!((sel.rate - 0.98).abs() < 1e-12, "{}", sel.rate);
        assert_eq!(sel.failure_exponent, 0.0);
    }

    #[test]
    fn selection_shrinks_with_eps() {
        let pu = TypeDist::new(vec![475, 25]).unwrap();
        let pw = TypeDist::new(vec![475, 25]).unwrap();
        let mut last = f64::INFINITY;
        for eps in [0.0, 0.01, 0.02, 0.04] {
            let sel = select_rate(eps, &pu, &pw, 500, 500, 0.01, 2).unwrap();
            assert!(sel.rate <= last);
            last = sel.rate;
        }
        assert!(last > 0.0);
    }

    #[test]
    fn modified_rate_examples() {
        let z = TypeDist::new(vec![100, 0]).unwrap();
        let r = chosen_rate_modified(0.05, &z, &z, 2).unwrap();
        assert!((r.rate - 0.9).abs() < 1e-15 && !r.abort);
        let t = TypeDist::new(vec![89, 11]).unwrap();
        assert!(chosen_rate_modified(0.01, &t, &z, 2).unwrap().abort);
        assert_eq!(min_code_size(10, 0.45, &[2, 4, 5, 6]), Some(5));
        assert_eq!(min_code_size(10, 0.95, &[2, 4]), None);
    }
}
