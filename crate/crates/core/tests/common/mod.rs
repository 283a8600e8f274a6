//! Test-side oracles, written against the formulas directly and sharing no
//! code with the library's minimizers.
#![allow(dead_code)]

/// `Σ q ln(q/p) / ln b`, infinite when q puts mass where p has none.
pub fn kl(q: &[f64], p: &[f64], base: f64) -> f64 {
    let mut s = 0.0;
    for (&a, &b) in q.iter().zip(p) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            s += a * (a / b).ln();
        }
    }
    (s / base.ln()).max(0.0)
}

pub fn entropy(q: &[f64], base: f64) -> f64 {
    -q.iter().filter(|&&a| a > 0.0).map(|&a| a * a.ln()).sum::<f64>() / base.ln()
}

pub fn h2(x: f64) -> f64 {
    entropy(&[x, 1.0 - x], 2.0)
}

fn plus(t: f64) -> f64 {
    if t > 0.0 { t } else { 0.0 }
}

/// Brute force over a box: evaluate every point of a `(steps+1)^dim` grid,
/// then repeat on a box of ±6 cells around the best point, `levels` times.
pub fn box_min(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], first: usize, steps: usize, levels: usize) -> f64 {
    let dim = lo.len();
    let mut lo = lo.to_vec();
    let mut hi = hi.to_vec();
    let mut best = f64::INFINITY;
    let mut arg = lo.clone();
    for level in 0..=levels {
        let m = if level == 0 { first } else { steps };
        let h: Vec<f64> = (0..dim).map(|i| (hi[i] - lo[i]) / m as f64).collect();
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        loop {
            for i in 0..dim {
                x[i] = lo[i] + idx[i] as f64 * h[i];
            }
            let v = f(&x);
            if v < best {
                best = v;
                arg.clone_from(&x);
            }
            let mut i = 0;
            while i < dim {
                idx[i] += 1;
                if idx[i] <= m {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == dim {
                break;
            }
        }
        for i in 0..dim {
            lo[i] = (arg[i] - 6.0 * h[i]).max(0.0);
            hi[i] = (arg[i] + 6.0 * h[i]).min(1.0);
        }
    }
    best
}

/// `E*(R,p)` at d=2 in bits: a 1e−4 grid over `Q(1)`, then local zooms.
pub fn estar_binary(r: f64, p1: f64) -> f64 {
    let p = [1.0 - p1, p1];
    let f = |x: &[f64]| {
        let q = [1.0 - x[0], x[0]];
        kl(&q, &p, 2.0) + 0.5 * plus(1.0 - 2.0 * entropy(&q, 2.0) - r)
    };
    box_min(&f, &[0.0], &[1.0], 10_000, 48, 24)
}

/// `E*(R,p)` at d=3: a 1e−3 grid over the triangle, then zooms.
pub fn estar_ternary(r: f64, p: &[f64; 3]) -> f64 {
    let f = |x: &[f64]| {
        let rest = 1.0 - x[0] - x[1];
        if rest < -1e-15 {
            return f64::INFINITY;
        }
        let q = [rest.max(0.0), x[0], x[1]];
        kl(&q, p, 3.0) + 0.5 * plus(1.0 - 2.0 * entropy(&q, 3.0) - r)
    };
    box_min(&f, &[0.0, 0.0], &[1.0, 1.0], 1000, 48, 24)
}

/// `E_GV(R,P)` in bits: the 3-simplex of joints `Q = (Q00,Q01,Q10,Q11)`
/// parameterized by `(Q01,Q10,Q11)`.
pub fn e_gv(r: f64, p: &[f64; 4]) -> f64 {
    let f = |x: &[f64]| {
        let q00 = 1.0 - x[0] - x[1] - x[2];
        if q00 < -1e-15 {
            return f64::INFINITY;
        }
        let q = [q00.max(0.0), x[0], x[1], x[2]];
        let u = q[2] + q[3] + q[1] + q[3];
        if u >= 1.0 || 1.0 - 2.0 * h2(u) <= r {
            kl(&q, p, 2.0)
        } else {
            f64::INFINITY
        }
    };
    box_min(&f, &[0.0; 3], &[1.0; 3], 160, 24, 36)
}

/// The two-distribution exponent `min [D(Q0||p0)+D(Q1||p1)+|1−H(Q0)−H(Q1)−R|⁺]/2`
/// at d=2, over `(Q0(1), Q1(1))`.
pub fn estar_cond_binary(r: f64, a: f64, b: f64) -> f64 {
    let (p0, p1) = ([1.0 - a, a], [1.0 - b, b]);
    let f = |x: &[f64]| {
        let (q0, q1) = ([1.0 - x[0], x[0]], [1.0 - x[1], x[1]]);
        0.5 * (kl(&q0, &p0, 2.0) + kl(&q1, &p1, 2.0)
            + plus(1.0 - entropy(&q0, 2.0) - entropy(&q1, 2.0) - r))
    };
    box_min(&f, &[0.0, 0.0], &[1.0, 1.0], 1000, 48, 24)
}

/// `E_c(R,P0,P1)` at d=2 for row-major 2×2 joints.
pub fn e_cond_binary(r: f64, p0: &[f64; 4], p1: &[f64; 4]) -> f64 {
    let bar = |p: &[f64; 4]| p[2] + p[3];
    let dbar = |p: &[f64; 4]| p[1] + p[3];
    estar_cond_binary(r, bar(p0), bar(p1)).min(estar_cond_binary(r, dbar(p0), dbar(p1)))
}

/// `3(d−1)log_d(n+1) + log_d 2 + d`.
pub fn o_n(n: f64, d: f64) -> f64 {
    3.0 * (d - 1.0) * (n + 1.0).log(d) + 2f64.log(d) + d
}

/// `2·d^{−nE+o(n)}·[n(E+R) − o(n)]`.
pub fn leakage(n: f64, e: f64, r: f64, d: f64) -> f64 {
    let o = o_n(n, d);
    2.0 * d.powf(-n * e + o) * (n * (e + r) - o)
}

/// Largest rate R (to 1e−7) with `E*(R,p) ≥ e` at d=2, by bisection on the
/// oracle; negative when even R = 0 falls short.
pub fn max_rate_binary(p1: f64, e: f64) -> f64 {
    if estar_binary(0.0, p1) < e {
        return -1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if estar_binary(mid, p1) >= e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Deterministic uniform draws in [0,1) (splitmix64), so oracle instances
/// do not depend on the library's RNG plumbing.
pub struct Splitmix(pub u64);

impl Splitmix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.uniform()
    }
}

/// A random joint on {0,1}² with `P(0,0)` dominant.
pub fn random_joint(rng: &mut Splitmix, spread: f64) -> [f64; 4] {
    let mut w = [1.0, rng.range(0.0, spread), rng.range(0.0, spread), rng.range(0.0, spread)];
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x /= s;
    }
    w
}

/// The two digit-error marginals at d=2 of `π = (π0 | π1)` on {0,1}×F_2:
/// `(1−α)p + αq` and `(1−α)q + αp` with `α = π1(0)+π1(1)`, `p = π0/(1−α)`,
/// `q = π1/α`.
pub fn sifted_marginals(pi: &[f64; 4]) -> Option<(f64, f64)> {
    let alpha = pi[2] + pi[3];
    if alpha <= 0.0 || alpha >= 1.0 {
        return None;
    }
    let p1 = pi[1] / (1.0 - alpha);
    let q1 = pi[3] / alpha;
    Some(((1.0 - alpha) * p1 + alpha * q1, (1.0 - alpha) * q1 + alpha * p1))
}

/// Largest rate on the 1e−3 grid that keeps `min{E*(R,m1),E*(R,m2)} ≥ e`
/// over the ℓ1 ball of radius ε around `center`, probed at the ball's
/// vertices `±(ε/2)(e_i − e_j)` and at `random` further points.
pub fn selected_rate_binary(center: &[f64; 4], eps: f64, e: f64, random: usize, rng: &mut Splitmix) -> f64 {
    let mut points: Vec<[f64; 4]> = vec![*center];
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                let mut p = *center;
                p[i] += eps / 2.0;
                p[j] -= eps / 2.0;
                points.push(p);
            }
        }
    }
    while points.len() < 13 + random {
        // A zero-sum direction scaled to a random radius in (0, ε].
        let mut v = [0.0; 4];
        for x in &mut v {
            *x = rng.range(-1.0, 1.0);
        }
        let mean = v.iter().sum::<f64>() / 4.0;
        for x in &mut v {
            *x -= mean;
        }
        let norm: f64 = v.iter().map(|x| x.abs()).sum();
        let radius = eps * rng.uniform().sqrt().max(1e-3);
        let mut p = *center;
        for k in 0..4 {
            p[k] += v[k] / norm * radius;
        }
        points.push(p);
    }
    let mut worst = f64::INFINITY;
    for p in points.iter().filter(|p| p.iter().all(|&x| x >= 0.0)) {
        let Some((m1, m2)) = sifted_marginals(p) else {
            return 0.0;
        };
        worst = worst.min(max_rate_binary(m1, e)).min(max_rate_binary(m2, e));
    }
    ((worst / 1e-3) + 1e-9).floor().max(0.0) * 1e-3
}
