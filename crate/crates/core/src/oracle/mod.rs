//! Brute-force ground truth at tiny sizes.
//!
//! Ensemble censuses of self-orthogonal codes, exact failure probabilities,
//! the key-transmission identity by Born-rule simulation, and empirical
//! random-sampling tails.

pub mod suite;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::csscode::CssCode;
use crate::error::{invalid, Result};
use crate::gfvec::{check_cap, check_prime, dot_digits, LinearCode, Word, DEFAULT_ENUMERATION_CAP};
use crate::protocol::codebank::prob_outside_table;
use crate::protocol::{exchange_key, wilson_interval, AttackModel};
use crate::qudit::{channel_to_dist, KrausChannel};
use crate::typesys::{JointDist, TypeDist};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;
/// One-sided 99% normal quantile.
pub const Z99_ONE_SIDED: f64 = 2.326_347_874_040_841;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Ensemble {
    /// All κ-dimensional C with `C ⊆ C⊥`.
    SelfOrthogonal,
    /// Binary: additionally `1ⁿ ∈ C`.
    ContainsAllOnes,
}

/// Every code of an ensemble with the containment counts
/// `|A_x| = #{C : x ∈ C⊥}`, indexed by [`Word::basis_index`].
#[derive(Clone, Debug)]
pub struct EnsembleCensus {
    pub d: u8,
    pub n: usize,
    pub kappa: usize,
    pub ensemble: Ensemble,
    pub codes: Vec<LinearCode>,
    pub containment: Vec<u64>,
}

/// Enumerates subspaces through their reduced row echelon forms, so each
/// appears once.
pub fn enumerate_self_orthogonal(
    d: u8,
    n: usize,
    kappa: usize,
    ensemble: Ensemble,
    cap: u64,
) -> Result<EnsembleCensus> {
    check_prime(d as u32)?;
    if kappa == 0 || 2 * kappa > n {
        return Err(invalid(format!("need 1 ≤ κ ≤ n/2, got n = {n}, κ = {kappa}")));
    }
    if ensemble == Ensemble::ContainsAllOnes && (d != 2 || !n.is_multiple_of(2)) {
        return Err(invalid("the all-ones ensemble is binary with even n"));
    }
    check_cap("generator enumeration", d, n * kappa, cap)?;
    let all_ones = Word::ones(d, n)?;
    let space = check_cap("containment table", d, n, cap)? as usize;
    let mut codes = Vec::new();
    let mut containment = vec![0u64; space];
    for pivots in combinations(n, kappa) {
        // Free slots: row i, columns right of its pivot that are not pivots.
        let slots: Vec<(usize, usize)> = (0..kappa)
            .flat_map(|i| {
                let pv = &pivots;
                ((pivots[i] + 1)..n).filter(move |j| !pv.contains(j)).map(move |j| (i, j))
            })
            .collect();
        let mut values = vec![0u8; slots.len()];
        loop {
            let mut rows = vec![vec![0u8; n]; kappa];
            for (i, &p) in pivots.iter().enumerate() {
                rows[i][p] = 1;
            }
            for (&(i, j), &v) in slots.iter().zip(&values) {
                rows[i][j] = v;
            }
            let iso = (0..kappa).all(|i| (i..kappa).all(|j| dot_digits(&rows[i], &rows[j], d) == 0));
            if iso {
                let code = LinearCode::new(
                    d,
                    n,
                    rows.into_iter().map(|r| Word::new(d, r)).collect::<Result<_>>()?,
                )?;
                if ensemble == Ensemble::SelfOrthogonal || code.contains(&all_ones)? {
                    for w in code.dual().codewords(cap)? {
                        containment[w.basis_index()] += 1;
                    }
                    codes.push(code);
                }
            }
            match values.iter().position(|&x| x + 1 < d) {
                Some(j) => {
                    values[j] += 1;
                    values[..j].iter_mut().for_each(|x| *x = 0);
                }
                None => break,
            }
        }
    }
    Ok(EnsembleCensus {
        d,
        n,
        kappa,
        ensemble,
        codes,
        containment,
    })
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `|A_x|` over one class `{x ≠ 0 : x·x = u}` (without `1ⁿ` in the binary
/// ensemble).
#[derive(Clone, Debug, Serialize)]
pub struct ClassCount {
    pub u: u8,
    pub size: u64,
    pub min: u64,
    pub max: u64,
    /// `N_u` when the count is constant on the class.
    pub constant: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub d: u8,
    pub n: usize,
    pub kappa: usize,
    pub ensemble_size: u64,
    pub classes: Vec<ClassCount>,
    /// `d^{−κ+d−1}`.
    pub ratio_bound: f64,
    pub max_ratio: f64,
    pub ratio_holds: bool,
    /// `Σ_{x≠0} |A_x| = |A| (d^{n−κ} − 1)`.
    pub double_count_holds: bool,
    /// Binary ensemble: `|A_x| = 0` whenever `x·x = 1`.
    pub odd_words_excluded: Option<bool>,
    pub passed: bool,
}

pub fn verify_group_symmetry(census: &EnsembleCensus) -> Result<SymmetryReport> {
    if census.codes.is_empty() {
        return Err(invalid(format!(
            "empty ensemble at d = {}, n = {}, κ = {}",
            census.d, census.n, census.kappa
        )));
    }
    let (d, n, kappa) = (census.d, census.n, census.kappa);
    let total = census.codes.len() as u64;
    let binary = census.ensemble == Ensemble::ContainsAllOnes;
    let ones_index = Word::ones(d, n)?.basis_index();
    let ratio_bound = (d as f64).powi(d as i32 - 1 - kappa as i32);
    let mut classes: Vec<ClassCount> = (0..d)
        .map(|u| ClassCount {
            u,
            size: 0,
            min: u64::MAX,
            max: 0,
            constant: None,
        })
        .collect();
    let mut max_ratio: f64 = 0.0;
    let mut sum = 0u64;
    for (i, &count) in census.containment.iter().enumerate().skip(1) {
        sum += count;
        if binary && i == ones_index {
            continue;
        }
        let x = Word::from_basis_index(d, n, i)?;
        let class = &mut classes[x.dot(&x)? as usize];
        class.size += 1;
        class.min = class.min.min(count);
        class.max = class.max.max(count);
        max_ratio = max_ratio.max(count as f64 / total as f64);
    }
    for c in &mut classes {
        if c.size > 0 && c.min == c.max {
            c.constant = Some(c.min);
        }
    }
    let dual_size = (d as u64).pow((n - kappa) as u32);
    let double_count_holds = sum == total * (dual_size - 1);
    let ratio_holds = max_ratio <= ratio_bound * (1.0 + 1e-12);
    let odd_words_excluded = binary.then(|| classes[1].max == 0);
    let constant = classes.iter().all(|c| c.size == 0 || c.constant.is_some());
    Ok(SymmetryReport {
        d,
        n,
        kappa,
        ensemble_size: total,
        classes,
        ratio_bound,
        max_ratio,
        ratio_holds,
        double_count_holds,
        odd_words_excluded,
        passed: constant && ratio_holds && double_count_holds && odd_words_excluded != Some(false),
    })
}

/// Failure probabilities of a CSS code under an i.i.d. Weyl error law P.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FailureProbabilities {
    /// `Pⁿ(K(Γ′)ᶜ)`; `None` when `d^{2n}` exceeds the cap.
    pub joint: Option<f64>,
    /// `P̄ⁿ(Γ′ᶜ)`.
    pub marginal_x: f64,
    /// `P̿ⁿ(Γ′ᶜ)`.
    pub marginal_z: f64,
}

impl FailureProbabilities {
    pub fn union_holds(&self) -> Option<bool> {
        self.joint
            .map(|j| j <= (self.marginal_x + self.marginal_z) * (1.0 + 1e-12) + 1e-300)
    }
}

/// Exact sums over `F_d^n × F_d^n`.
///
/// The joint value is `P̄ⁿ(Γ′ᶜ) + Σ_{a∈Γ′} Pⁿ({a} × Γ′ᶜ)`, which keeps
/// small failure probabilities free of cancellation.
pub fn exact_failure_probability(code: &CssCode, p: &JointDist, cap: u64) -> Result<FailureProbabilities> {
    let (d, n) = (code.d(), code.n());
    let du = d as usize;
    if p.alphabet() != du {
        return Err(invalid("error law and code are over different alphabets"));
    }
    let table = crate::csscode::gamma_prime_table(code, cap)?;
    let (bar, dbar) = p.marginals();
    let marginal_x = prob_outside_table(&table, du, n, bar.probs());
    let marginal_z = prob_outside_table(&table, du, n, dbar.probs());
    let joint = if check_cap("pair enumeration", d, 2 * n, cap).is_ok() {
        let inside: Vec<usize> = (0..table.len()).filter(|&i| table[i]).collect();
        let extra: f64 = inside
            .par_iter()
            .map(|&a| {
                let a = Word::from_basis_index(d, n, a).expect("index in range");
                outside_given(&table, du, n, a.digits(), p)
            })
            .sum();
        Some(marginal_x + extra)
    } else {
        None
    };
    Ok(FailureProbabilities {
        joint,
        marginal_x,
        marginal_z,
    })
}

/// `Σ_{b∉Γ′} Π_i P(a_i, b_i)`.
fn outside_given(table: &[bool], d: usize, n: usize, a: &[u8], p: &JointDist) -> f64 {
    fn rec(pos: usize, idx: usize, prob: f64, cx: &Ctx, acc: &mut f64) {
        if prob == 0.0 {
            return;
        }
        if pos == cx.n {
            if !cx.table[idx] {
                *acc += prob;
            }
            return;
        }
        for b in 0..cx.d {
            rec(pos + 1, idx * cx.d + b, prob * cx.p.get(cx.a[pos] as usize, b), cx, acc);
        }
    }
    struct Ctx<'a> {
        table: &'a [bool],
        d: usize,
        n: usize,
        a: &'a [u8],
        p: &'a JointDist,
    }
    let cx = Ctx { table, d, n, a, p };
    let mut acc = 0.0;
    rec(0, 0, 1.0, &cx, &mut acc);
    acc
}

const CHUNK: u64 = 10_000;

/// Runs `trials` draws in fixed-size chunks, each on its own RNG stream, and
/// sums the per-chunk counts; the result is independent of thread count.
fn chunked_count(trials: u64, seed: u64, f: impl Fn(&mut ChaCha8Rng, u64) -> Result<u64> + Sync) -> Result<u64> {
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            f(&mut rng, CHUNK.min(trials - c * CHUNK))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Monte Carlo estimate of `Pⁿ(K(Γ′)ᶜ)` from the Γ′ table.
pub fn mc_failure_probability(
    code: &CssCode,
    p: &JointDist,
    trials: u64,
    seed: u64,
) -> Result<crate::protocol::Aggregate> {
    let (d, n) = (code.d() as usize, code.n());
    let table = crate::csscode::gamma_prime_table(code, code.cap())?;
    let flat = p.as_dist();
    let count = chunked_count(trials, seed, |rng, m| {
        let mut failures = 0;
        for _ in 0..m {
            let (mut ix, mut iz) = (0usize, 0usize);
            for _ in 0..n {
                let k = flat.sample_with(rng.random::<f64>());
                ix = ix * d + k / d;
                iz = iz * d + k % d;
            }
            if !(table[ix] && table[iz]) {
                failures += 1;
            }
        }
        Ok(failures)
    })?;
    Ok(crate::protocol::Aggregate::new(count, trials))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Basis {
    /// Key digits prepared and measured in the computational basis; the
    /// error law is `P̄`.
    Z,
    /// Fourier basis; the error `sent − received = −ζ` has law `f(P̿)`.
    X,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub basis: Basis,
    pub trials: u64,
    pub exact: f64,
    pub failures: u64,
    pub frequency: f64,
    /// Half-width of the 99% Wilson interval.
    pub half_width: f64,
    pub within: bool,
    /// Sessions where key agreement differed from Γ′ membership.
    pub mismatches: u64,
}

/// Outcome distribution `Pr(b | y) = Σ_j |⟨b|B_j|y⟩|²` per input digit,
/// with `B_j = A_j` in the Z basis and `U†A_jU` in the X basis.
pub fn born_table(ch: &KrausChannel, basis: Basis) -> Result<Vec<Vec<f64>>> {
    let d = ch.d();
    let w = crate::qudit::weyl_ops(d as u32)?;
    let ops: Vec<_> = match basis {
        Basis::Z => ch.ops().to_vec(),
        Basis::X => ch.ops().iter().map(|a| w.u.adjoint() * a * &w.u).collect(),
    };
    Ok((0..d)
        .map(|y| {
            (0..d)
                .map(|b| ops.iter().map(|a| a[(b, y)].norm_sqr()).sum::<f64>())
                .collect()
        })
        .collect())
}

/// Simulates key transmission digit by digit from Born statistics: uniform
/// `y`, Bob's outcomes drawn from the channel, syndrome announcement and
/// decoding. The disagreement frequency is compared with the exact
/// probability that the error word leaves Γ′.
pub fn decoding_error_identity_check(
    code: &CssCode,
    attack: &AttackModel,
    basis: Basis,
    trials: u64,
    seed: u64,
) -> Result<IdentityReport> {
    let (d, n) = (code.d(), code.n());
    let du = d as usize;
    let channel = match attack {
        AttackModel::Pauli(p) => KrausChannel::from_pauli(p)?,
        AttackModel::Kraus(k) => k.clone(),
    };
    if channel.d() != du {
        return Err(invalid("channel and code are over different alphabets"));
    }
    let p = channel_to_dist(&channel)?;
    let (bar, dbar) = p.marginals();
    let law = match basis {
        Basis::Z => bar,
        Basis::X => dbar.flip(),
    };
    let table = crate::csscode::gamma_prime_table(code, code.cap())?;
    let exact = prob_outside_table(&table, du, n, law.probs());
    let rows: Vec<crate::typesys::Dist> = born_table(&channel, basis)?
        .into_iter()
        .map(crate::typesys::Dist::normalized)
        .collect::<Result<_>>()?;
    let mismatches = std::sync::atomic::AtomicU64::new(0);
    let failures = chunked_count(trials, seed, |rng, m| {
        let mut bad = 0;
        for _ in 0..m {
            let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..d)).collect();
            let e: Vec<u8> = y
                .iter()
                .map(|&yi| {
                    let b = rows[yi as usize].sample_with(rng.random::<f64>()) as u8;
                    (yi + d - b) % d
                })
                .collect();
            let kx = exchange_key(code, &Word::new(d, y)?, &Word::new(d, e)?)?;
            if !kx.agreement {
                bad += 1;
            }
            if kx.agreement != kx.in_gamma_prime {
                mismatches.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            }
        }
        Ok(bad)
    })?;
    let (lo, hi) = wilson_interval(failures, trials, Z99);
    let half_width = 0.5 * (hi - lo);
    let frequency = failures as f64 / trials as f64;
    Ok(IdentityReport {
        basis,
        trials,
        exact,
        failures,
        frequency,
        half_width,
        within: (frequency - exact).abs() <= 4.0 * half_width || (failures == 0 && exact == 0.0),
        mismatches: mismatches.into_inner(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub eps: f64,
    pub exceed: u64,
    pub trials: u64,
    pub frequency: f64,
    /// One-sided 99% Wilson lower edge.
    pub lower: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailReport {
    pub label: String,
    pub alphabet: usize,
    pub big_n: usize,
    pub n: usize,
    pub rows: Vec<TailRow>,
    pub passed: bool,
}

/// Samples a uniform n-subset of the fixed string `source` and compares
/// `Pr{||P_{Y′} − P_{Y″}||₁ ≥ ε}` with the random-sampling bound. A row
/// fails only when the bound lies below the one-sided 99% lower edge.
pub fn sampling_tail_check(
    label: &str,
    source: &[u8],
    alphabet: usize,
    n: usize,
    eps_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<TailReport> {
    let big_n = source.len();
    if n == 0 || n >= big_n {
        return Err(invalid(format!("need 0 < n < N, got n = {n}, N = {big_n}")));
    }
    if let Some(&bad) = source.iter().find(|&&y| y as usize >= alphabet) {
        return Err(invalid(format!("symbol {bad} outside the alphabet of size {alphabet}")));
    }
    let total = TypeDist::of_digits(alphabet, source);
    let distances: Vec<f64> = {
        let mut out = vec![0.0; trials as usize];
        out.par_chunks_mut(CHUNK as usize).enumerate().for_each(|(c, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            for slot in chunk.iter_mut() {
                let picked = rand::seq::index::sample(&mut rng, big_n, n);
                let mut first = vec![0u64; alphabet];
                for i in picked.iter() {
                    first[source[i] as usize] += 1;
                }
                *slot = (0..alphabet)
                    .map(|a| {
                        let rest = total.counts()[a] - first[a];
                        (first[a] as f64 / n as f64 - rest as f64 / (big_n - n) as f64).abs()
                    })
                    .sum();
            }
        });
        out
    };
    let d = alphabet as u32;
    let rows: Vec<TailRow> = eps_grid
        .iter()
        .map(|&eps| {
            let exceed = distances.iter().filter(|&&x| x >= eps - 1e-12).count() as u64;
            let lower = wilson_interval(exceed, trials, Z99_ONE_SIDED).0;
            let bound = crate::exponents::sampling_tail_bound(big_n as u64, n as u64, eps, alphabet, d)?;
            Ok(TailRow {
                eps,
                exceed,
                trials,
                frequency: exceed as f64 / trials as f64,
                lower,
                bound,
                violated: lower > bound,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TailReport {
        label: label.to_string(),
        alphabet,
        big_n,
        n,
        passed: rows.iter().all(|r| !r.violated),
        rows,
    })
}

/// The cap used by the suite's enumerations.
pub const CAP: u64 = DEFAULT_ENUMERATION_CAP;

/// A uniformly random string over `0..alphabet`.
pub fn random_string(len: usize, alphabet: usize, rng: &mut impl Rng) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..alphabet as u8)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typesys::Dist;

    #[test]
    fn census_examples() {
        let empty = enumerate_self_orthogonal(3, 2, 1, Ensemble::SelfOrthogonal, CAP).unwrap();
        assert!(empty.codes.is_empty());
        assert!(verify_group_symmetry(&empty).is_err());
        let c = enumerate_self_orthogonal(3, 3, 1, Ensemble::SelfOrthogonal, CAP).unwrap();
        let target = LinearCode::from_strs(3, &["111"]).unwrap();
        assert!(c.codes.contains(&target));
        let b = enumerate_self_orthogonal(2, 4, 1, Ensemble::ContainsAllOnes, CAP).unwrap();
        assert_eq!(b.codes, vec![LinearCode::from_strs(2, &["1111"]).unwrap()]);
    }

    #[test]
    fn census_sizes_match_known_counts() {
        // Self-orthogonal lines in F_3^4: isotropic nonzero vectors / 2.
        let c = enumerate_self_orthogonal(3, 4, 1, Ensemble::SelfOrthogonal, CAP).unwrap();
        let isotropic = (1..81)
            .filter(|&i| {
                let x = Word::from_basis_index(3, 4, i).unwrap();
                x.dot(&x).unwrap() == 0
            })
            .count();
        assert_eq!(c.codes.len(), isotropic / 2);
    }

    #[test]
    fn ternary_symmetry() {
        let c = enumerate_self_orthogonal(3, 4, 1, Ensemble::SelfOrthogonal, CAP).unwrap();
        let r = verify_group_symmetry(&c).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn exact_failure_examples() {
        let code = CssCode::build(LinearCode::from_strs(2, &["1111"]).unwrap()).unwrap();
        let zero = JointDist::point_mass(2, 0, 0).unwrap();
        let f = exact_failure_probability(&code, &zero, CAP).unwrap();
        assert_eq!((f.joint, f.marginal_x, f.marginal_z), (Some(0.0), 0.0, 0.0));
        let deph = JointDist::product(&Dist::point_mass(2, 0).unwrap(), &Dist::bernoulli(0.1).unwrap()).unwrap();
        let f = exact_failure_probability(&code, &deph, CAP).unwrap();
        assert!((f.joint.unwrap() - f.marginal_z).abs() < 1e-15);
        assert_eq!(f.marginal_x, 0.0);
    }

    #[test]
    fn born_table_of_a_shift() {
        let x = JointDist::point_mass(2, 1, 0).unwrap();
        let ch = KrausChannel::from_pauli(&x).unwrap();
        let t = born_table(&ch, Basis::Z).unwrap();
        assert!((t[0][1] - 1.0).abs() < 1e-12 && (t[1][0] - 1.0).abs() < 1e-12);
        let t = born_table(&ch, Basis::X).unwrap();
        assert!((t[0][0] - 1.0).abs() < 1e-12);
    }
}
