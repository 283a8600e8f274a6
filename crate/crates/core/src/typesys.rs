//! Distributions, empirical types and the method-of-types toolkit.
//!
//! Entropies and divergences take an explicit logarithm base; the field
//! quantities all use base d. [`h2`] is the binary entropy in bits.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::gfvec::Word;

/// Tolerance on `Σ p_i = 1` when constructing a [`Dist`].
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A probability distribution on `{0, .., s-1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dist {
    probs: Vec<f64>,
}

impl Dist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("a distribution needs at least one symbol"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid(format!("negative or non-finite probability in {probs:?}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE * probs.len() as f64 {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(invalid("weights sum to zero"));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn point_mass(s: usize, i: usize) -> Result<Self> {
        if i >= s {
            return Err(invalid("point mass outside the alphabet"));
        }
        let mut probs = vec![0.0; s];
        probs[i] = 1.0;
        Self::new(probs)
    }

    pub fn uniform(s: usize) -> Result<Self> {
        Self::new(vec![1.0 / s as f64; s])
    }

    /// `(1-q, q)`.
    pub fn bernoulli(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(invalid(format!("Bernoulli parameter {q} outside [0,1]")));
        }
        Self::new(vec![1.0 - q, q])
    }

    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn alphabet(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// `-Σ p log_base p` with `0 log 0 = 0`.
    pub fn entropy(&self, base: f64) -> f64 {
        entropy_of(&self.probs, base)
    }

    /// `(1-w)·self + w·other`.
    pub fn mix(&self, other: &Dist, w: f64) -> Result<Dist> {
        same_alphabet(self, other)?;
        if !(0.0..=1.0).contains(&w) {
            return Err(invalid(format!("mixing weight {w} outside [0,1]")));
        }
        Ok(Dist {
            probs: self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (1.0 - w) * a + w * b)
                .collect(),
        })
    }

    /// The flip `f(q)(t) = q(-t mod s)`.
    pub fn flip(&self) -> Dist {
        let s = self.alphabet();
        Dist {
            probs: (0..s).map(|t| self.probs[(s - t) % s]).collect(),
        }
    }

    /// Sampling helper: index of the first cumulative weight exceeding `u`.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(self.probs.len() - 1)
    }
}

fn same_alphabet(a: &Dist, b: &Dist) -> Result<()> {
    if a.alphabet() != b.alphabet() {
        return Err(Error::LengthMismatch {
            expected: a.alphabet(),
            got: b.alphabet(),
        });
    }
    Ok(())
}

pub(crate) fn entropy_of(probs: &[f64], base: f64) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    (h / base.ln()).max(0.0)
}

/// Base-d entropy.
pub fn entropy(p: &Dist, d: u32) -> f64 {
    p.entropy(d as f64)
}

/// Binary entropy in bits.
pub fn h2(x: f64) -> f64 {
    entropy_of(&[x, 1.0 - x], 2.0)
}

/// `D(q||p) = Σ q log_base(q/p)`, `+∞` when `q` leaves the support of `p`.
pub fn kl(q: &Dist, p: &Dist, base: f64) -> Result<f64> {
    same_alphabet(q, p)?;
    Ok(kl_of(&q.probs, &p.probs, base))
}

pub(crate) fn kl_of(q: &[f64], p: &[f64], base: f64) -> f64 {
    let mut acc = 0.0;
    for (&qi, &pi) in q.iter().zip(p) {
        if qi > 0.0 {
            if pi <= 0.0 {
                return f64::INFINITY;
            }
            acc += qi * (qi / pi).ln();
        }
    }
    (acc / base.ln()).max(0.0)
}

/// `||q - p||₁`.
pub fn l1(q: &Dist, p: &Dist) -> Result<f64> {
    same_alphabet(q, p)?;
    Ok(q.probs.iter().zip(&p.probs).map(|(a, b)| (a - b).abs()).sum())
}

/// The Pinsker constant for base-d divergences: `D ≥ ||·||₁² / K_d`.
pub fn pinsker_constant(d: u32) -> f64 {
    2.0 * (d as f64).ln()
}

/// `(||q-p||₁, D(q||p) ≥ ||q-p||₁²/K_d)` with divergences in base `d`.
pub fn l1_and_pinsker(q: &Dist, p: &Dist, d: u32) -> Result<(f64, bool)> {
    let dist = l1(q, p)?;
    let div = kl(q, p, d as f64)?;
    // A relative slack absorbs rounding when both sides are ~0.
    let holds = div + 1e-12 >= dist * dist / pinsker_constant(d);
    Ok((dist, holds))
}

/// An empirical type with denominator `n = Σ counts`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TypeDist {
    counts: Vec<u64>,
}

impl TypeDist {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(invalid("a type needs at least one symbol"));
        }
        if counts.iter().sum::<u64>() == 0 {
            return Err(invalid("a type needs denominator n ≥ 1"));
        }
        Ok(Self { counts })
    }

    /// Allows an all-zero count vector, for estimates that may be empty.
    pub(crate) fn from_counts_unchecked(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    /// Counts of each digit value in `w`.
    pub fn of_word(w: &Word) -> Self {
        Self::of_digits(w.d() as usize, w.digits())
    }

    pub fn of_digits(s: usize, digits: &[u8]) -> Self {
        let mut counts = vec![0u64; s];
        for &x in digits {
            counts[x as usize] += 1;
        }
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn alphabet(&self) -> usize {
        self.counts.len()
    }

    pub fn to_dist(&self) -> Dist {
        let n = self.n() as f64;
        Dist::from_vec_unchecked(self.counts.iter().map(|&c| c as f64 / n).collect())
    }

    pub fn entropy(&self, base: f64) -> f64 {
        counts_entropy(&self.counts, base)
    }
}

/// Entropy of `counts / Σ counts`, computed from the sorted counts so that
/// permuted count vectors give bitwise-identical results.
pub(crate) fn counts_entropy(counts: &[u64], base: f64) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let mut sorted: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    sorted.sort_unstable();
    let nf = n as f64;
    let h: f64 = sorted
        .iter()
        .map(|&c| {
            let p = c as f64 / nf;
            -p * p.ln()
        })
        .sum();
    (h / base.ln()).max(0.0)
}

/// `C(n+s-1, s-1)`, the number of types with denominator n on s symbols.
pub fn num_types(n: u64, s: usize) -> Result<u128> {
    binomial(n as u128 + s as u128 - 1, s as u128 - 1)
}

fn binomial(n: u128, k: u128) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul(n - i)
            .ok_or(Error::CapExceeded {
                what: "binomial coefficient",
                needed: f64::INFINITY,
                cap: u64::MAX,
            })?
            / (i + 1);
    }
    Ok(acc)
}

/// All types with denominator `n` on `s` symbols, in lexicographic order of
/// their count vectors.
pub fn enumerate_types(n: u64, s: usize, cap: u64) -> Result<Vec<TypeDist>> {
    if n == 0 || s == 0 {
        return Err(invalid("enumerate_types needs n ≥ 1 and s ≥ 1"));
    }
    let total = num_types(n, s)?;
    if total > cap as u128 {
        return Err(Error::CapExceeded {
            what: "type enumeration",
            needed: total as f64,
            cap,
        });
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut counts = vec![0u64; s];
    compositions(n, 0, &mut counts, &mut out);
    Ok(out)
}

fn compositions(remaining: u64, pos: usize, counts: &mut Vec<u64>, out: &mut Vec<TypeDist>) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        out.push(TypeDist {
            counts: counts.clone(),
        });
        return;
    }
    for c in 0..=remaining {
        counts[pos] = c;
        compositions(remaining - c, pos + 1, counts, out);
    }
}

/// `|T_Q| = n! / Π c_i!` exactly.
pub fn type_class_size(q: &TypeDist) -> Result<u128> {
    let mut remaining = q.n() as u128;
    let mut acc: u128 = 1;
    for &c in &q.counts {
        let b = binomial(remaining, c as u128)?;
        acc = acc.checked_mul(b).ok_or(Error::CapExceeded {
            what: "type class size",
            needed: f64::INFINITY,
            cap: u64::MAX,
        })?;
        remaining -= c as u128;
    }
    Ok(acc)
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// `ln |T_Q|`, usable where [`type_class_size`] would overflow.
pub fn ln_type_class_size(q: &TypeDist) -> f64 {
    ln_factorial(q.n()) - q.counts.iter().map(|&c| ln_factorial(c)).sum::<f64>()
}

/// `Σ_{y: type(y)=Q} pⁿ(y) = |T_Q| Π p_i^{c_i}`.
pub fn prob_of_type_class(q: &TypeDist, p: &Dist) -> Result<f64> {
    if q.alphabet() != p.alphabet() {
        return Err(Error::LengthMismatch {
            expected: q.alphabet(),
            got: p.alphabet(),
        });
    }
    let mut log = ln_type_class_size(q);
    for (&c, &pi) in q.counts.iter().zip(p.probs()) {
        if c > 0 {
            if pi <= 0.0 {
                return Ok(0.0);
            }
            log += c as f64 * pi.ln();
        }
    }
    Ok(log.exp().min(1.0))
}

/// A distribution on `{0..s-1}²`, stored row-major: `J(i, j)` at `i*s + j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointDist {
    s: usize,
    table: Vec<f64>,
}

impl JointDist {
    pub fn new(s: usize, table: Vec<f64>) -> Result<Self> {
        if table.len() != s * s {
            return Err(Error::LengthMismatch {
                expected: s * s,
                got: table.len(),
            });
        }
        Dist::new(table.clone())?;
        Ok(Self { s, table })
    }

    pub fn from_fn(s: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let table = (0..s * s).map(|k| f(k / s, k % s)).collect();
        Self::new(s, table)
    }

    pub fn point_mass(s: usize, i: usize, j: usize) -> Result<Self> {
        Self::from_fn(s, |a, b| if (a, b) == (i, j) { 1.0 } else { 0.0 })
    }

    pub fn product(a: &Dist, b: &Dist) -> Result<Self> {
        same_alphabet(a, b)?;
        Self::from_fn(a.alphabet(), |i, j| a.get(i) * b.get(j))
    }

    pub fn alphabet(&self) -> usize {
        self.s
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.s + j]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// The flattened distribution on `s²` points.
    pub fn as_dist(&self) -> Dist {
        Dist::from_vec_unchecked(self.table.clone())
    }

    /// `(Q̄, Q̿)` with `Q̄(i) = Σ_j J(i,j)` and `Q̿(i) = Σ_j J(j,i)`.
    pub fn marginals(&self) -> (Dist, Dist) {
        let s = self.s;
        let bar = (0..s).map(|i| (0..s).map(|j| self.get(i, j)).sum()).collect();
        let dbar = (0..s).map(|i| (0..s).map(|j| self.get(j, i)).sum()).collect();
        (Dist::from_vec_unchecked(bar), Dist::from_vec_unchecked(dbar))
    }

    /// `P′(s,t) = P(t, -s)`: the distribution of the Fourier-conjugated channel.
    pub fn fourier_relabel(&self) -> JointDist {
        let s = self.s;
        let table = (0..s * s)
            .map(|k| {
                let (a, b) = (k / s, k % s);
                self.get(b, (s - a) % s)
            })
            .collect();
        JointDist { s, table }
    }

    /// `(1-w)·self + w·other`.
    pub fn mix(&self, other: &JointDist, w: f64) -> Result<JointDist> {
        let m = self.as_dist().mix(&other.as_dist(), w)?;
        Ok(JointDist {
            s: self.s,
            table: m.probs,
        })
    }
}

/// `(1-r)P_A + r P_A'` with `P_A'(s,t) = P_A(t,-s)`.
pub fn mixture_channel(pa: &JointDist, r: f64) -> Result<JointDist> {
    if !(0.0..=1.0).contains(&r) {
        return Err(invalid(format!("mixture weight r = {r} outside [0,1]")));
    }
    pa.mix(&pa.fourier_relabel(), r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn type_of_examples() {
        let t = TypeDist::of_word(&Word::parse(2, "0110").unwrap());
        assert_eq!(t.to_dist().probs(), &[0.5, 0.5]);
        let t = TypeDist::of_word(&Word::parse(3, "01222").unwrap());
        assert_eq!(t.counts(), &[1, 1, 3]);
        let t = TypeDist::of_word(&Word::zeros(5, 6).unwrap());
        assert_eq!(t.counts(), &[6, 0, 0, 0, 0]);
    }

    #[test]
    fn entropy_examples() {
        assert!(close(entropy(&Dist::uniform(3).unwrap(), 3), 1.0, 1e-15));
        assert_eq!(entropy(&Dist::point_mass(4, 2).unwrap(), 4), 0.0);
        // -0.11 log2 0.11 - 0.89 log2 0.89
        assert!(close(h2(0.11), 0.499916, 1e-6));
    }

    #[test]
    fn kl_examples() {
        let p = Dist::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(kl(&p, &p, 2.0).unwrap(), 0.0);
        let q = Dist::point_mass(2, 0).unwrap();
        let u = Dist::uniform(2).unwrap();
        assert!(close(kl(&q, &u, 2.0).unwrap(), 1.0, 1e-15));
        assert_eq!(kl(&u, &q, 2.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn type_counts() {
        assert_eq!(enumerate_types(4, 2, 100).unwrap().len(), 5);
        assert_eq!(enumerate_types(2, 3, 100).unwrap().len(), 6);
        for q in enumerate_types(4, 2, 100).unwrap() {
            let size = type_class_size(&q).unwrap() as f64;
            assert!(size <= 2f64.powf(4.0 * q.entropy(2.0)) + 1e-9);
        }
        assert!(matches!(
            enumerate_types(1000, 6, 1000),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn type_class_probability_examples() {
        let q = TypeDist::new(vec![3, 0]).unwrap();
        assert!(close(
            prob_of_type_class(&q, &Dist::point_mass(2, 0).unwrap()).unwrap(),
            1.0,
            1e-15
        ));
        let q = TypeDist::new(vec![1, 1]).unwrap();
        assert!(close(
            prob_of_type_class(&q, &Dist::uniform(2).unwrap()).unwrap(),
            0.5,
            1e-15
        ));
    }

    #[test]
    fn marginal_examples() {
        let p = Dist::new(vec![0.2, 0.8]).unwrap();
        let r = Dist::new(vec![0.6, 0.4]).unwrap();
        let (a, b) = JointDist::product(&p, &r).unwrap().marginals();
        assert!(a.probs().iter().zip(p.probs()).all(|(x, y)| close(*x, *y, 1e-15)));
        assert!(b.probs().iter().zip(r.probs()).all(|(x, y)| close(*x, *y, 1e-15)));
        let (a, b) = JointDist::point_mass(2, 1, 0).unwrap().marginals();
        assert_eq!(a.probs(), &[0.0, 1.0]);
        assert_eq!(b.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn mixture_examples() {
        let x_flip = JointDist::point_mass(2, 1, 0).unwrap();
        assert_eq!(mixture_channel(&x_flip, 0.0).unwrap(), x_flip);
        let m = mixture_channel(&x_flip, 0.5).unwrap();
        assert_eq!(m.table(), &[0.0, 0.5, 0.5, 0.0]);
        let id = JointDist::point_mass(3, 0, 0).unwrap();
        assert_eq!(mixture_channel(&id, 0.3).unwrap().table(), id.table());
        assert!(mixture_channel(&id, 1.5).is_err());
    }

    #[test]
    fn flip_negates_indices() {
        let q = Dist::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(q.flip().probs(), &[0.5, 0.2, 0.3]);
    }

    #[test]
    fn pinsker_examples() {
        let q = Dist::new(vec![0.4, 0.6]).unwrap();
        assert_eq!(l1_and_pinsker(&q, &q, 2).unwrap(), (0.0, true));
        let a = Dist::point_mass(2, 0).unwrap();
        let b = Dist::point_mass(2, 1).unwrap();
        assert_eq!(l1_and_pinsker(&a, &b, 2).unwrap(), (2.0, true));
    }

    #[test]
    fn counts_entropy_is_permutation_stable() {
        assert_eq!(
            counts_entropy(&[1, 3, 0], 3.0).to_bits(),
            counts_entropy(&[3, 0, 1], 3.0).to_bits()
        );
    }
}
