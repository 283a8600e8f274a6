//! CSS codes built from a self-orthogonal code `C ⊆ C⊥`.
//!
//! A [`CssCode`] carries C, a completion `h_1..h_k` of C's basis to a
//! basis of C⊥, and a rule that picks one representative per coset of C⊥
//! (the transversal Γ). Representatives are computed on demand and cached.
//! Errors are correctable when they lie in `Γ′ = Γ + C`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, parse_err, Error, Result};
use crate::gfvec::{
    axpy, check_cap, dot_digits, echelon, rank_of, Echelon, LinearCode, Solver, SpanIter,
    Word, DEFAULT_ENUMERATION_CAP,
};
use crate::typesys::{counts_entropy, ln_type_class_size, num_types, TypeDist};

/// How a coset representative is chosen.
///
/// Every rule breaks ties by the lexicographically smallest word (see
/// [`Word`]'s ordering).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DecodeRule {
    /// Minimize `H(type(x))`.
    MinEntropy,
    /// Minimize `H(type(x)) + H(type(x′))` where `x` is the first `split`
    /// digits and `x′` the rest.
    MinCondEntropy { split: usize },
    /// Minimize Hamming weight.
    MinHamming,
}

type Memo = Arc<RwLock<HashMap<u64, Word>>>;

/// A CSS code `(g_1..g_κ; h_1..h_k; Γ)` over F_d.
pub struct CssCode {
    c: LinearCode,
    dual: LinearCode,
    h: Vec<Word>,
    rule: DecodeRule,
    cap: u64,
    c_echelon: Echelon,
    key_solver: Solver,
    memo: Memo,
}

impl Clone for CssCode {
    fn clone(&self) -> Self {
        Self {
            c: self.c.clone(),
            dual: self.dual.clone(),
            h: self.h.clone(),
            rule: self.rule,
            cap: self.cap,
            c_echelon: self.c_echelon.clone(),
            key_solver: self.key_solver.clone(),
            memo: Arc::clone(&self.memo),
        }
    }
}

impl fmt::Debug for CssCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CssCode")
            .field("d", &self.d())
            .field("n", &self.n())
            .field("kappa", &self.kappa())
            .field("k", &self.k())
            .field("rule", &self.rule)
            .field("g", &self.c.basis())
            .field("h", &self.h)
            .finish()
    }
}

impl PartialEq for CssCode {
    fn eq(&self, other: &Self) -> bool {
        self.c.basis() == other.c.basis() && self.h == other.h && self.rule == other.rule
    }
}

fn check_css_rules(c: &LinearCode) -> Result<()> {
    if let Some((i, j)) = c.self_orthogonality_violation() {
        return Err(Error::NotSelfOrthogonal(i, j));
    }
    if c.d() == 2 {
        if !c.n().is_multiple_of(2) {
            return Err(Error::D2RuleViolation("n must be even"));
        }
        if !c.contains(&Word::ones(2, c.n())?)? {
            return Err(Error::D2RuleViolation("the all-ones word must lie in C"));
        }
    }
    Ok(())
}

fn check_rule(rule: DecodeRule, n: usize) -> Result<()> {
    if let DecodeRule::MinCondEntropy { split } = rule {
        if split == 0 || split >= n {
            return Err(invalid(format!("conditional-entropy split {split} must lie in 1..{n}")));
        }
    }
    Ok(())
}

impl CssCode {
    /// Builds the code with the minimum-entropy rule, completing C's basis to
    /// one of C⊥ greedily from C⊥'s echelon basis.
    pub fn build(c: LinearCode) -> Result<Self> {
        check_css_rules(&c)?;
        let dual = c.dual();
        let (d, n) = (c.d(), c.n());
        let mut rows: Vec<Vec<u8>> = c.basis().iter().map(|w| w.digits().to_vec()).collect();
        let mut h = Vec::new();
        for cand in dual.basis() {
            rows.push(cand.digits().to_vec());
            if rank_of(d, n, &rows) == rows.len() {
                h.push(cand.clone());
            } else {
                rows.pop();
            }
        }
        Self::assemble(c, dual, h, DecodeRule::MinEntropy)
    }

    /// Builds the code from an explicit completion `h`.
    pub fn from_parts(c: LinearCode, h: Vec<Word>, rule: DecodeRule) -> Result<Self> {
        check_css_rules(&c)?;
        let dual = c.dual();
        let expected = c.n() - 2 * c.dim();
        if h.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: h.len(),
            });
        }
        for w in &h {
            if !dual.contains(w)? {
                return Err(invalid(format!("h-row {w} is not in the dual code")));
            }
        }
        let mut rows: Vec<Vec<u8>> = c.basis().iter().map(|w| w.digits().to_vec()).collect();
        rows.extend(h.iter().map(|w| w.digits().to_vec()));
        if rank_of(c.d(), c.n(), &rows) != rows.len() {
            return Err(Error::DependentRows);
        }
        Self::assemble(c, dual, h, rule)
    }

    fn assemble(c: LinearCode, dual: LinearCode, h: Vec<Word>, rule: DecodeRule) -> Result<Self> {
        check_rule(rule, c.n())?;
        let (d, n) = (c.d(), c.n());
        if (c.dim() as f64) * (d as f64).log2() >= 63.0 {
            return Err(invalid("too many syndromes to index"));
        }
        let g_rows: Vec<Vec<u8>> = c.basis().iter().map(|w| w.digits().to_vec()).collect();
        let c_echelon = echelon(d, n, &g_rows);
        let mut key_rows = g_rows;
        key_rows.extend(h.iter().map(|w| w.digits().to_vec()));
        let key_solver = Solver::new(d, n, &key_rows);
        Ok(Self {
            c,
            dual,
            h,
            rule,
            cap: DEFAULT_ENUMERATION_CAP,
            c_echelon,
            key_solver,
            memo: Arc::default(),
        })
    }

    /// The same code under another decoding rule (with a fresh cache).
    pub fn with_rule(&self, rule: DecodeRule) -> Result<Self> {
        check_rule(rule, self.n())?;
        let mut out = self.clone();
        out.rule = rule;
        out.memo = Arc::default();
        Ok(out)
    }

    /// Overrides the enumeration cap used by decoding and spectra.
    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn d(&self) -> u8 {
        self.c.d()
    }

    pub fn n(&self) -> usize {
        self.c.n()
    }

    pub fn kappa(&self) -> usize {
        self.c.dim()
    }

    /// `k = n - 2κ`.
    pub fn k(&self) -> usize {
        self.h.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn rule(&self) -> DecodeRule {
        self.rule
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn code(&self) -> &LinearCode {
        &self.c
    }

    pub fn dual(&self) -> &LinearCode {
        &self.dual
    }

    pub fn h_basis(&self) -> &[Word] {
        &self.h
    }

    pub fn syndrome(&self, w: &Word) -> Result<Vec<u8>> {
        self.c.syndrome(w)
    }

    fn syndrome_index(&self, s: &[u8]) -> u64 {
        let d = self.d() as u64;
        s.iter().rev().fold(0u64, |acc, &x| acc * d + x as u64)
    }

    /// Some word whose syndrome is `s`, supported on C's pivot columns.
    fn particular_solution(&self, s: &[u8]) -> Vec<u8> {
        let d = self.d();
        let mut y = vec![0u8; self.n()];
        for (i, &p) in self.c_echelon.pivots.iter().enumerate() {
            y[p] = dot_digits(&self.c_echelon.transform[i], s, d);
        }
        y
    }

    fn objective(&self, w: &[u8]) -> f64 {
        let d = self.d() as usize;
        let base = d as f64;
        match self.rule {
            DecodeRule::MinEntropy => counts_entropy(TypeDist::of_digits(d, w).counts(), base),
            DecodeRule::MinCondEntropy { split } => {
                let a = TypeDist::of_digits(d, &w[..split]);
                let b = TypeDist::of_digits(d, &w[split..]);
                counts_entropy(a.counts(), base) + counts_entropy(b.counts(), base)
            }
            DecodeRule::MinHamming => w.iter().filter(|&&x| x != 0).count() as f64,
        }
    }

    /// The representative in Γ of the coset of C⊥ with syndrome `s`.
    pub fn coset_representative(&self, s: &[u8]) -> Result<Word> {
        if s.len() != self.kappa() {
            return Err(Error::LengthMismatch {
                expected: self.kappa(),
                got: s.len(),
            });
        }
        if let Some(&bad) = s.iter().find(|&&x| x >= self.d()) {
            return Err(Error::DigitOutOfRange {
                digit: bad as u32,
                d: self.d(),
            });
        }
        let key = self.syndrome_index(s);
        if let Some(w) = self.memo.read().expect("memo lock").get(&key) {
            return Ok(w.clone());
        }
        check_cap("coset enumeration", self.d(), self.dual.dim(), self.cap)?;
        let start = self.particular_solution(s);
        let rows: Vec<Vec<u8>> = self.dual.basis().iter().map(|w| w.digits().to_vec()).collect();
        let mut best: Option<(f64, Vec<u8>)> = None;
        SpanIter::new(self.d(), start, rows).for_each_digits(|w| {
            let obj = self.objective(w);
            let better = match &best {
                None => true,
                Some((b, bw)) => obj < *b || (obj == *b && w < bw.as_slice()),
            };
            if better {
                best = Some((obj, w.to_vec()));
            }
        });
        let rep = Word::from_digits_unchecked(self.d(), best.expect("cosets are nonempty").1);
        self.memo
            .write()
            .expect("memo lock")
            .insert(key, rep.clone());
        Ok(rep)
    }

    /// Whether `e ∈ Γ′ = Γ + C`.
    pub fn in_gamma_prime(&self, e: &Word) -> Result<bool> {
        let s = self.c.syndrome(e)?;
        let rep = self.coset_representative(&s)?;
        Ok(self.c.contains_digits(rep.sub(e)?.digits()))
    }

    /// Whether the error pair `(e_x, e_z)` lies in `K(Γ′) = Γ′ × Γ′`.
    pub fn correctable(&self, e_x: &Word, e_z: &Word) -> Result<bool> {
        Ok(self.in_gamma_prime(e_x)? && self.in_gamma_prime(e_z)?)
    }

    /// `f(σ) = Σ σ_i h_i`, the canonical representative of the key coset.
    pub fn encode_key(&self, sigma: &[u8]) -> Result<Word> {
        if sigma.len() != self.k() {
            return Err(Error::LengthMismatch {
                expected: self.k(),
                got: sigma.len(),
            });
        }
        let d = self.d();
        let mut acc = vec![0u8; self.n()];
        for (&s, h) in sigma.iter().zip(&self.h) {
            if s >= d {
                return Err(Error::DigitOutOfRange { digit: s as u32, d });
            }
            axpy(&mut acc, s, h.digits(), d);
        }
        Ok(Word::from_digits_unchecked(d, acc))
    }

    /// The unique σ with `w − Σ σ_i h_i ∈ C`; `w` must lie in C⊥.
    pub fn decode_key(&self, w: &Word) -> Result<Vec<u8>> {
        if w.d() != self.d() || w.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                got: w.len(),
            });
        }
        let coeffs = self
            .key_solver
            .coordinates(w.digits())
            .ok_or_else(|| invalid(format!("word {w} is not in the dual code")))?;
        Ok(coeffs[self.kappa()..].to_vec())
    }

    /// Exact counts `Λ(Q, C⊥)` of dual codewords per type.
    pub fn type_spectrum(&self) -> Result<TypeSpectrum> {
        check_cap("dual-code enumeration", self.d(), self.dual.dim(), self.cap)?;
        let d = self.d() as usize;
        let mut counts: BTreeMap<TypeDist, u64> = BTreeMap::new();
        self.dual.codewords(self.cap)?.for_each_digits(|w| {
            *counts.entry(TypeDist::of_digits(d, w)).or_insert(0) += 1;
        });
        Ok(TypeSpectrum {
            d: self.d(),
            n: self.n(),
            kappa: self.kappa(),
            counts,
        })
    }

    /// Checks `Λ(Q,C⊥)/|T_Q| ≤ |P_n|·d^{−κ+d−1}` for every type except that of
    /// `0ⁿ` (and of `1ⁿ` when d = 2).
    pub fn is_balanced(&self) -> Result<Balance> {
        let spectrum = self.type_spectrum()?;
        Ok(spectrum.balance())
    }

    /// `π(C)` and `π(h)` for a coordinate permutation, where the permutation
    /// acts as in [`Word::permute`]. The rule is re-applied in the permuted
    /// coordinates, so ties may resolve differently from the image of Γ.
    pub fn permuted(&self, perm: &[usize]) -> Result<CssCode> {
        let c = self.c.permuted(perm)?;
        let h = self
            .h
            .iter()
            .map(|w| w.permute(perm))
            .collect::<Result<Vec<_>>>()?;
        CssCode::from_parts(c, h, self.rule)
    }
}

/// The counts `Λ(Q, C⊥)` for every type that occurs in C⊥.
#[derive(Clone, Debug, Serialize)]
pub struct TypeSpectrum {
    pub d: u8,
    pub n: usize,
    pub kappa: usize,
    pub counts: BTreeMap<TypeDist, u64>,
}

/// Verdict of the balance criterion.
#[derive(Clone, Debug, Serialize)]
pub struct Balance {
    pub balanced: bool,
    /// First violating type in count-vector order.
    pub witness: Option<TypeDist>,
    /// `|P_n|·d^{−κ+d−1}`.
    pub bound: f64,
    /// Largest ratio over the checked types.
    pub max_ratio: f64,
}

impl TypeSpectrum {
    pub fn get(&self, q: &TypeDist) -> u64 {
        self.counts.get(q).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn balance(&self) -> Balance {
        let d = self.d as usize;
        let pn = num_types(self.n as u64, d).map_or(f64::INFINITY, |v| v as f64);
        let bound = pn * (self.d as f64).powi(d as i32 - 1 - self.kappa as i32);
        let zero = {
            let mut c = vec![0u64; d];
            c[0] = self.n as u64;
            TypeDist::new(c).expect("n ≥ 1")
        };
        let ones = {
            let mut c = vec![0u64; d];
            c[1] = self.n as u64;
            TypeDist::new(c).expect("n ≥ 1")
        };
        let mut witness = None;
        let mut max_ratio: f64 = 0.0;
        for (q, &count) in &self.counts {
            if *q == zero || (self.d == 2 && *q == ones) {
                continue;
            }
            let ratio = ((count as f64).ln() - ln_type_class_size(q)).exp();
            max_ratio = max_ratio.max(ratio);
            if ratio > bound * (1.0 + 1e-12) && witness.is_none() {
                witness = Some(q.clone());
            }
        }
        Balance {
            balanced: witness.is_none(),
            witness,
            bound,
            max_ratio,
        }
    }
}

/// Random self-orthogonal construction followed by the balance check,
/// repeated up to `max_tries` times.
///
/// Each try grows a basis (seeded with `1ⁿ` when d = 2) by random vectors
/// of the current span's dual that are isotropic and new.
pub fn search_balanced<R: Rng + ?Sized>(
    d: u8,
    n: usize,
    kappa: usize,
    rng: &mut R,
    max_tries: usize,
) -> Result<CssCode> {
    crate::gfvec::check_prime(d as u32)?;
    if n == 0 || 2 * kappa > n {
        return Err(invalid(format!("need 0 ≤ 2κ ≤ n, got n = {n}, κ = {kappa}")));
    }
    if d == 2 && !n.is_multiple_of(2) {
        return Err(invalid("binary codes need even n"));
    }
    if d == 2 && kappa == 0 {
        return Err(invalid("binary codes contain 1ⁿ, so κ ≥ 1"));
    }
    let draws_per_row = 64 * n;
    for _ in 0..max_tries {
        let mut basis: Vec<Word> = Vec::new();
        if d == 2 {
            basis.push(Word::ones(2, n)?);
        }
        let mut stuck = false;
        while basis.len() < kappa && !stuck {
            let span = LinearCode::new(d, n, basis.clone())?;
            let perp = span.dual();
            stuck = true;
            for _ in 0..draws_per_row {
                let mut x = vec![0u8; n];
                for row in perp.basis() {
                    axpy(&mut x, rng.random_range(0..d), row.digits(), d);
                }
                if dot_digits(&x, &x, d) == 0 && !span.contains_digits(&x) {
                    basis.push(Word::from_digits_unchecked(d, x));
                    stuck = false;
                    break;
                }
            }
        }
        if stuck {
            continue;
        }
        let code = CssCode::build(LinearCode::new(d, n, basis)?)?;
        if code.is_balanced()?.balanced {
            return Ok(code);
        }
    }
    Err(Error::NotFound { tries: max_tries })
}

/// Serializes codes in the line format: a header `d n kappa k`, then κ
/// generator rows, then k completion rows, one digit character per symbol.
pub fn write_codes(codes: &[CssCode]) -> String {
    let mut out = String::new();
    for code in codes {
        out.push_str(&format!(
            "{} {} {} {}\n",
            code.d(),
            code.n(),
            code.kappa(),
            code.k()
        ));
        for w in code.code().basis().iter().chain(code.h_basis()) {
            out.push_str(&w.to_string());
            out.push('\n');
        }
    }
    out
}

/// Parses the format written by [`write_codes`]. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_codes(text: &str) -> Result<Vec<CssCode>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut codes = Vec::new();
    while let Some((lineno, header)) = lines.next() {
        let fields: Vec<usize> = header
            .split_whitespace()
            .map(|f| f.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(lineno, format!("bad header {header:?}: {e}")))?;
        let [d, n, kappa, k] = fields[..] else {
            return Err(parse_err(lineno, format!("header needs 4 fields, got {header:?}")));
        };
        if k + 2 * kappa != n {
            return Err(parse_err(lineno, "header violates k = n - 2κ"));
        }
        let d = crate::gfvec::check_prime(d as u32).map_err(|e| parse_err(lineno, e.to_string()))?;
        let mut read_rows = |count: usize| -> Result<Vec<Word>> {
            (0..count)
                .map(|_| {
                    let (ln, row) = lines
                        .next()
                        .ok_or_else(|| parse_err(lineno, "record ends early"))?;
                    let w = Word::parse(d, row).map_err(|e| parse_err(ln, e.to_string()))?;
                    if w.len() != n {
                        return Err(parse_err(ln, format!("row has length {}, expected {n}", w.len())));
                    }
                    Ok(w)
                })
                .collect()
        };
        let g = read_rows(kappa)?;
        let h = read_rows(k)?;
        let c = LinearCode::new(d, n, g).map_err(|e| parse_err(lineno, e.to_string()))?;
        let code = CssCode::from_parts(c, h, DecodeRule::MinEntropy)
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        codes.push(code);
    }
    Ok(codes)
}

/// Indicator of Γ′ indexed by [`Word::basis_index`].
///
/// Marks `rep(s) + c` for every syndrome s and codeword c, so the cost is
/// `d^n` objective evaluations for the representatives plus `d^{2κ}` marks.
pub fn gamma_prime_table(code: &CssCode, cap: u64) -> Result<Vec<bool>> {
    let total = check_cap("full-space enumeration", code.d(), code.n(), cap)?;
    let (d, kappa) = (code.d(), code.kappa());
    let mut table = vec![false; total as usize];
    let codewords: Vec<Vec<u8>> = code.code().codewords(cap)?.map(|w| w.into_digits()).collect();
    let mut s = vec![0u8; kappa];
    loop {
        let rep = code.coset_representative(&s)?;
        for c in &codewords {
            let w: Vec<u8> = rep.digits().iter().zip(c).map(|(&a, &b)| (a + b) % d).collect();
            table[w.iter().fold(0usize, |acc, &x| acc * d as usize + x as usize)] = true;
        }
        // Odometer over syndromes.
        match s.iter().position(|&x| x + 1 < d) {
            Some(j) => {
                s[j] += 1;
                s[..j].iter_mut().for_each(|x| *x = 0);
            }
            None => break,
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(d: u8, s: &str) -> Word {
        Word::parse(d, s).unwrap()
    }

    fn rep4() -> CssCode {
        CssCode::build(LinearCode::from_strs(2, &["1111"]).unwrap()).unwrap()
    }

    #[test]
    fn build_examples() {
        let c = rep4();
        assert_eq!((c.kappa(), c.k()), (1, 2));
        assert!(matches!(
            CssCode::build(LinearCode::from_strs(2, &["1000"]).unwrap()),
            Err(Error::NotSelfOrthogonal(0, 0))
        ));
        let t = CssCode::build(LinearCode::from_strs(3, &["111"]).unwrap()).unwrap();
        assert_eq!((t.kappa(), t.k()), (1, 1));
    }

    #[test]
    fn binary_rules() {
        assert!(matches!(
            CssCode::build(LinearCode::from_strs(2, &["1100"]).unwrap()),
            Err(Error::D2RuleViolation(_))
        ));
        assert!(matches!(
            CssCode::build(LinearCode::from_strs(2, &["110"]).unwrap()),
            Err(Error::D2RuleViolation(_))
        ));
    }

    #[test]
    fn representative_examples() {
        let c = rep4();
        assert_eq!(c.coset_representative(&[0]).unwrap(), w(2, "0000"));
        assert_eq!(c.coset_representative(&[1]).unwrap(), w(2, "0001"));
        assert!(c.coset_representative(&[2]).is_err());
        assert!(c.coset_representative(&[0, 0]).is_err());
    }

    #[test]
    fn key_map_example() {
        let c = LinearCode::from_strs(2, &["1111"]).unwrap();
        let code = CssCode::from_parts(
            c,
            vec![w(2, "1100"), w(2, "1010")],
            DecodeRule::MinEntropy,
        )
        .unwrap();
        assert_eq!(code.decode_key(&w(2, "0110")).unwrap(), vec![1, 1]);
        assert_eq!(code.encode_key(&[0, 0]).unwrap(), w(2, "0000"));
        assert!(code.decode_key(&w(2, "1000")).is_err());
    }

    #[test]
    fn spectrum_of_even_weight_code() {
        let spec = rep4().type_spectrum().unwrap();
        assert_eq!(spec.get(&TypeDist::new(vec![2, 2]).unwrap()), 6);
        assert_eq!(spec.get(&TypeDist::new(vec![4, 0]).unwrap()), 1);
        assert_eq!(spec.total(), 8);
    }

    #[test]
    fn balance_of_small_codes() {
        // Ratios: weight-2 words 6/6 = 1 against the bound 5·2^0 = 5.
        let b = rep4().is_balanced().unwrap();
        assert!(b.balanced);
        assert!((b.bound - 5.0).abs() < 1e-12);
        assert!((b.max_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_code_is_unbalanced() {
        // Self-dual pairs code at n = 20: ten weight-2 words among 190,
        // against the bound 21·2^{-9}.
        let rows: Vec<String> = (0..10)
            .map(|i| {
                let mut s = vec!['0'; 20];
                s[2 * i] = '1';
                s[2 * i + 1] = '1';
                s.into_iter().collect()
            })
            .collect();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let code = CssCode::build(LinearCode::from_strs(2, &refs).unwrap()).unwrap();
        let b = code.is_balanced().unwrap();
        assert!(!b.balanced);
        // Complements of the pairs (weight 18) come first in count order.
        assert_eq!(b.witness, Some(TypeDist::new(vec![2, 18]).unwrap()));
    }

    #[test]
    fn search_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let code = search_balanced(2, 8, 2, &mut rng, 50).unwrap();
        assert!(code.code().contains(&Word::ones(2, 8).unwrap()).unwrap());
        assert!(code.code().is_self_orthogonal());
        assert!(search_balanced(2, 8, 5, &mut rng, 5).is_err());
        assert!(matches!(
            search_balanced(3, 2, 1, &mut rng, 7),
            Err(Error::NotFound { tries: 7 })
        ));
    }

    #[test]
    fn correctability_examples() {
        let c = rep4();
        let z = w(2, "0000");
        assert!(c.correctable(&z, &z).unwrap());
        assert!(c.correctable(&w(2, "1111"), &z).unwrap());
        // Γ = {0000, 0001}; Γ′ = {0000, 1111, 0001, 1110}.
        assert!(c.correctable(&w(2, "1110"), &z).unwrap());
        assert!(!c.correctable(&w(2, "1000"), &z).unwrap());
        assert!(!c.correctable(&z, &w(2, "1100")).unwrap());
    }

    #[test]
    fn gamma_table_matches_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (d, n, kappa) in [(2u8, 8usize, 2usize), (3, 5, 1), (2, 6, 3)] {
            let code = search_balanced(d, n, kappa, &mut rng, 50)
                .or_else(|_| CssCode::build(LinearCode::from_strs(2, &["111111"]).unwrap()))
                .unwrap();
            let table = gamma_prime_table(&code, code.cap()).unwrap();
            let count = table.iter().filter(|&&b| b).count();
            assert_eq!(count, (code.d() as usize).pow(2 * code.kappa() as u32));
            for (i, &inside) in table.iter().enumerate() {
                let e = Word::from_basis_index(code.d(), code.n(), i).unwrap();
                assert_eq!(inside, code.in_gamma_prime(&e).unwrap());
            }
        }
    }

    #[test]
    fn code_file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let codes = vec![
            rep4(),
            search_balanced(2, 8, 3, &mut rng, 50).unwrap(),
            CssCode::build(LinearCode::from_strs(3, &["111"]).unwrap()).unwrap(),
        ];
        let text = write_codes(&codes);
        let parsed = parse_codes(&text).unwrap();
        assert_eq!(parsed, codes);
        assert_eq!(write_codes(&parsed), text);
    }

    #[test]
    fn code_file_errors_name_the_line() {
        let err = parse_codes("2 4 1 2\n1111\n1100\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = parse_codes("2 4 1 2\n1111\n11x0\n1010\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
