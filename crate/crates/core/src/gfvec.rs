//! Words and linear codes over the prime field F_d.
//!
//! A [`Word`] is a digit string with its modulus attached. A [`LinearCode`]
//! is a subspace of F_d^n held as a list of independent generator rows.
//! Row reduction always pivots on the first nonzero column, so duals and
//! echelon forms are reproducible across runs.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default ceiling on the number of words any enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// Validates a prime modulus and narrows it to `u8`.
pub fn check_prime(d: u32) -> Result<u8> {
    if !(2..=251).contains(&d) || (2..d).take_while(|p| p * p <= d).any(|p| d.is_multiple_of(p)) {
        return Err(Error::InvalidModulus(d));
    }
    Ok(d as u8)
}

/// `d^e` as a float, for comparing enumeration sizes against a cap.
pub(crate) fn size_of_space(d: u8, e: usize) -> f64 {
    (d as f64).powi(e as i32)
}

pub(crate) fn check_cap(what: &'static str, d: u8, e: usize, cap: u64) -> Result<u64> {
    let needed = size_of_space(d, e);
    if needed > cap as f64 {
        return Err(Error::CapExceeded { what, needed, cap });
    }
    Ok(needed as u64)
}

#[inline]
pub(crate) fn add_mod(a: u8, b: u8, d: u8) -> u8 {
    let s = a as u16 + b as u16;
    (s % d as u16) as u8
}

#[inline]
pub(crate) fn mul_mod(a: u8, b: u8, d: u8) -> u8 {
    ((a as u16 * b as u16) % d as u16) as u8
}

#[inline]
pub(crate) fn neg_mod(a: u8, d: u8) -> u8 {
    if a == 0 {
        0
    } else {
        d - a
    }
}

/// Multiplicative inverse of a nonzero residue (Fermat).
pub(crate) fn inv_mod(a: u8, d: u8) -> u8 {
    debug_assert!(!a.is_multiple_of(d));
    let mut result = 1u8;
    let mut base = a % d;
    let mut e = d - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = mul_mod(result, base, d);
        }
        base = mul_mod(base, base, d);
        e >>= 1;
    }
    result
}

/// `acc += c * row` digitwise.
#[inline]
pub(crate) fn axpy(acc: &mut [u8], c: u8, row: &[u8], d: u8) {
    if c == 0 {
        return;
    }
    for (a, &r) in acc.iter_mut().zip(row) {
        *a = add_mod(*a, mul_mod(c, r, d), d);
    }
}

#[inline]
pub(crate) fn dot_digits(a: &[u8], b: &[u8], d: u8) -> u8 {
    let s: u32 = a.iter().zip(b).map(|(&x, &y)| x as u32 * y as u32).sum();
    (s % d as u32) as u8
}

/// A vector in F_d^n.
///
/// The derived ordering compares digit strings lexicographically with
/// position 1 most significant and digit order `0 < 1 < .. < d-1`; this is
/// the tie-break order used by every decoder.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Word {
    d: u8,
    digits: Vec<u8>,
}

impl Word {
    pub fn new(d: u8, digits: Vec<u8>) -> Result<Self> {
        check_prime(d as u32)?;
        if digits.is_empty() {
            return Err(Error::InvalidArgument("words must have length at least 1".into()));
        }
        if let Some(&bad) = digits.iter().find(|&&x| x >= d) {
            return Err(Error::DigitOutOfRange {
                digit: bad as u32,
                d,
            });
        }
        Ok(Self { d, digits })
    }

    /// Builds a word by reducing arbitrary integers mod `d`.
    pub fn from_residues(d: u8, values: &[i64]) -> Result<Self> {
        let digits = values
            .iter()
            .map(|v| v.rem_euclid(d as i64) as u8)
            .collect();
        Self::new(d, digits)
    }

    pub(crate) fn from_digits_unchecked(d: u8, digits: Vec<u8>) -> Self {
        debug_assert!(digits.iter().all(|&x| x < d));
        Self { d, digits }
    }

    pub fn zeros(d: u8, n: usize) -> Result<Self> {
        Self::new(d, vec![0; n])
    }

    pub fn ones(d: u8, n: usize) -> Result<Self> {
        Self::new(d, vec![1; n])
    }

    /// Parses a string of digit characters such as `"0110"`.
    pub fn parse(d: u8, s: &str) -> Result<Self> {
        let digits = s
            .chars()
            .map(|c| {
                c.to_digit(36)
                    .map(|v| v as u8)
                    .ok_or_else(|| Error::InvalidArgument(format!("bad digit character {c:?}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(d, digits)
    }

    pub fn d(&self) -> u8 {
        self.d
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn into_digits(self) -> Vec<u8> {
        self.digits
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&x| x == 0)
    }

    /// Number of nonzero positions.
    pub fn weight(&self) -> usize {
        self.digits.iter().filter(|&&x| x != 0).count()
    }

    fn check_compatible(&self, other: &Word) -> Result<()> {
        if self.d != other.d {
            return Err(Error::ModulusMismatch(self.d, other.d));
        }
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(())
    }

    /// `Σ u_i v_i mod d`.
    pub fn dot(&self, other: &Word) -> Result<u8> {
        self.check_compatible(other)?;
        Ok(dot_digits(&self.digits, &other.digits, self.d))
    }

    pub fn add(&self, other: &Word) -> Result<Word> {
        self.check_compatible(other)?;
        let d = self.d;
        let digits = self
            .digits
            .iter()
            .zip(&other.digits)
            .map(|(&a, &b)| add_mod(a, b, d))
            .collect();
        Ok(Word { d, digits })
    }

    pub fn sub(&self, other: &Word) -> Result<Word> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Word {
        let d = self.d;
        Word {
            d,
            digits: self.digits.iter().map(|&a| neg_mod(a, d)).collect(),
        }
    }

    pub fn scale(&self, c: u8) -> Word {
        let d = self.d;
        let c = c % d;
        Word {
            d,
            digits: self.digits.iter().map(|&a| mul_mod(a, c, d)).collect(),
        }
    }

    /// Returns `w` with `w[i] = self[perm[i]]`.
    ///
    /// This action preserves dot products: `perm(u)·perm(v) = u·v`.
    pub fn permute(&self, perm: &[usize]) -> Result<Word> {
        if perm.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: perm.len(),
            });
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
        }
        Ok(Word {
            d: self.d,
            digits: perm.iter().map(|&p| self.digits[p]).collect(),
        })
    }

    /// Index of this word in the standard basis of `(C^d)^{⊗n}`, position 1
    /// most significant.
    pub fn basis_index(&self) -> usize {
        self.digits
            .iter()
            .fold(0usize, |acc, &x| acc * self.d as usize + x as usize)
    }

    /// Inverse of [`Word::basis_index`].
    pub fn from_basis_index(d: u8, n: usize, mut index: usize) -> Result<Word> {
        let mut digits = vec![0u8; n];
        for slot in digits.iter_mut().rev() {
            *slot = (index % d as usize) as u8;
            index /= d as usize;
        }
        if index != 0 {
            return Err(Error::InvalidArgument("basis index out of range".into()));
        }
        Word::new(d, digits)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &x in &self.digits {
            write!(f, "{}", char::from_digit(x as u32, 36).unwrap_or('?'))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(d={}, {})", self.d, self)
    }
}

/// Reduced row echelon form of a list of rows, with the transformation that
/// produced it.
#[derive(Clone, Debug)]
pub(crate) struct Echelon {
    pub rows: Vec<Vec<u8>>,
    pub pivots: Vec<usize>,
    /// `rows[i] = Σ_j transform[i][j] · input[j]`.
    pub transform: Vec<Vec<u8>>,
}

pub(crate) fn echelon(d: u8, n: usize, input: &[Vec<u8>]) -> Echelon {
    let m = input.len();
    let mut rows: Vec<Vec<u8>> = input.to_vec();
    let mut transform: Vec<Vec<u8>> = (0..m)
        .map(|i| {
            let mut e = vec![0u8; m];
            e[i] = 1;
            e
        })
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        if rank == m {
            break;
        }
        let Some(p) = (rank..m).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, p);
        transform.swap(rank, p);
        let s = inv_mod(rows[rank][col], d);
        for x in rows[rank].iter_mut() {
            *x = mul_mod(*x, s, d);
        }
        for x in transform[rank].iter_mut() {
            *x = mul_mod(*x, s, d);
        }
        let (prow, ptr) = (rows[rank].clone(), transform[rank].clone());
        for r in 0..m {
            if r != rank && rows[r][col] != 0 {
                let c = neg_mod(rows[r][col], d);
                axpy(&mut rows[r], c, &prow, d);
                axpy(&mut transform[r], c, &ptr, d);
            }
        }
        pivots.push(col);
        rank += 1;
    }
    rows.truncate(rank);
    transform.truncate(rank);
    Echelon {
        rows,
        pivots,
        transform,
    }
}

/// Rank of a set of digit rows.
pub(crate) fn rank_of(d: u8, n: usize, rows: &[Vec<u8>]) -> usize {
    echelon(d, n, rows).pivots.len()
}

/// Solves `coeffs · basis = w` for a fixed list of independent rows.
#[derive(Clone, Debug)]
pub(crate) struct Solver {
    d: u8,
    ech: Echelon,
}

impl Solver {
    pub fn new(d: u8, n: usize, basis: &[Vec<u8>]) -> Self {
        let ech = echelon(d, n, basis);
        debug_assert_eq!(ech.rows.len(), basis.len());
        Self { d, ech }
    }

    /// Coefficients of `w` in the basis, or `None` when `w` is outside the span.
    pub fn coordinates(&self, w: &[u8]) -> Option<Vec<u8>> {
        let d = self.d;
        let m = self.ech.transform.first().map_or(0, |t| t.len());
        let mut residual = w.to_vec();
        let mut coeffs = vec![0u8; m];
        for (i, &p) in self.ech.pivots.iter().enumerate() {
            let c = residual[p];
            if c != 0 {
                axpy(&mut residual, neg_mod(c, d), &self.ech.rows[i], d);
                axpy(&mut coeffs, c, &self.ech.transform[i], d);
            }
        }
        residual.iter().all(|&x| x == 0).then_some(coeffs)
    }

    pub fn contains(&self, w: &[u8]) -> bool {
        let d = self.d;
        let mut residual = w.to_vec();
        for (i, &p) in self.ech.pivots.iter().enumerate() {
            let c = residual[p];
            if c != 0 {
                axpy(&mut residual, neg_mod(c, d), &self.ech.rows[i], d);
            }
        }
        residual.iter().all(|&x| x == 0)
    }
}

/// A subspace of F_d^n given by independent generator rows.
#[derive(Clone, Debug)]
pub struct LinearCode {
    d: u8,
    n: usize,
    basis: Vec<Word>,
    solver: Solver,
}

impl PartialEq for LinearCode {
    /// Equality as sets of words.
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d
            && self.n == other.n
            && self.dim() == other.dim()
            && other.basis.iter().all(|w| self.solver.contains(&w.digits))
    }
}

impl Eq for LinearCode {}

impl LinearCode {
    /// Builds a code from independent rows; dependent rows are an error.
    pub fn new(d: u8, n: usize, basis: Vec<Word>) -> Result<Self> {
        check_prime(d as u32)?;
        if n == 0 {
            return Err(Error::InvalidArgument("code length must be at least 1".into()));
        }
        for w in &basis {
            if w.d != d {
                return Err(Error::ModulusMismatch(d, w.d));
            }
            if w.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
        }
        let rows: Vec<Vec<u8>> = basis.iter().map(|w| w.digits.clone()).collect();
        if rank_of(d, n, &rows) != rows.len() {
            return Err(Error::DependentRows);
        }
        let solver = Solver::new(d, n, &rows);
        Ok(Self {
            d,
            n,
            basis,
            solver,
        })
    }

    /// The span of arbitrary rows; rows that do not raise the rank are dropped.
    pub fn span(d: u8, n: usize, rows: Vec<Word>) -> Result<Self> {
        let mut kept: Vec<Word> = Vec::new();
        let mut kept_rows: Vec<Vec<u8>> = Vec::new();
        for w in rows {
            if w.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
            if w.d != d {
                return Err(Error::ModulusMismatch(d, w.d));
            }
            kept_rows.push(w.digits.clone());
            if rank_of(d, n, &kept_rows) == kept_rows.len() {
                kept.push(w);
            } else {
                kept_rows.pop();
            }
        }
        Self::new(d, n, kept)
    }

    /// The zero subspace `{0ⁿ}`.
    pub fn zero(d: u8, n: usize) -> Result<Self> {
        Self::new(d, n, Vec::new())
    }

    /// The whole space F_d^n with the standard basis.
    pub fn full(d: u8, n: usize) -> Result<Self> {
        let rows = (0..n)
            .map(|i| {
                let mut v = vec![0u8; n];
                v[i] = 1;
                Word::new(d, v)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, n, rows)
    }

    /// Parses rows such as `["1111", "1100"]`.
    pub fn from_strs(d: u8, rows: &[&str]) -> Result<Self> {
        let words = rows
            .iter()
            .map(|s| Word::parse(d, s))
            .collect::<Result<Vec<_>>>()?;
        let n = words
            .first()
            .map(Word::len)
            .ok_or_else(|| Error::InvalidArgument("at least one row is needed to infer n".into()))?;
        Self::new(d, n, words)
    }

    pub fn d(&self) -> u8 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// κ, the number of generator rows.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Word] {
        &self.basis
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        if w.d != self.d {
            return Err(Error::ModulusMismatch(self.d, w.d));
        }
        if w.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: w.len(),
            });
        }
        Ok(())
    }

    pub fn contains(&self, w: &Word) -> Result<bool> {
        self.check_word(w)?;
        Ok(self.solver.contains(&w.digits))
    }

    pub(crate) fn contains_digits(&self, w: &[u8]) -> bool {
        self.solver.contains(w)
    }

    /// Coefficients of `w` in the generator basis, if `w` is a codeword.
    pub fn coordinates(&self, w: &Word) -> Result<Option<Vec<u8>>> {
        self.check_word(w)?;
        Ok(self.solver.coordinates(&w.digits))
    }

    /// Basis of C⊥, built from the echelon form of the generators.
    pub fn dual(&self) -> LinearCode {
        let d = self.d;
        let rows: Vec<Vec<u8>> = self.basis.iter().map(|w| w.digits.clone()).collect();
        let ech = echelon(d, self.n, &rows);
        let mut is_pivot = vec![false; self.n];
        for &p in &ech.pivots {
            is_pivot[p] = true;
        }
        let dual_rows: Vec<Word> = (0..self.n)
            .filter(|&f| !is_pivot[f])
            .map(|f| {
                let mut v = vec![0u8; self.n];
                v[f] = 1;
                for (i, &p) in ech.pivots.iter().enumerate() {
                    v[p] = neg_mod(ech.rows[i][f], d);
                }
                Word::from_digits_unchecked(d, v)
            })
            .collect();
        LinearCode::new(d, self.n, dual_rows).expect("dual rows are independent by construction")
    }

    /// `(⟨w, g_j⟩)_j`; the zero vector exactly when `w ∈ C⊥`.
    pub fn syndrome(&self, w: &Word) -> Result<Vec<u8>> {
        self.check_word(w)?;
        Ok(self.syndrome_digits(&w.digits))
    }

    pub(crate) fn syndrome_digits(&self, w: &[u8]) -> Vec<u8> {
        self.basis
            .iter()
            .map(|g| dot_digits(w, &g.digits, self.d))
            .collect()
    }

    /// First pair of generator rows (possibly equal) with nonzero dot product.
    pub fn self_orthogonality_violation(&self) -> Option<(usize, usize)> {
        for i in 0..self.dim() {
            for j in i..self.dim() {
                if dot_digits(&self.basis[i].digits, &self.basis[j].digits, self.d) != 0 {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_self_orthogonal(&self) -> bool {
        self.self_orthogonality_violation().is_none()
    }

    /// All `d^κ` codewords, refusing when that exceeds `cap`.
    pub fn codewords(&self, cap: u64) -> Result<SpanIter> {
        check_cap("codeword enumeration", self.d, self.dim(), cap)?;
        Ok(SpanIter::new(
            self.d,
            vec![0; self.n],
            self.basis.iter().map(|w| w.digits.clone()).collect(),
        ))
    }

    /// Applies the coordinate permutation to every generator.
    pub fn permuted(&self, perm: &[usize]) -> Result<LinearCode> {
        let rows = self
            .basis
            .iter()
            .map(|w| w.permute(perm))
            .collect::<Result<Vec<_>>>()?;
        LinearCode::new(self.d, self.n, rows)
    }
}

/// The coset `rep + C⊥` for the code `c`, in enumeration order.
///
/// Yields exactly `d^{n-κ}` distinct words.
pub fn enumerate_coset(c: &LinearCode, rep: &Word, cap: u64) -> Result<SpanIter> {
    c.check_word(rep)?;
    let dual = c.dual();
    check_cap("coset enumeration", c.d, dual.dim(), cap)?;
    Ok(SpanIter::new(
        c.d,
        rep.digits.clone(),
        dual.basis.iter().map(|w| w.digits.clone()).collect(),
    ))
}

/// Iterates `offset + Σ a_j row_j` over all coefficient vectors.
///
/// Each step changes a low-order coefficient and carries like an odometer;
/// a carry out of position j adds `row_j` once more, returning that
/// coefficient to zero.
#[derive(Clone, Debug)]
pub struct SpanIter {
    d: u8,
    current: Vec<u8>,
    rows: Vec<Vec<u8>>,
    coeffs: Vec<u8>,
    done: bool,
}

impl SpanIter {
    pub(crate) fn new(d: u8, offset: Vec<u8>, rows: Vec<Vec<u8>>) -> Self {
        let k = rows.len();
        Self {
            d,
            current: offset,
            rows,
            coeffs: vec![0; k],
            done: false,
        }
    }

    /// Visits every element without allocating a `Word` per step.
    pub(crate) fn for_each_digits(mut self, mut f: impl FnMut(&[u8])) {
        while !self.done {
            f(&self.current);
            self.advance();
        }
    }

    fn advance(&mut self) {
        let d = self.d;
        for j in 0..self.rows.len() {
            axpy(&mut self.current, 1, &self.rows[j], d);
            self.coeffs[j] += 1;
            if self.coeffs[j] < d {
                return;
            }
            self.coeffs[j] = 0;
        }
        self.done = true;
    }
}

impl Iterator for SpanIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        let w = Word::from_digits_unchecked(self.d, self.current.clone());
        self.advance();
        Some(w)
    }
}

/// All `d^n` words of length n, in increasing lexicographic order.
pub fn all_words(d: u8, n: usize, cap: u64) -> Result<impl Iterator<Item = Word>> {
    let total = check_cap("full-space enumeration", d, n, cap)?;
    Ok((0..total as usize).map(move |i| Word::from_basis_index(d, n, i).expect("index in range")))
}
