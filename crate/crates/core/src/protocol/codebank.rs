//! A shared list of balanced codes, bucketed by length.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;

use crate::csscode::{gamma_prime_table, parse_codes, search_balanced, write_codes, CssCode};
use crate::error::{invalid, Error, Result};
use crate::typesys::Dist;

/// Default lengths for generated banks. Decoding and the balance check
/// enumerate `d^{n−κ}` words, which keeps the buckets at desk scale.
pub fn default_lengths(d: u8) -> Vec<usize> {
    match d {
        2 => vec![4, 8, 12, 16, 20],
        3 => vec![4, 6, 8],
        _ => vec![2, 4],
    }
}

struct Entry {
    code: CssCode,
    gamma: OnceLock<Arc<Vec<bool>>>,
}

/// Codes keyed by `(d, n, k)`.
pub struct CodeBank {
    entries: Vec<Entry>,
    outside: Mutex<HashMap<(usize, Vec<u64>), f64>>,
}

impl std::fmt::Debug for CodeBank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let keys: Vec<_> = self
            .entries
            .iter()
            .map(|e| (e.code.d(), e.code.n(), e.code.k()))
            .collect();
        f.debug_struct("CodeBank").field("codes", &keys).finish()
    }
}

impl CodeBank {
    pub fn new(codes: Vec<CssCode>) -> Self {
        Self {
            entries: codes
                .into_iter()
                .map(|code| Entry {
                    code,
                    gamma: OnceLock::new(),
                })
                .collect(),
            outside: Mutex::new(HashMap::new()),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(Self::new(parse_codes(text)?))
    }

    pub fn to_text(&self) -> String {
        let codes: Vec<CssCode> = self.entries.iter().map(|e| e.code.clone()).collect();
        write_codes(&codes)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Runs [`search_balanced`] for every `(n, κ)` with `1 ≤ κ < n/2` (and
    /// `κ ≥ 1`), skipping pairs where no balanced code turns up.
    pub fn generate<R: Rng + ?Sized>(
        d: u8,
        lengths: &[usize],
        rng: &mut R,
        max_tries: usize,
    ) -> Result<Self> {
        let mut codes = Vec::new();
        for &n in lengths {
            if d == 2 && n % 2 != 0 {
                return Err(invalid(format!("binary bank lengths must be even, got {n}")));
            }
            for kappa in 1..n.div_ceil(2) {
                match search_balanced(d, n, kappa, rng, max_tries) {
                    Ok(code) => codes.push(code),
                    Err(Error::NotFound { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(Self::new(codes))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn code(&self, index: usize) -> &CssCode {
        &self.entries[index].code
    }

    pub fn codes(&self) -> impl Iterator<Item = &CssCode> {
        self.entries.iter().map(|e| &e.code)
    }

    /// Largest bank length for alphabet d not above `available`.
    pub fn bucket_for(&self, d: u8, available: usize) -> Option<usize> {
        self.codes()
            .filter(|c| c.d() == d && c.n() <= available)
            .map(|c| c.n())
            .max()
    }

    fn at_length(&self, d: u8, n: usize) -> impl Iterator<Item = (usize, &CssCode)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| (i, &e.code))
            .filter(move |(_, c)| c.d() == d && c.n() == n)
    }

    /// The code with the largest k satisfying `k ≤ n·R`.
    pub fn largest_k_at_most(&self, d: u8, n: usize, rate: f64) -> Option<usize> {
        let limit = rate * n as f64 + 1e-9;
        self.at_length(d, n)
            .filter(|(_, c)| c.k() > 0 && c.k() as f64 <= limit)
            .max_by_key(|(i, c)| (c.k(), std::cmp::Reverse(*i)))
            .map(|(i, _)| i)
    }

    /// The code with the smallest k satisfying `k ≥ n·R`.
    pub fn smallest_k_at_least(&self, d: u8, n: usize, rate: f64) -> Option<usize> {
        let floor = rate * n as f64 - 1e-9;
        self.at_length(d, n)
            .filter(|(_, c)| c.k() > 0 && c.k() as f64 >= floor)
            .min_by_key(|(i, c)| (c.k(), *i))
            .map(|(i, _)| i)
    }

    /// `Γ′` membership for every word of the code at `index`, by basis index.
    pub fn gamma_table(&self, index: usize) -> Result<Arc<Vec<bool>>> {
        let entry = &self.entries[index];
        if let Some(t) = entry.gamma.get() {
            return Ok(t.clone());
        }
        let table = Arc::new(gamma_prime_table(&entry.code, entry.code.cap())?);
        Ok(entry.gamma.get_or_init(|| table).clone())
    }

    /// Exact `pⁿ(Γ′ᶜ)` for the code at `index`, cached per distribution.
    pub fn prob_outside(&self, index: usize, p: &Dist) -> Result<f64> {
        let key = (index, p.probs().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        if let Some(&v) = self.outside.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let table = self.gamma_table(index)?;
        let code = &self.entries[index].code;
        let v = prob_outside_table(&table, code.d() as usize, code.n(), p.probs());
        self.outside.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }
}

/// `Σ_{i: !table[i]} Π_j p(w_i[j])`, walking words in basis-index order.
pub fn prob_outside_table(table: &[bool], d: usize, n: usize, p: &[f64]) -> f64 {
    fn rec(pos: usize, n: usize, d: usize, idx: usize, prob: f64, p: &[f64], table: &[bool], acc: &mut f64) {
        if prob == 0.0 {
            return;
        }
        if pos == n {
            if !table[idx] {
                *acc += prob;
            }
            return;
        }
        for x in 0..d {
            rec(pos + 1, n, d, idx * d + x, prob * p[x], p, table, acc);
        }
    }
    let mut acc = 0.0;
    rec(0, n, d, 0, 1.0, p, table, &mut acc);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lookup_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bank = CodeBank::generate(2, &[4, 8], &mut rng, 50).unwrap();
        assert_eq!(bank.bucket_for(2, 11), Some(8));
        assert_eq!(bank.bucket_for(2, 3), None);
        let i = bank.largest_k_at_most(2, 8, 0.5).unwrap();
        assert!(bank.code(i).k() <= 4);
        let j = bank.smallest_k_at_least(2, 8, 0.5).unwrap();
        assert!(bank.code(j).k() >= 4);
        let back = CodeBank::parse(&bank.to_text()).unwrap();
        assert_eq!(back.len(), bank.len());
    }

    #[test]
    fn outside_probability_of_a_point_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bank = CodeBank::generate(2, &[4], &mut rng, 50).unwrap();
        let zero = Dist::point_mass(2, 0).unwrap();
        // 0ⁿ is the minimum-entropy representative of its coset.
        assert_eq!(bank.prob_outside(0, &zero).unwrap(), 0.0);
        let p = Dist::bernoulli(0.1).unwrap();
        let v = bank.prob_outside(0, &p).unwrap();
        assert!(v > 0.0 && v < 1.0);
        assert_eq!(bank.prob_outside(0, &p).unwrap(), v);
    }
}
