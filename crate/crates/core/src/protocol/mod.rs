//! Classical simulation of the BB84 and modified BB84 protocols under
//! i.i.d. Pauli-type attacks.
//!
//! Sign conventions: a Z-basis digit arrives as `sent − ξ`, an X-basis digit
//! as `sent + ζ`, where `(ξ, ζ)` is drawn from `P_A` per digit. The error on
//! a code digit is `sent − received`, so it is `ξ` in the Z basis and `−ζ`
//! in the X basis. Eve's data is never instantiated; security figures in a
//! report are the proved bounds evaluated at the session's parameters.

pub mod codebank;
pub mod montecarlo;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use codebank::{default_lengths, CodeBank};
pub use montecarlo::{monte_carlo, wilson_interval, Aggregate, MonteCarloReport};

use crate::csscode::CssCode;
use crate::error::{invalid, Result};
use crate::exponents::{
    e1, e_joint, fidelity_bound, leakage_bound, select_rate, LeakageBound, RateSelection,
};
use crate::exponents::rates::{chosen_rate_modified, min_code_size};
use crate::gfvec::Word;
use crate::qudit::{channel_to_dist, parse_kraus, KrausChannel};
use crate::typesys::{num_types, Dist, JointDist, TypeDist};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    Bb84,
    Modified,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolConfig {
    pub d: u8,
    pub m: usize,
    pub p_a: f64,
    pub p_b: f64,
    pub p_c: f64,
    pub mode: Mode,
    /// ℓ1 radius of the rate-selection ball (BB84).
    pub eps: f64,
    /// Rate margin γ (modified).
    pub gamma: f64,
    pub e_target: f64,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            d: 2,
            m: 6000,
            p_a: 0.5,
            p_b: 0.5,
            p_c: 0.5,
            mode: Mode::Bb84,
            eps: 0.02,
            gamma: 0.05,
            e_target: 0.01,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        crate::gfvec::check_prime(self.d as u32)?;
        let open = |name: &str, p: f64, hi: f64| {
            if p > 0.0 && p < hi {
                Ok(())
            } else {
                Err(invalid(format!("{name} = {p} outside (0,{hi})")))
            }
        };
        if self.m == 0 {
            return Err(invalid("m must be positive"));
        }
        match self.mode {
            Mode::Bb84 => {
                open("p_a", self.p_a, 1.0)?;
                open("p_b", self.p_b, 1.0)?;
                open("p_c", self.p_c, 1.0)?;
                if !(self.eps >= 0.0) {
                    return Err(invalid("ε must be nonnegative"));
                }
                if !(self.e_target > 0.0) {
                    return Err(invalid("the target exponent must be positive"));
                }
            }
            Mode::Modified => {
                open("p_a", self.p_a, 0.5)?;
                open("p_b", self.p_b, 0.5)?;
                if !(self.gamma > 0.0) {
                    return Err(invalid("γ must be positive"));
                }
            }
        }
        Ok(())
    }

    /// `r = p_a p_b / (p_a p_b + (1−p_a)(1−p_b))`.
    pub fn r(&self) -> f64 {
        let one = self.p_a * self.p_b;
        one / (one + (1.0 - self.p_a) * (1.0 - self.p_b))
    }
}

/// Eve's per-digit operation.
#[derive(Clone, Debug)]
pub enum AttackModel {
    Pauli(JointDist),
    Kraus(KrausChannel),
}

impl AttackModel {
    pub fn dist(&self) -> Result<JointDist> {
        match self {
            AttackModel::Pauli(p) => Ok(p.clone()),
            AttackModel::Kraus(k) => channel_to_dist(k),
        }
    }

    /// `identity | dephasing:q | flip:q | depolarizing:q | dist:FILE | kraus:FILE`.
    ///
    /// Dephasing spreads q over the pure phase errors `Z^t`, flip over the
    /// pure shifts `X^s`, depolarizing over all non-identity Weyl errors.
    pub fn parse(spec: &str, d: u8) -> Result<Self> {
        let d_us = d as usize;
        let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
        let prob = || -> Result<f64> {
            let q: f64 = arg
                .parse()
                .map_err(|_| invalid(format!("bad probability in attack {spec:?}")))?;
            if !(0.0..=1.0).contains(&q) {
                return Err(invalid(format!("attack probability {q} outside [0,1]")));
            }
            Ok(q)
        };
        let others = |count: usize, q: f64| q / count as f64;
        match kind {
            "identity" => Ok(Self::Pauli(JointDist::point_mass(d_us, 0, 0)?)),
            "dephasing" => {
                let q = prob()?;
                Ok(Self::Pauli(JointDist::from_fn(d_us, |s, t| match (s, t) {
                    (0, 0) => 1.0 - q,
                    (0, _) => others(d_us - 1, q),
                    _ => 0.0,
                })?))
            }
            "flip" => {
                let q = prob()?;
                Ok(Self::Pauli(JointDist::from_fn(d_us, |s, t| match (s, t) {
                    (0, 0) => 1.0 - q,
                    (_, 0) => others(d_us - 1, q),
                    _ => 0.0,
                })?))
            }
            "depolarizing" => {
                let q = prob()?;
                Ok(Self::Pauli(JointDist::from_fn(d_us, |s, t| {
                    if (s, t) == (0, 0) {
                        1.0 - q
                    } else {
                        others(d_us * d_us - 1, q)
                    }
                })?))
            }
            "dist" => {
                let text = std::fs::read_to_string(arg)?;
                let p = parse_joint(&text)?;
                if p.alphabet() != d_us {
                    return Err(invalid(format!("distribution file is for d = {}", p.alphabet())));
                }
                Ok(Self::Pauli(p))
            }
            "kraus" => {
                let ch = parse_kraus(&std::fs::read_to_string(arg)?)?;
                if ch.d() != d_us {
                    return Err(invalid(format!("channel file is for d = {}", ch.d())));
                }
                Ok(Self::Kraus(ch))
            }
            _ => Err(invalid(format!("unknown attack {spec:?}"))),
        }
    }
}

/// Parses `d` rows of `d` numbers, row s holding `P(s, 0..d)`.
pub fn parse_joint(text: &str) -> Result<JointDist> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| crate::error::parse_err(i + 1, format!("bad number {t:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let d = rows.len();
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(crate::error::parse_err(i + 1, format!("expected {d} numbers per row")));
    }
    JointDist::new(d, rows.concat())
}

/// Everything both parties and Eve did, digit by digit.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub d: u8,
    pub a: Vec<u8>,
    pub b: Vec<u8>,
    pub c: Vec<u8>,
    pub sent: Vec<u8>,
    pub received: Vec<u8>,
    pub xi: Vec<u8>,
    pub zeta: Vec<u8>,
}

/// RNG stream labels; each purpose draws from its own stream of the
/// session seed.
pub mod streams {
    pub const BASES: u64 = 1;
    pub const EVE: u64 = 2;
    pub const PERMUTATION: u64 = 3;
    pub const CODE: u64 = 4;
    pub const ALICE: u64 = 5;
    pub const PARTITION: u64 = 6;
    pub const DISCARDED: u64 = 7;
}

pub fn stream_rng(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

pub fn simulate_transcript(cfg: &ProtocolConfig, p: &JointDist) -> Transcript {
    let d = cfg.d;
    let dd = d as usize;
    let mut bases = stream_rng(cfg.seed, streams::BASES);
    let mut eve = stream_rng(cfg.seed, streams::EVE);
    let mut alice = stream_rng(cfg.seed, streams::ALICE);
    let mut junk = stream_rng(cfg.seed, streams::DISCARDED);
    let flat = p.as_dist();
    let m = cfg.m;
    let mut t = Transcript {
        d,
        a: Vec::with_capacity(m),
        b: Vec::with_capacity(m),
        c: Vec::with_capacity(m),
        sent: Vec::with_capacity(m),
        received: Vec::with_capacity(m),
        xi: Vec::with_capacity(m),
        zeta: Vec::with_capacity(m),
    };
    for _ in 0..m {
        let a = bases.random_bool(cfg.p_a) as u8;
        let b = bases.random_bool(cfg.p_b) as u8;
        let c = bases.random_bool(cfg.p_c) as u8;
        let y = alice.random_range(0..d);
        let idx = flat.sample_with(eve.random::<f64>());
        let (xi, zeta) = ((idx / dd) as u8, (idx % dd) as u8);
        let received = match (a, b) {
            (0, 0) => (y + d - xi) % d,
            (1, 1) => (y + zeta) % d,
            _ => junk.random_range(0..d),
        };
        t.a.push(a);
        t.b.push(b);
        t.c.push(c);
        t.sent.push(y);
        t.received.push(received);
        t.xi.push(xi);
        t.zeta.push(zeta);
    }
    t
}

/// Channel estimates from announced digits.
#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    /// Type of `sent − received` over the Z-basis estimation digits.
    pub p_u: TypeDist,
    /// Type of `received − sent` over the X-basis estimation digits.
    pub p_w: TypeDist,
    pub nu: u64,
    pub lambda: u64,
    pub lambda_p: u64,
    /// Some kind had no samples.
    pub degenerate: bool,
}

pub fn estimate_channel(t: &Transcript, positions: &[usize]) -> Estimate {
    let d = t.d;
    let dd = d as usize;
    let mut u = vec![0u64; dd];
    let mut w = vec![0u64; dd];
    for &i in positions {
        if t.a[i] == 0 {
            u[((t.sent[i] + d - t.received[i]) % d) as usize] += 1;
        } else {
            w[((t.received[i] + d - t.sent[i]) % d) as usize] += 1;
        }
    }
    let lambda: u64 = u.iter().sum();
    let lambda_p: u64 = w.iter().sum();
    Estimate {
        p_u: TypeDist::from_counts_unchecked(u),
        p_w: TypeDist::from_counts_unchecked(w),
        nu: lambda + lambda_p,
        lambda,
        lambda_p,
        degenerate: lambda == 0 || lambda_p == 0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Completed,
    Abort,
    CodebankMiss,
}

/// Bound values attached to a completed session.
#[derive(Clone, Debug, Serialize)]
pub struct SessionBounds {
    /// Exponent behind the fidelity bound: `E(k/n, P̄_M, P̿_M)` for BB84,
    /// `E1(γ, α)` for the modified protocol.
    pub exponent: f64,
    /// The fidelity-type bound at the session's n, clamped to 1.
    pub fidelity: f64,
    /// Exact probability that the key error on the code digits leaves Γ′.
    pub key_error_exact: f64,
    /// Exact `P̄ⁿ(Γ′ᶜ) + P̿ⁿ(Γ′ᶜ)` for the digit error laws.
    pub union_exact: f64,
    pub leakage: LeakageBound,
    /// `ν·min D(Q||π̂)` over the ε-shell (BB84 only).
    pub estimation_failure_exponent: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SessionReport {
    pub seed: u64,
    pub mode: Mode,
    pub outcome: Outcome,
    pub reason: Option<String>,
    pub m: usize,
    pub sifted: usize,
    pub discarded: usize,
    /// Sifted digits set aside without use (odd-count rule, modified mode).
    pub disregarded: usize,
    /// Digit moved from code to estimation by the binary odd-count rule.
    pub diverted: usize,
    /// Code digits beyond the bank length; estimation digits in BB84 mode,
    /// dropped in modified mode.
    pub surplus: usize,
    pub dropped: usize,
    pub estimation: usize,
    pub n: usize,
    pub k: usize,
    pub kappa: usize,
    pub code_index: Option<usize>,
    pub estimate: Option<Estimate>,
    pub selection: Option<RateSelection>,
    /// Rate chosen before rounding to a bank code.
    pub selected_rate: f64,
    pub sigma: Vec<u8>,
    pub sigma_bob: Vec<u8>,
    pub agreement: Option<bool>,
    /// Whether the code-digit error lay in Γ′; must equal `agreement`.
    pub residual_in_gamma_prime: Option<bool>,
    pub syndrome: Vec<u8>,
    pub bounds: Option<SessionBounds>,
}

impl SessionReport {
    fn blank(cfg: &ProtocolConfig, sifted: usize) -> Self {
        Self {
            seed: cfg.seed,
            mode: cfg.mode,
            outcome: Outcome::Abort,
            reason: None,
            m: cfg.m,
            sifted,
            discarded: cfg.m - sifted,
            disregarded: 0,
            diverted: 0,
            surplus: 0,
            dropped: 0,
            estimation: 0,
            n: 0,
            k: 0,
            kappa: 0,
            code_index: None,
            estimate: None,
            selection: None,
            selected_rate: 0.0,
            sigma: Vec::new(),
            sigma_bob: Vec::new(),
            agreement: None,
            residual_in_gamma_prime: None,
            syndrome: Vec::new(),
            bounds: None,
        }
    }

    fn stop(mut self, outcome: Outcome, reason: &str) -> Self {
        self.outcome = outcome;
        self.reason = Some(reason.to_string());
        self
    }

    /// `discarded + disregarded + n + estimation + dropped`; equals m.
    pub fn accounted(&self) -> usize {
        self.discarded + self.disregarded + self.n + self.estimation + self.dropped
    }
}

/// Result of the key-transmission steps on one code block.
#[derive(Clone, Debug)]
pub struct KeyExchange {
    pub syndrome: Vec<u8>,
    pub sigma: Vec<u8>,
    pub sigma_bob: Vec<u8>,
    pub agreement: bool,
    pub in_gamma_prime: bool,
}

/// Alice announces the syndrome of `y`, keys off `y − x`; Bob holds `y − e`,
/// decodes `y − x − e` back into C⊥ and keys off the result.
pub fn exchange_key(code: &CssCode, y: &Word, e: &Word) -> Result<KeyExchange> {
    let syndrome = code.syndrome(y)?;
    let x = code.coset_representative(&syndrome)?;
    let alice_word = y.sub(&x)?;
    let sigma = code.decode_key(&alice_word)?;
    let z = y.sub(e)?.sub(&x)?;
    let e_hat = code.coset_representative(&code.syndrome(&z.neg())?)?;
    let u = z.add(&e_hat)?;
    let sigma_bob = code.decode_key(&u)?;
    Ok(KeyExchange {
        agreement: sigma == sigma_bob,
        in_gamma_prime: code.in_gamma_prime(e)?,
        syndrome,
        sigma,
        sigma_bob,
    })
}

fn digits_at(values: &[u8], positions: &[usize]) -> Vec<u8> {
    positions.iter().map(|&i| values[i]).collect()
}

/// Key-error digits: `ξ` on Z-basis positions, `−ζ` on X-basis positions.
fn key_errors(t: &Transcript, positions: &[usize]) -> Vec<u8> {
    let d = t.d;
    positions
        .iter()
        .map(|&i| if t.a[i] == 0 { t.xi[i] } else { (d - t.zeta[i]) % d })
        .collect()
}

pub fn run_session(cfg: &ProtocolConfig, attack: &AttackModel, bank: &CodeBank) -> Result<SessionReport> {
    match cfg.mode {
        Mode::Bb84 => run_bb84(cfg, attack, bank),
        Mode::Modified => run_modified_bb84(cfg, attack, bank),
    }
}

pub fn run_bb84(cfg: &ProtocolConfig, attack: &AttackModel, bank: &CodeBank) -> Result<SessionReport> {
    cfg.validate()?;
    let p = attack.dist()?;
    check_alphabet(cfg, &p)?;
    let t = simulate_transcript(cfg, &p);
    let sift: Vec<usize> = (0..cfg.m).filter(|&i| t.a[i] == t.b[i]).collect();
    let mut rep = SessionReport::blank(cfg, sift.len());
    let (mut code_pos, mut est_pos): (Vec<usize>, Vec<usize>) =
        sift.iter().partition(|&&i| t.c[i] == 0);
    if cfg.d == 2 && code_pos.len() % 2 == 1 {
        est_pos.push(code_pos.pop().expect("odd count is nonzero"));
        rep.diverted = 1;
    }
    let Some(n) = bank.bucket_for(cfg.d, code_pos.len()) else {
        rep.estimation = est_pos.len() + code_pos.len();
        return Ok(rep.stop(Outcome::CodebankMiss, "no bank length fits the code digits"));
    };
    let surplus = code_pos.split_off(n);
    rep.surplus = surplus.len();
    est_pos.extend(surplus);
    est_pos.sort_unstable();
    rep.estimation = est_pos.len();
    rep.n = n;

    let est = estimate_channel(&t, &est_pos);
    rep.estimate = Some(est.clone());
    if est.degenerate {
        rep.n = 0;
        rep.estimation += n;
        return Ok(rep.stop(Outcome::Abort, "an estimation kind has no samples"));
    }
    let sel = select_rate(cfg.eps, &est.p_u, &est.p_w, est.lambda, est.lambda_p, cfg.e_target, cfg.d as u32)?;
    rep.selected_rate = sel.rate;
    rep.selection = Some(sel.clone());
    let give_back = |mut rep: SessionReport, outcome, reason: &str| {
        rep.estimation += rep.n;
        rep.n = 0;
        rep.stop(outcome, reason)
    };
    if sel.abort {
        let reason = sel.reason.clone().unwrap_or_default();
        return Ok(give_back(rep, Outcome::Abort, &reason));
    }
    let Some(ci) = bank.largest_k_at_most(cfg.d, n, sel.rate) else {
        return Ok(give_back(rep, Outcome::CodebankMiss, "no bank code with k ≤ nR"));
    };
    let code = bank.code(ci);
    let y = Word::new(cfg.d, digits_at(&t.sent, &code_pos))?;
    let e = Word::new(cfg.d, key_errors(&t, &code_pos))?;
    let kx = exchange_key(code, &y, &e)?;
    fill_key(&mut rep, ci, code, kx);

    let (pbar_m, pdbar_m) = mixed_marginals(cfg, &p)?;
    let code_rate = code.rate();
    let exponent = e_joint(code_rate, &pbar_m, &pdbar_m)?.value;
    let key_error_exact = bank.prob_outside(ci, &pbar_m)?;
    rep.bounds = Some(SessionBounds {
        exponent,
        fidelity: fidelity_bound(n as u64, exponent, cfg.d as u32).min(1.0),
        key_error_exact,
        union_exact: key_error_exact + bank.prob_outside(ci, &pdbar_m)?,
        leakage: leakage_bound(n as u64, exponent, code_rate, cfg.d as u32)?,
        estimation_failure_exponent: Some(sel.failure_exponent),
    });
    Ok(rep)
}

fn check_alphabet(cfg: &ProtocolConfig, p: &JointDist) -> Result<()> {
    if p.alphabet() != cfg.d as usize {
        return Err(invalid(format!(
            "attack is on d = {}, protocol on d = {}",
            p.alphabet(),
            cfg.d
        )));
    }
    Ok(())
}

fn fill_key(rep: &mut SessionReport, ci: usize, code: &CssCode, kx: KeyExchange) {
    rep.outcome = Outcome::Completed;
    rep.code_index = Some(ci);
    rep.k = code.k();
    rep.kappa = code.kappa();
    rep.syndrome = kx.syndrome;
    rep.sigma = kx.sigma;
    rep.sigma_bob = kx.sigma_bob;
    rep.agreement = Some(kx.agreement);
    rep.residual_in_gamma_prime = Some(kx.in_gamma_prime);
}

/// Inverse of a permutation in the [`Word::permute`] convention.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

pub fn run_modified_bb84(
    cfg: &ProtocolConfig,
    attack: &AttackModel,
    bank: &CodeBank,
) -> Result<SessionReport> {
    cfg.validate()?;
    let p = attack.dist()?;
    check_alphabet(cfg, &p)?;
    let t = simulate_transcript(cfg, &p);
    let mut part = stream_rng(cfg.seed, streams::PARTITION);
    let mut sift: Vec<usize> = (0..cfg.m).filter(|&i| t.a[i] == t.b[i]).collect();
    let mut rep = SessionReport::blank(cfg, sift.len());
    if cfg.d == 2 && sift.len() % 2 == 1 {
        let drop = part.random_range(0..sift.len());
        sift.remove(drop);
        rep.disregarded = 1;
    }
    let big_m = sift.len();
    let (zeros, ones): (Vec<usize>, Vec<usize>) = sift.iter().partition(|&&i| t.a[i] == 0);
    let n_raw = big_m as i64 - 2 * ones.len() as i64;
    if n_raw <= 0 || n_raw as usize == big_m {
        rep.estimation = big_m;
        return Ok(rep.stop(Outcome::Abort, "code length n ≤ 0 or n = M"));
    }
    let mut shuffled = zeros.clone();
    shuffled.shuffle(&mut part);
    let mut x_est: Vec<usize> = shuffled[..ones.len()].to_vec();
    let mut code_pos: Vec<usize> = shuffled[ones.len()..].to_vec();
    x_est.sort_unstable();
    code_pos.sort_unstable();
    let mut est_pos = x_est.clone();
    est_pos.extend(&ones);
    est_pos.sort_unstable();
    rep.estimation = est_pos.len();

    let est = estimate_channel(&t, &est_pos);
    rep.estimate = Some(est.clone());
    let chosen = chosen_rate_modified(cfg.gamma, &est.p_u, &est.p_w, cfg.d as u32)?;
    rep.selected_rate = chosen.rate;
    if chosen.abort {
        rep.dropped = code_pos.len();
        return Ok(rep.stop(Outcome::Abort, "chosen rate R ≤ 0"));
    }
    let Some(n) = bank.bucket_for(cfg.d, code_pos.len()) else {
        rep.dropped = code_pos.len();
        return Ok(rep.stop(Outcome::CodebankMiss, "no bank length fits the code digits"));
    };
    rep.surplus = code_pos.len() - n;
    rep.dropped = rep.surplus;
    code_pos.truncate(n);
    rep.n = n;
    let Some(ci) = bank.smallest_k_at_least(cfg.d, n, chosen.rate) else {
        rep.dropped += n;
        rep.n = 0;
        return Ok(rep.stop(Outcome::CodebankMiss, "no bank code with k ≥ nR"));
    };
    let available: Vec<usize> = bank.codes().filter(|c| c.d() == cfg.d && c.n() == n).map(|c| c.k()).collect();
    debug_assert_eq!(min_code_size(n, chosen.rate, &available), Some(bank.code(ci).k()));

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(cfg.seed, streams::PERMUTATION));
    let inv = invert_permutation(&perm);
    // Syndromes against π(g_j) are syndromes of π⁻¹(y) against g_j, so the
    // exchange runs in the base code's coordinates.
    let y = Word::new(cfg.d, digits_at(&t.sent, &code_pos))?.permute(&inv)?;
    let e = Word::new(cfg.d, key_errors(&t, &code_pos))?.permute(&inv)?;
    let code = bank.code(ci);
    let kx = exchange_key(code, &y, &e)?;
    fill_key(&mut rep, ci, code, kx);

    let (bar, dbar) = p.marginals();
    let lambda = x_est.len() as u64;
    let alpha = lambda as f64 / (n as u64 + lambda) as f64;
    let exponent = e1(cfg.gamma, alpha, cfg.d as u32)?;
    let key_error_exact = bank.prob_outside(ci, &bar)?;
    rep.bounds = Some(SessionBounds {
        exponent,
        fidelity: joint1_bound(n as u64, n as u64 + lambda, exponent, cfg.d as u32)?.min(1.0),
        key_error_exact,
        union_exact: key_error_exact + bank.prob_outside(ci, &dbar)?,
        leakage: modified_leakage(n as u64, cfg.m as u64, exponent, cfg.gamma, code.rate(), cfg.d as u32)?,
        estimation_failure_exponent: None,
    });
    Ok(rep)
}

/// `4d^d|P_n|³|P_N|³d^{−nE1}` with `N = (M+n)/2`, unclamped.
pub fn joint1_bound(n: u64, big_n: u64, e1: f64, d: u32) -> Result<f64> {
    let dd = d as usize;
    let pn = num_types(n, dd)? as f64;
    let pbig = num_types(big_n, dd)? as f64;
    let df = d as f64;
    Ok(4.0 * df.powi(d as i32) * pn.powi(3) * pbig.powi(3) * df.powf(-(n as f64) * e1))
}

/// `d^{−nE1 + o(m)}` with `o(m) = 3log_d 2 + d + 6(d−1)log_d m + log_d[m(γ+1)]`.
fn modified_leakage(n: u64, m: u64, e1: f64, gamma: f64, rate: f64, d: u32) -> Result<LeakageBound> {
    let ln_d = (d as f64).ln();
    let mf = m as f64;
    let o = 3.0 * 2f64.ln() / ln_d
        + d as f64
        + 6.0 * (d as f64 - 1.0) * mf.ln() / ln_d
        + (mf * (gamma + 1.0)).ln() / ln_d;
    let raw = (d as f64).powf(-(n as f64) * e1 + o);
    let cap = n as f64 * rate;
    let informative = raw < cap;
    Ok(LeakageBound {
        raw,
        reported: if informative { raw } else { cap },
        informative,
    })
}

/// Convenience for tests and the CLI: the true marginal pair
/// `(P̄_M, P̿_M)` of the mixed channel seen by BB84 code digits.
pub fn mixed_marginals(cfg: &ProtocolConfig, p: &JointDist) -> Result<(Dist, Dist)> {
    let r = cfg.r();
    let (bar, dbar) = p.marginals();
    Ok((bar.mix(&dbar.flip(), r)?, dbar.mix(&bar, r)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn bank() -> &'static CodeBank {
        static BANK: OnceLock<CodeBank> = OnceLock::new();
        BANK.get_or_init(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            CodeBank::generate(2, &[4, 8, 12, 16], &mut rng, 100).unwrap()
        })
    }

    #[test]
    fn attack_grammar() {
        let p = AttackModel::parse("dephasing:0.03", 2).unwrap().dist().unwrap();
        assert_eq!(p.table(), &[0.97, 0.03, 0.0, 0.0]);
        let p = AttackModel::parse("flip:0.1", 3).unwrap().dist().unwrap();
        assert!((p.get(1, 0) - 0.05).abs() < 1e-15 && (p.get(2, 0) - 0.05).abs() < 1e-15);
        let p = AttackModel::parse("depolarizing:0.3", 2).unwrap().dist().unwrap();
        assert!((p.get(1, 1) - 0.1).abs() < 1e-15);
        assert!(AttackModel::parse("identity", 2).is_ok());
        assert!(AttackModel::parse("bogus:1", 2).is_err());
        assert!(AttackModel::parse("dephasing:1.5", 2).is_err());
    }

    #[test]
    fn noiseless_bb84_agrees() {
        let attack = AttackModel::parse("identity", 2).unwrap();
        for seed in 0..5 {
            let cfg = ProtocolConfig {
                seed,
                m: 2000,
                ..ProtocolConfig::default()
            };
            let rep = run_bb84(&cfg, &attack, bank()).unwrap();
            assert_eq!(rep.outcome, Outcome::Completed, "{:?}", rep.reason);
            assert_eq!(rep.agreement, Some(true));
            assert_eq!(rep.accounted(), cfg.m);
            let est = rep.estimate.unwrap();
            assert_eq!(est.p_u.counts()[1], 0);
            assert_eq!(est.p_w.counts()[1], 0);
        }
    }

    #[test]
    fn x_flips_show_up_in_the_z_estimate() {
        let attack = AttackModel::Pauli(JointDist::point_mass(2, 1, 0).unwrap());
        let cfg = ProtocolConfig { m: 1000, ..ProtocolConfig::default() };
        let p = attack.dist().unwrap();
        let t = simulate_transcript(&cfg, &p);
        let est_pos: Vec<usize> = (0..cfg.m).filter(|&i| t.a[i] == t.b[i]).collect();
        let est = estimate_channel(&t, &est_pos);
        assert_eq!(est.p_u.counts()[0], 0);
        assert_eq!(est.p_w.counts()[1], 0);
    }

    #[test]
    fn modified_noiseless_agrees() {
        let attack = AttackModel::parse("identity", 2).unwrap();
        let cfg = ProtocolConfig {
            mode: Mode::Modified,
            p_a: 0.25,
            p_b: 0.25,
            gamma: 0.1,
            m: 400,
            ..ProtocolConfig::default()
        };
        let rep = run_modified_bb84(&cfg, &attack, bank()).unwrap();
        assert_eq!(rep.outcome, Outcome::Completed, "{:?}", rep.reason);
        assert_eq!(rep.agreement, Some(true));
        assert_eq!(rep.accounted(), cfg.m);
    }

    #[test]
    fn agreement_matches_gamma_prime() {
        let attack = AttackModel::parse("dephasing:0.2", 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let code = bank().code(bank().largest_k_at_most(2, 8, 0.5).unwrap());
        for _ in 0..200 {
            let y = Word::new(2, (0..8).map(|_| rng.random_range(0..2)).collect()).unwrap();
            let e = Word::new(2, (0..8).map(|_| rng.random_bool(0.2) as u8).collect()).unwrap();
            let kx = exchange_key(code, &y, &e).unwrap();
            assert_eq!(kx.agreement, kx.in_gamma_prime);
        }
        let _ = attack;
    }
}
