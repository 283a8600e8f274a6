//! The verification suite behind `cssqkd verify`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::*;
use crate::exponents::{e_joint, fidelity_bound};
use crate::gfvec::LinearCode;
use crate::protocol::{run_bb84, run_modified_bb84, CodeBank, Mode, Outcome, ProtocolConfig};
use crate::qudit::{channel_to_dist_choi, random_unitary, spmixed_check, switch3_deviation};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Wall time; left out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub quick: bool,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{:<width$}  {}  {}\n",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.detail
            ));
        }
        out.push_str(if self.passed { "all checks passed\n" } else { "some checks FAILED\n" });
        out
    }
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    Check {
        name: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Ensemble cases as `(d, n, κ, ensemble)`.
pub const ENSEMBLE_CASES: [(u8, usize, usize, Ensemble); 5] = [
    (3, 4, 1, Ensemble::SelfOrthogonal),
    (2, 4, 1, Ensemble::ContainsAllOnes),
    (2, 4, 2, Ensemble::ContainsAllOnes),
    (2, 6, 1, Ensemble::ContainsAllOnes),
    (2, 6, 2, Ensemble::ContainsAllOnes),
];

pub fn ensemble_check(cases: &[(u8, usize, usize, Ensemble)]) -> Check {
    timed("ensemble symmetry", || {
        let mut parts = Vec::new();
        let mut ok = true;
        for &(d, n, kappa, ens) in cases {
            let census = enumerate_self_orthogonal(d, n, kappa, ens, CAP)?;
            let r = verify_group_symmetry(&census)?;
            ok &= r.passed;
            let consts: Vec<String> = r
                .classes
                .iter()
                .filter(|c| c.size > 0)
                .map(|c| match c.constant {
                    Some(v) => format!("N{}={v}", c.u),
                    None => format!("N{}∈[{},{}]", c.u, c.min, c.max),
                })
                .collect();
            parts.push(format!(
                "(d={d},n={n},κ={kappa}) |A|={} {} ratio {:.4}≤{:.4}",
                r.ensemble_size,
                consts.join(","),
                r.max_ratio,
                r.ratio_bound
            ));
        }
        Ok((ok, parts.join("; ")))
    })
}

/// One row of the fidelity-bound comparison.
#[derive(Clone, Debug, Serialize)]
pub struct FidelityRow {
    pub n: usize,
    pub k: usize,
    pub q: f64,
    pub exponent: f64,
    pub bound: f64,
    pub failure: f64,
    /// Upper edge compared with the bound: the exact value, or the one-sided
    /// 99% Wilson lower edge for Monte Carlo.
    pub compared: f64,
    pub exact: bool,
    pub violated: bool,
}

/// Exact failure for `n ≤ exact_limit`, Monte Carlo otherwise, for every
/// bank code of the given lengths under dephasing.
pub fn fidelity_rows(
    bank: &CodeBank,
    lengths: &[usize],
    qs: &[f64],
    exact_limit: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<FidelityRow>> {
    let mut rows = Vec::new();
    for (i, code) in bank.codes().enumerate() {
        if code.d() != 2 || !lengths.contains(&code.n()) || code.k() == 0 {
            continue;
        }
        let n = code.n();
        for &q in qs {
            let p = JointDist::product(&crate::typesys::Dist::point_mass(2, 0)?, &crate::typesys::Dist::bernoulli(q)?)?;
            let (bar, dbar) = p.marginals();
            let exponent = e_joint(code.rate(), &bar, &dbar)?.value;
            let bound = fidelity_bound(n as u64, exponent, 2);
            let (failure, compared, exact) = if n <= exact_limit {
                let f = exact_failure_probability(code, &p, CAP)?
                    .joint
                    .ok_or_else(|| invalid("joint enumeration over the cap"))?;
                (f, f, true)
            } else {
                let agg = mc_failure_probability(code, &p, trials, seed.wrapping_add(i as u64))?;
                let lower = wilson_interval(agg.count, agg.trials, Z99_ONE_SIDED).0;
                (agg.frequency, lower, false)
            };
            rows.push(FidelityRow {
                n,
                k: code.k(),
                q,
                exponent,
                bound,
                failure,
                compared,
                exact,
                violated: compared > bound,
            });
        }
    }
    Ok(rows)
}

pub fn fidelity_check(bank: &CodeBank, lengths: &[usize], trials: u64, seed: u64) -> Check {
    timed("fidelity bound", || {
        let rows = fidelity_rows(bank, lengths, &[0.01, 0.03, 0.05], 10, trials, seed)?;
        if rows.is_empty() {
            return Ok((false, "no bank codes at the requested lengths".into()));
        }
        let violations = rows.iter().filter(|r| r.violated).count();
        let tightest = rows
            .iter()
            .map(|r| r.bound / r.failure.max(1e-300))
            .fold(f64::INFINITY, f64::min);
        Ok((
            violations == 0,
            format!("{} cases, {violations} violations, min bound/failure {tightest:.3e}", rows.len()),
        ))
    })
}

pub fn channel_check(count: usize, seed: u64) -> Check {
    timed("trace formula and switch3", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for d in [2usize, 3] {
            for i in 0..count {
                let ch = KrausChannel::random(d, 1 + i % 4, &mut rng)?;
                let p = channel_to_dist(&ch)?;
                worst = worst.max(switch3_deviation(&ch)?);
                let choi = channel_to_dist_choi(&ch)?;
                let w = random_unitary(ch.ops().len(), &mut rng);
                let mixed = channel_to_dist(&ch.remixed(&w)?)?;
                for ((a, b), c) in p.table().iter().zip(choi.table()).zip(mixed.table()) {
                    worst = worst.max((a - b).abs()).max((a - c).abs());
                }
            }
        }
        Ok((worst <= 1e-10, format!("{count} channels per d, max deviation {worst:.2e}")))
    })
}

pub fn spmixed_suite() -> Check {
    timed("coset mixture identity", || {
        let c = LinearCode::from_strs(2, &["1111"])?;
        let mut worst: f64 = 0.0;
        for (x, v) in [("0000", "0000"), ("1000", "0000"), ("0000", "1100"), ("1000", "0110")] {
            worst = worst.max(spmixed_check(&c, &Word::parse(2, x)?, &Word::parse(2, v)?)?);
        }
        Ok((worst <= 1e-10, format!("max entry deviation {worst:.2e}")))
    })
}

/// The transmission-identity instances: two binary Pauli cases in either
/// basis and a random ternary channel.
pub fn identity_reports(bank: &CodeBank, trials: u64, seed: u64) -> Result<Vec<(String, IdentityReport)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c8 = bank
        .largest_k_at_most(2, 8, 0.5)
        .map(|i| bank.code(i).clone())
        .ok_or_else(|| invalid("bank lacks a binary n = 8 code"))?;
    let ternary = match bank.largest_k_at_most(3, 6, 0.7) {
        Some(i) => bank.code(i).clone(),
        None => crate::csscode::search_balanced(3, 6, 1, &mut rng, 200)?,
    };
    let cases = vec![
        ("flip:0.05 n=8 Z".to_string(), c8.clone(), AttackModel::parse("flip:0.05", 2)?, Basis::Z),
        ("dephasing:0.05 n=8 X".to_string(), c8, AttackModel::parse("dephasing:0.05", 2)?, Basis::X),
        (
            "random channel d=3 n=6 Z".to_string(),
            ternary,
            AttackModel::Kraus(KrausChannel::random(3, 2, &mut rng)?),
            Basis::Z,
        ),
    ];
    cases
        .into_iter()
        .enumerate()
        .map(|(i, (label, code, attack, basis))| {
            Ok((label, decoding_error_identity_check(&code, &attack, basis, trials, seed + i as u64)?))
        })
        .collect()
}

pub fn identity_check(bank: &CodeBank, trials: u64, seed: u64) -> Check {
    timed("transmission identity", || {
        let reps = identity_reports(bank, trials, seed)?;
        let ok = reps.iter().all(|(_, r)| r.within && r.mismatches == 0);
        let detail = reps
            .iter()
            .map(|(l, r)| format!("{l}: {:.5} vs {:.5} ±{:.5}", r.frequency, r.exact, 4.0 * r.half_width))
            .collect::<Vec<_>>()
            .join("; ");
        Ok((ok, detail))
    })
}

/// Source strings and sizes for the tail check, as `(label, string,
/// alphabet, n)`.
pub fn tail_cases(seed: u64) -> Vec<(String, Vec<u8>, usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut half: Vec<u8> = vec![0; 20];
    half.extend(vec![1; 20]);
    vec![
        ("20 zeros + 20 ones".into(), half, 2, 20),
        ("all zeros N=40".into(), vec![0; 40], 2, 10),
        ("alternating ternary N=30".into(), (0..30).map(|i| (i % 3) as u8).collect(), 3, 10),
        ("random binary N=60".into(), random_string(60, 2, &mut rng), 2, 15),
        ("random ternary N=30".into(), random_string(30, 3, &mut rng), 3, 10),
        ("random ternary N=90".into(), random_string(90, 3, &mut rng), 3, 45),
    ]
}

pub fn eps_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.1).collect()
}

pub fn tail_check(trials: u64, seed: u64) -> Check {
    timed("random sampling tails", || {
        let mut ok = true;
        let mut closest = f64::INFINITY;
        let cases = tail_cases(seed);
        for (i, (label, y, s, n)) in cases.iter().enumerate() {
            let r = sampling_tail_check(label, y, *s, *n, &eps_grid(), trials, seed + i as u64)?;
            ok &= r.passed;
            for row in &r.rows {
                closest = closest.min(row.bound - row.lower);
            }
        }
        Ok((ok, format!("{} sources × 21 ε, min(bound − lower edge) {closest:.3}", cases.len())))
    })
}

pub fn protocol_check(bank: &CodeBank, sessions: u64, seed: u64) -> Check {
    timed("noiseless sessions", || {
        let attack = AttackModel::parse("identity", 2)?;
        let mut agreed = 0;
        let mut completed = 0;
        for s in 0..sessions {
            for mode in [Mode::Bb84, Mode::Modified] {
                let cfg = ProtocolConfig {
                    seed: seed + s,
                    m: 2000,
                    mode,
                    p_a: if mode == Mode::Bb84 { 0.5 } else { 0.25 },
                    p_b: if mode == Mode::Bb84 { 0.5 } else { 0.25 },
                    gamma: 0.15,
                    ..ProtocolConfig::default()
                };
                let rep = match mode {
                    Mode::Bb84 => run_bb84(&cfg, &attack, bank)?,
                    Mode::Modified => run_modified_bb84(&cfg, &attack, bank)?,
                };
                if rep.accounted() != cfg.m {
                    return Ok((false, format!("accounting off at seed {}", cfg.seed)));
                }
                if rep.outcome == Outcome::Completed {
                    completed += 1;
                    agreed += (rep.agreement == Some(true)) as u64;
                }
            }
        }
        Ok((
            completed > 0 && agreed == completed,
            format!("{agreed}/{completed} completed sessions agreed"),
        ))
    })
}

/// The bank the suite uses when none is supplied.
pub fn suite_bank(seed: u64) -> Result<CodeBank> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut codes: Vec<_> = CodeBank::generate(2, &[4, 8, 12, 16], &mut rng, 200)?.codes().cloned().collect();
    codes.extend(CodeBank::generate(3, &[4, 6], &mut rng, 200)?.codes().cloned());
    Ok(CodeBank::new(codes))
}

pub fn run_suite(quick: bool, seed: u64, bank: Option<&CodeBank>) -> Result<SuiteReport> {
    let owned;
    let bank = match bank {
        Some(b) => b,
        None => {
            owned = suite_bank(seed)?;
            &owned
        }
    };
    let (lengths, mc, channels, identity, tails, sessions): (&[usize], u64, usize, u64, u64, u64) = if quick {
        (&[8], 0, 20, 20_000, 10_000, 5)
    } else {
        (&[8, 12, 16], 1_000_000, 100, 100_000, 100_000, 50)
    };
    let checks = vec![
        ensemble_check(&ENSEMBLE_CASES),
        fidelity_check(bank, lengths, mc, seed),
        channel_check(channels, seed),
        spmixed_suite(),
        identity_check(bank, identity, seed),
        tail_check(tails, seed),
        protocol_check(bank, sessions, seed),
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        quick,
        seed,
        checks,
        passed,
    })
}
