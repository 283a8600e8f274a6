//! Repeated sessions with aggregate frequencies.

use rayon::prelude::*;
use serde::Serialize;

use super::{run_session, AttackModel, CodeBank, Outcome, ProtocolConfig, SessionReport};
use crate::error::{invalid, Result};

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    pub count: u64,
    pub trials: u64,
    pub frequency: f64,
    /// 95% Wilson interval.
    pub interval: (f64, f64),
}

impl Aggregate {
    pub fn new(count: u64, trials: u64) -> Self {
        Self {
            count,
            trials,
            frequency: if trials == 0 { 0.0 } else { count as f64 / trials as f64 },
            interval: wilson_interval(count, trials, 1.959_963_984_540_054),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub completed: Aggregate,
    pub aborted: Aggregate,
    pub codebank_miss: Aggregate,
    /// Key disagreement among completed sessions.
    pub disagreement: Aggregate,
    /// Completed sessions where agreement and Γ′ membership differ; always 0.
    pub identity_violations: u64,
    pub mean_key_length: f64,
    pub mean_code_length: f64,
    /// Over sessions that reached rate selection.
    pub mean_selected_rate: f64,
    /// The code every completed session used, if they agree.
    pub common_code: Option<usize>,
    /// Means over completed sessions of the attached per-session values.
    /// The mean exact key-error probability is the expected disagreement
    /// frequency, since codes are chosen from digits disjoint from the
    /// code digits.
    pub mean_key_error_exact: f64,
    pub mean_union_exact: f64,
    pub mean_fidelity_bound: f64,
    pub mean_leakage_reported: f64,
    pub mean_estimation_failure_exponent: Option<f64>,
    pub sessions: Vec<SessionReport>,
}

/// Runs sessions with seeds `seed, seed+1, …` in parallel, keeping them in
/// seed order.
pub fn monte_carlo(
    cfg: &ProtocolConfig,
    attack: &AttackModel,
    bank: &CodeBank,
    trials: u64,
    keep_sessions: bool,
) -> Result<MonteCarloReport> {
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let sessions: Vec<SessionReport> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let c = ProtocolConfig {
                seed: cfg.seed.wrapping_add(t),
                ..cfg.clone()
            };
            run_session(&c, attack, bank)
        })
        .collect::<Result<_>>()?;
    let count = |o: Outcome| sessions.iter().filter(|s| s.outcome == o).count() as u64;
    let done: Vec<&SessionReport> = sessions
        .iter()
        .filter(|s| s.outcome == Outcome::Completed)
        .collect();
    let disagree = done.iter().filter(|s| s.agreement == Some(false)).count() as u64;
    let violations = done
        .iter()
        .filter(|s| s.agreement != s.residual_in_gamma_prime)
        .count() as u64;
    let mean = |f: &dyn Fn(&SessionReport) -> f64| {
        if done.is_empty() {
            0.0
        } else {
            done.iter().map(|s| f(s)).sum::<f64>() / done.len() as f64
        }
    };
    let first = done.first().and_then(|s| s.code_index);
    let common = first.filter(|&c| done.iter().all(|s| s.code_index == Some(c)));
    let bound = |f: &dyn Fn(&super::SessionBounds) -> f64| {
        mean(&|s| s.bounds.as_ref().map(f).unwrap_or(f64::NAN))
    };
    let selected: Vec<f64> = sessions
        .iter()
        .filter(|s| s.selection.is_some() || (s.mode == super::Mode::Modified && s.estimate.is_some()))
        .map(|s| s.selected_rate)
        .collect();
    let mean_selected_rate = if selected.is_empty() {
        0.0
    } else {
        selected.iter().sum::<f64>() / selected.len() as f64
    };
    let failure_exponents: Vec<f64> = done
        .iter()
        .filter_map(|s| s.bounds.as_ref()?.estimation_failure_exponent)
        .collect();
    Ok(MonteCarloReport {
        trials,
        completed: Aggregate::new(done.len() as u64, trials),
        aborted: Aggregate::new(count(Outcome::Abort), trials),
        codebank_miss: Aggregate::new(count(Outcome::CodebankMiss), trials),
        disagreement: Aggregate::new(disagree, done.len() as u64),
        identity_violations: violations,
        mean_key_length: mean(&|s| s.k as f64),
        mean_code_length: mean(&|s| s.n as f64),
        mean_selected_rate,
        common_code: common,
        mean_key_error_exact: bound(&|b| b.key_error_exact),
        mean_union_exact: bound(&|b| b.union_exact),
        mean_fidelity_bound: bound(&|b| b.fidelity),
        mean_leakage_reported: bound(&|b| b.leakage.reported),
        mean_estimation_failure_exponent: (!failure_exponents.is_empty())
            .then(|| failure_exponents.iter().sum::<f64>() / failure_exponents.len() as f64),
        sessions: if keep_sessions { sessions } else { Vec::new() },
    })
}
