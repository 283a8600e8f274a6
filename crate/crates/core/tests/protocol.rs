use std::sync::OnceLock;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cssqkd::gfvec::Word;
use cssqkd::protocol::*;
use cssqkd::typesys::{Dist, JointDist};

fn bank() -> &'static CodeBank {
    static BANK: OnceLock<CodeBank> = OnceLock::new();
    BANK.get_or_init(|| {
        let mut rng = stream_rng(0, streams::CODE);
        CodeBank::generate(2, &default_lengths(2), &mut rng, 200).unwrap()
    })
}

fn ternary_bank() -> &'static CodeBank {
    static BANK: OnceLock<CodeBank> = OnceLock::new();
    BANK.get_or_init(|| {
        let mut rng = stream_rng(0, streams::CODE);
        CodeBank::generate(3, &default_lengths(3), &mut rng, 200).unwrap()
    })
}

fn attack(spec: &str) -> AttackModel {
    AttackModel::parse(spec, 2).unwrap()
}

fn cfg(seed: u64) -> ProtocolConfig {
    ProtocolConfig {
        seed,
        ..ProtocolConfig::default()
    }
}

fn modified(seed: u64, p: f64, m: usize) -> ProtocolConfig {
    ProtocolConfig {
        mode: Mode::Modified,
        p_a: p,
        p_b: p,
        m,
        gamma: 0.15,
        seed,
        ..ProtocolConfig::default()
    }
}

#[test]
fn sifting_keeps_half_the_digits() {
    let c = ProtocolConfig { m: 20_000, ..cfg(3) };
    let t = simulate_transcript(&c, &attack("identity").dist().unwrap());
    let sifted = (0..c.m).filter(|&i| t.a[i] == t.b[i]).count() as f64;
    let sigma = (0.25 / c.m as f64).sqrt();
    assert!((sifted / c.m as f64 - 0.5).abs() < 3.0 * sigma);
    // Noiseless sifted digits arrive intact.
    assert!((0..c.m).filter(|&i| t.a[i] == t.b[i]).all(|i| t.sent[i] == t.received[i]));
}

#[test]
fn dephasing_shows_up_in_the_x_estimate() {
    let q = 0.05;
    let rep = run_bb84(&cfg(5), &attack(&format!("dephasing:{q}")), bank()).unwrap();
    let est = rep.estimate.unwrap();
    let lam = est.lambda_p as f64;
    let freq = est.p_w.counts()[1] as f64 / lam;
    assert!((freq - q).abs() < 3.0 * (q * (1.0 - q) / lam).sqrt(), "{freq}");
    assert_eq!(est.p_u.counts()[1], 0);
}

#[test]
fn flips_show_up_in_the_z_estimate() {
    let q = 0.04;
    let rep = run_bb84(&cfg(6), &attack(&format!("flip:{q}")), bank()).unwrap();
    let est = rep.estimate.unwrap();
    let lam = est.lambda as f64;
    let freq = est.p_u.counts()[1] as f64 / lam;
    assert!((freq - q).abs() < 3.0 * (q * (1.0 - q) / lam).sqrt(), "{freq}");
    assert_eq!(est.p_w.counts()[1], 0);
}

#[test]
fn heavy_noise_aborts() {
    let b = Dist::bernoulli(0.15).unwrap();
    let noisy = AttackModel::Pauli(JointDist::product(&b, &b).unwrap());
    let aborts = (0..20)
        .filter(|&s| run_bb84(&cfg(s), &noisy, bank()).unwrap().outcome == Outcome::Abort)
        .count();
    assert!(aborts >= 19, "{aborts}/20");
}

#[test]
fn noiseless_sessions_agree() {
    for s in 0..10 {
        let rep = run_bb84(&cfg(s), &attack("identity"), bank()).unwrap();
        assert_eq!(rep.outcome, Outcome::Completed);
        assert_eq!(rep.agreement, Some(true));
        assert_eq!(rep.sigma, rep.sigma_bob);
    }
}

#[test]
fn modified_code_share_tracks_the_sifting_ratio() {
    let p = 0.25;
    let r = p * p / (p * p + (1.0 - p) * (1.0 - p));
    let (m, seeds) = (4000, 20);
    let mut total = 0.0;
    let mut count = 0.0;
    for s in 0..seeds {
        let rep = run_modified_bb84(&modified(s, p, m), &attack("identity"), bank()).unwrap();
        let big_m = (rep.sifted - rep.disregarded) as f64;
        total += (big_m - rep.estimation as f64) / big_m;
        count += big_m;
        assert_ne!(rep.agreement, Some(false));
    }
    let mean = total / seeds as f64;
    // n/M = 1 − 2·ones/M with ones ~ Binomial(M, r).
    let sigma = 2.0 * (r * (1.0 - r) / count).sqrt();
    assert!((mean - (1.0 - 2.0 * r)).abs() < 3.0 * sigma, "{mean}");
}

#[test]
fn permuting_code_and_error_keeps_the_verdict() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let code = bank().code(bank().largest_k_at_most(2, 12, 0.5).unwrap());
    let n = code.n();
    for _ in 0..200 {
        let y = Word::new(2, (0..n).map(|_| rng.random_range(0..2)).collect()).unwrap();
        let e = Word::new(2, (0..n).map(|_| rng.random_bool(0.15) as u8).collect()).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let base = exchange_key(code, &y, &e).unwrap();
        // π(C) with the transported transversal π(Γ), run in base coordinates.
        let inv = invert_permutation(&perm);
        let moved = exchange_key(
            code,
            &y.permute(&perm).unwrap().permute(&inv).unwrap(),
            &e.permute(&perm).unwrap().permute(&inv).unwrap(),
        )
        .unwrap();
        assert_eq!(base.agreement, moved.agreement);
        // Re-deriving Γ in permuted coordinates changes only tie-breaks,
        // and agreement still matches membership there.
        let pc = code.permuted(&perm).unwrap();
        let kx = exchange_key(&pc, &y.permute(&perm).unwrap(), &e.permute(&perm).unwrap()).unwrap();
        assert_eq!(kx.agreement, kx.in_gamma_prime);
    }
}

#[test]
fn near_half_bases_abort_the_modified_protocol() {
    let mut aborts = 0;
    for s in 0..100 {
        let rep = run_modified_bb84(&modified(s, 0.49, 60), &attack("identity"), bank()).unwrap();
        if rep.outcome == Outcome::Abort {
            aborts += 1;
        }
        let big_m = (rep.sifted - rep.disregarded) as i64;
        let ones = rep.estimation as i64 / 2;
        if big_m - 2 * ones <= 0 {
            assert_eq!(rep.outcome, Outcome::Abort);
        }
        assert_eq!(rep.accounted(), rep.m);
    }
    assert!(aborts > 0);
}

#[test]
fn single_trial_equals_a_session() {
    let c = cfg(42);
    let a = attack("dephasing:0.02");
    let mc = monte_carlo(&c, &a, bank(), 1, true).unwrap();
    let one = run_bb84(&c, &a, bank()).unwrap();
    assert_eq!(
        serde_json::to_string(&mc.sessions[0]).unwrap(),
        serde_json::to_string(&one).unwrap()
    );
}

#[test]
fn monte_carlo_is_reproducible() {
    let c = ProtocolConfig { m: 2000, ..cfg(9) };
    let a = attack("dephasing:0.03");
    let x = serde_json::to_vec(&monte_carlo(&c, &a, bank(), 6, true).unwrap()).unwrap();
    let y = serde_json::to_vec(&monte_carlo(&c, &a, bank(), 6, true).unwrap()).unwrap();
    assert_eq!(x, y);
}

#[test]
fn keys_are_uniform() {
    // Chi-square on the first two key digits over noiseless modified
    // sessions; 3 degrees of freedom, 99.9% critical value 16.27.
    let mut cells = [0u64; 4];
    let mut trials = 0;
    for s in 0..400 {
        let rep = run_modified_bb84(&modified(s, 0.25, 500), &attack("identity"), bank()).unwrap();
        if rep.sigma.len() >= 2 {
            cells[(rep.sigma[0] * 2 + rep.sigma[1]) as usize] += 1;
            trials += 1;
        }
    }
    assert!(trials >= 300, "{trials}");
    let expect = trials as f64 / 4.0;
    let chi: f64 = cells.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    assert!(chi < 16.27, "{cells:?} χ² = {chi}");
}

#[test]
fn disagreement_does_not_fall_with_noise() {
    let mut prev_lo: Option<f64> = None;
    for q in [0.0, 0.03, 0.06] {
        let c = ProtocolConfig { m: 4000, ..cfg(100) };
        let rep = monte_carlo(&c, &attack(&format!("dephasing:{q}")), bank(), 40, false).unwrap();
        let (lo, hi) = rep.disagreement.interval;
        if let Some(prev) = prev_lo {
            assert!(hi >= prev, "q={q}: disagreement dropped below the previous band");
        }
        prev_lo = Some(lo);
    }
}

#[test]
fn dephasing_sessions_stay_under_their_bounds() {
    let c = ProtocolConfig { m: 4000, ..cfg(0) };
    let rep = monte_carlo(&c, &attack("dephasing:0.03"), bank(), 60, false).unwrap();
    assert_eq!(rep.identity_violations, 0);
    assert!(rep.completed.count > 0);
    let freq_lo = rep.disagreement.interval.0;
    assert!(freq_lo <= rep.mean_fidelity_bound);
    // The mean exact key-error probability is the expected frequency.
    let (lo, hi) = rep.disagreement.interval;
    assert!(lo <= rep.mean_key_error_exact && rep.mean_key_error_exact <= hi);
}

#[test]
fn ternary_sessions_run() {
    let c = ProtocolConfig { d: 3, m: 3000, ..cfg(4) };
    let rep = run_bb84(&c, &AttackModel::parse("identity", 3).unwrap(), ternary_bank()).unwrap();
    assert_eq!(rep.accounted(), rep.m);
    if rep.outcome == Outcome::Completed {
        assert_eq!(rep.agreement, Some(true));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn every_digit_is_accounted_for(
        modified_mode in any::<bool>(),
        m in 40usize..800,
        pa in 0.1f64..0.49,
        pb in 0.1f64..0.49,
        pc in 0.1f64..0.9,
        q in 0.0f64..0.1,
        seed in any::<u64>(),
    ) {
        let c = ProtocolConfig {
            mode: if modified_mode { Mode::Modified } else { Mode::Bb84 },
            m,
            p_a: pa,
            p_b: pb,
            p_c: pc,
            gamma: 0.1,
            seed,
            ..ProtocolConfig::default()
        };
        let rep = run_session(&c, &attack(&format!("depolarizing:{q}")), bank()).unwrap();
        prop_assert_eq!(rep.accounted(), m);
        prop_assert_eq!(rep.sifted + rep.discarded, m);
        if rep.outcome == Outcome::Completed {
            prop_assert_eq!(rep.agreement, rep.residual_in_gamma_prime);
        } else {
            prop_assert_eq!(rep.n, 0);
        }
    }
}
