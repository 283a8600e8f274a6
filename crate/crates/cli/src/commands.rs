use std::path::PathBuf;

use serde_json::json;

use cssqkd::exponents::{
    achievable_rates, e_cond, e_gv, e_joint, estar_sweep, zero_crossings,
};
use cssqkd::oracle::suite::run_suite;
use cssqkd::oracle::{random_string, sampling_tail_check};
use cssqkd::protocol::codebank::default_lengths;
use cssqkd::protocol::{monte_carlo, stream_rng, streams, AttackModel, CodeBank, Mode, ProtocolConfig};
use cssqkd::typesys::{Dist, JointDist};

use crate::config::{parse_grid, parse_list, Resolver};
use crate::output::{cell, config_comment, config_json, emit, json_text};
use crate::{Cli, CliError, Command};

pub const CODEBANK_ENV: &str = "CSSQKD_CODEBANK";

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let res = Resolver::new(cli.config.as_deref())?;
    let out = res.opt::<String>("out", cli.out.as_ref().map(|p| p.display().to_string()))?.map(PathBuf::from);
    let text = match &cli.command {
        Command::Exponents(a) => exponents(&res, a)?,
        Command::Rates(a) => rates(&res, a)?,
        Command::Codegen(a) => codegen(&res, a)?,
        Command::Simulate(a) => simulate(&res, a)?,
        Command::Verify(a) => return verify(&res, a, out),
        Command::SampleBound(a) => return sample_bound(&res, a, out),
    };
    emit(out.as_deref(), &text)
}

fn dist_arg(s: &str, d: u32, what: &str) -> Result<Dist, CliError> {
    let v: Vec<f64> = parse_list(s, what)?;
    if v.len() != d as usize {
        return Err(CliError::Usage(format!("{what} needs {d} entries, got {}", v.len())));
    }
    Ok(Dist::new(v)?)
}

fn exponents(res: &Resolver, a: &crate::ExponentsArgs) -> Result<String, CliError> {
    let d = res.get("d", a.d, 2)?;
    let p_text = res
        .opt("p", a.p.clone())?
        .ok_or_else(|| CliError::Usage("--p is required".into()))?;
    let p = dist_arg(&p_text, d, "--p")?;
    let p2 = match res.opt("p2", a.p2.clone())? {
        Some(s) => dist_arg(&s, d, "--p2")?,
        None => p.clone(),
    };
    let channel = match res.opt("channel", a.channel.clone())? {
        Some(s) => AttackModel::parse(&s, d as u8)?.dist()?,
        None => JointDist::product(&p, &p2)?,
    };
    let channel1 = match res.opt("channel1", a.channel1.clone())? {
        Some(s) => AttackModel::parse(&s, d as u8)?.dist()?,
        None => channel.clone(),
    };
    let grid = parse_grid(&res.get("Rgrid", a.r_grid.clone(), "0..1:0.01".to_string())?)?;
    let variants: Vec<String> = parse_list(&res.get("variants", a.variants.clone(), "estar,joint,gv,cond".into())?, "variant")?;
    if let Some(bad) = variants.iter().find(|v| !["estar", "joint", "gv", "cond"].contains(&v.as_str())) {
        return Err(CliError::Usage(format!("unknown variant {bad}")));
    }
    res.finish()?;
    let want = |v: &str| variants.iter().any(|x| x == v);
    let gv = want("gv") && d == 2;

    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    if want("estar") {
        let sweep = estar_sweep(&grid, &p)?;
        columns.push(("estar[log_d]".into(), sweep.iter().map(|e| e.value).collect()));
        for i in 0..d as usize {
            columns.push((
                format!("estar_argmin_q{i}[prob]"),
                sweep.iter().map(|e| e.argmin[0].get(i)).collect(),
            ));
        }
    }
    if want("joint") {
        let v = grid
            .iter()
            .map(|&r| Ok(e_joint(r, &p, &p2)?.value))
            .collect::<Result<_, CliError>>()?;
        columns.push(("e_joint[log_d]".into(), v));
    }
    if gv {
        let v = grid
            .iter()
            .map(|&r| Ok(e_gv(r, &channel)?.value))
            .collect::<Result<_, CliError>>()?;
        columns.push(("e_gv[bits]".into(), v));
    }
    if want("cond") {
        let v = grid
            .iter()
            .map(|&r| Ok(e_cond(r, &channel, &channel1)?.value))
            .collect::<Result<_, CliError>>()?;
        columns.push(("e_cond[log_d]".into(), v));
    }

    let mut s = config_comment(&res.resolved());
    s.push_str("# estar   = min_Q D(Q||p) + (1/2)|1 - 2H(Q) - R|+\n");
    s.push_str("# e_joint = min(estar(R,p), estar(R,p2))\n");
    if gv {
        s.push_str("# e_gv    = min D(Q||P) over joints Q with 1 - 2h2(Q1(1)+Q2(1)) <= R or Q1(1)+Q2(1) >= 1\n");
    } else if want("gv") {
        s.push_str("# e_gv omitted: defined for d = 2 only\n");
    }
    s.push_str("# e_cond  = min over both marginal pairs of min_{Q0,Q1} [D(Q0||p0) + D(Q1||p1) + |1 - H(Q0) - H(Q1) - R|+]/2\n");
    s.push_str("# estar_argmin_q* = the minimizing Q of estar\n");
    s.push_str("# entropies and divergences in log base d; R in d-ary digits per code digit\n");
    s.push_str("R[log_d]");
    for (name, _) in &columns {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (i, r) in grid.iter().enumerate() {
        s.push_str(&cell(*r));
        for (_, v) in &columns {
            s.push(',');
            s.push_str(&cell(v[i]));
        }
        s.push('\n');
    }
    Ok(s)
}

/// Per-basis digit error law: no error with probability 1 − q, the rest
/// spread evenly.
fn marginal(q: f64, d: usize) -> Result<Dist, CliError> {
    let mut v = vec![q / (d - 1) as f64; d];
    v[0] = 1.0 - q;
    Ok(Dist::new(v)?)
}

fn family_channel(family: &str, q: f64, d: usize) -> Result<JointDist, CliError> {
    let m = marginal(q, d)?;
    Ok(match family {
        "flips" => JointDist::product(&m, &m)?,
        "dephasing" => JointDist::product(&Dist::point_mass(d, 0)?, &m)?,
        "depolarizing" => {
            // Total weight p over the d²−1 non-identity errors gives each
            // marginal error probability q = p·d/(d+1).
            let p = q * (d + 1) as f64 / d as f64;
            if p > 1.0 {
                return Err(CliError::Usage(format!("q = {q} too large for a depolarizing channel")));
            }
            JointDist::from_fn(d, |s, t| {
                if (s, t) == (0, 0) {
                    1.0 - p
                } else {
                    p / (d * d - 1) as f64
                }
            })?
        }
        _ => return Err(CliError::Usage(format!("unknown channel family {family}"))),
    })
}

fn rates(res: &Resolver, a: &crate::RatesArgs) -> Result<String, CliError> {
    let d = res.get("d", a.d, 2)?;
    cssqkd::gfvec::check_prime(d)?;
    let family = res.get("channel", a.channel.clone(), "flips".to_string())?;
    let qs = parse_grid(&res.get("qgrid", a.qgrid.clone(), "0..0.2:0.005".to_string())?)?;
    let pa = res.get("pa", a.pa, 0.5)?;
    let pb = res.get("pb", a.pb, 0.5)?;
    let pc = res.get("pc", a.pc, 0.5)?;
    res.finish()?;
    let du = d as usize;
    let base = d as f64;
    let mut rows = Vec::new();
    for &q in &qs {
        let ch = family_channel(&family, q, du)?;
        let rep = achievable_rates(pa, pb, pc, &ch)?;
        let sym = (1.0 - pc) * rep.sift * (1.0 - 2.0 * marginal(q, du)?.entropy(base));
        rows.push((q, rep, sym));
    }
    let rq: Vec<f64> = rows.iter().map(|r| r.1.r_qkd).collect();
    let rs: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let mut s = config_comment(&res.resolved());
    s.push_str("# q = per-basis digit error probability; rates in d-ary key digits per transmitted digit\n");
    s.push_str("# r_qkd = (1-p_c)*sift*(1 - 2max{H(Pbar_M), H(Pdbar_M)})\n");
    s.push_str("# r_symmetric = (1-p_c)*sift*(1 - 2H(1-q, q/(d-1), ...)); for d = 2 this is 1 - 2h2(q) scaled\n");
    s.push_str("# r_mixture = (1 - 2max{H} at r = 1/2)/4; r_cond = (1-p_c)*2min(sift halves)*(1 - H(Pbar) - H(Pdbar));\n");
    s.push_str("# r_cond_code = 1 - H(Pbar) - H(Pdbar) with no sifting factor; r_cond_halved = (1-p_c)*sift*r_cond_code/2\n");
    s.push_str("# r_modified = (1-p_a-p_b)(1 - 2max{H(Pbar),H(Pdbar)}); r_gv = (1 - 2h2(e_x+e_z))/4 (d = 2)\n");
    for x in zero_crossings(&qs, &rq) {
        s.push_str(&format!("# zero crossing r_qkd: q = {}\n", cell(x)));
    }
    for x in zero_crossings(&qs, &rs) {
        s.push_str(&format!("# zero crossing r_symmetric: q = {}\n", cell(x)));
    }
    s.push_str("q[prob],r_qkd[digits/digit],r_symmetric[digits/digit],r_mixture[digits/digit],r_cond[digits/digit],r_cond_code[digits/digit],r_cond_halved[digits/digit],r_modified[digits/digit],r_gv[bits/bit]\n");
    for (q, rep, sym) in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            cell(q),
            cell(rep.r_qkd),
            cell(sym),
            cell(rep.r_mixture),
            cell(rep.r_cond),
            cell(rep.r_cond_code),
            cell(rep.r_cond_halved),
            cell(rep.r_modified),
            rep.r_gv.map(cell).unwrap_or_default()
        ));
    }
    Ok(s)
}

fn codegen(res: &Resolver, a: &crate::CodegenArgs) -> Result<String, CliError> {
    let d = res.get("d", a.d, 2)?;
    let d8 = cssqkd::gfvec::check_prime(d)?;
    let lengths: Vec<usize> = match res.opt("lengths", a.lengths.clone())? {
        Some(s) => parse_list(&s, "length")?,
        None => default_lengths(d8),
    };
    let tries = res.get("tries", a.tries, 200)?;
    let seed = res.get("seed", a.seed, 0)?;
    res.finish()?;
    let bank = CodeBank::generate(d8, &lengths, &mut stream_rng(seed, streams::CODE), tries)?;
    let mut s = String::new();
    for line in config_comment(&res.resolved()).lines() {
        s.push_str(line);
        s.push('\n');
    }
    s.push_str(&bank.to_text());
    Ok(s)
}

fn load_bank(path: Option<PathBuf>, d: u8, seed: u64) -> Result<(CodeBank, String), CliError> {
    let path = path.or_else(|| std::env::var_os(CODEBANK_ENV).map(PathBuf::from));
    match path {
        Some(p) => Ok((CodeBank::load(&p)?, p.display().to_string())),
        None => {
            let bank = CodeBank::generate(d, &default_lengths(d), &mut stream_rng(seed, streams::CODE), 200)?;
            Ok((bank, format!("generated(d={d}, seed={seed})")))
        }
    }
}

fn simulate(res: &Resolver, a: &crate::SimulateArgs) -> Result<String, CliError> {
    let defaults = ProtocolConfig::default();
    let mode = match res.get("mode", a.mode.clone(), "bb84".to_string())?.as_str() {
        "bb84" => Mode::Bb84,
        "modified" => Mode::Modified,
        other => return Err(CliError::Usage(format!("unknown mode {other}"))),
    };
    let d = res.get("d", a.d, 2)?;
    let d8 = cssqkd::gfvec::check_prime(d)?;
    let cfg = ProtocolConfig {
        d: d8,
        m: res.get("m", a.m, defaults.m)?,
        p_a: res.get("pa", a.pa, defaults.p_a)?,
        p_b: res.get("pb", a.pb, defaults.p_b)?,
        p_c: res.get("pc", a.pc, defaults.p_c)?,
        mode,
        eps: res.get("eps", a.eps, defaults.eps)?,
        gamma: res.get("gamma", a.gamma, defaults.gamma)?,
        e_target: res.get("Etarget", a.e_target, defaults.e_target)?,
        seed: res
            .opt("seed", a.seed)?
            .ok_or_else(|| CliError::Usage("--seed is required for simulate".into()))?,
    };
    let attack_spec = res.get("attack", a.attack.clone(), "identity".to_string())?;
    let trials = res.get("trials", a.trials, 100)?;
    let bank_path = res.opt("codebank", a.codebank.as_ref().map(|p| p.display().to_string()))?;
    res.finish()?;
    cfg.validate()?;
    let attack = AttackModel::parse(&attack_spec, d8)?;
    let (bank, bank_label) = load_bank(bank_path.map(PathBuf::from), d8, cfg.seed)?;
    let report = monte_carlo(&cfg, &attack, &bank, trials, true)?;
    let mut config = config_json(&res.resolved());
    config["codebank_source"] = json!(bank_label);
    let value = json!({
        "config": config,
        "protocol": serde_json::to_value(&cfg).expect("config serializes"),
        "error_law": attack.dist()?.table(),
        "report": serde_json::to_value(&report).expect("report serializes"),
    });
    Ok(json_text(value))
}

fn verify(res: &Resolver, a: &crate::VerifyArgs, out: Option<PathBuf>) -> Result<(), CliError> {
    let quick = res.flag("quick", a.quick)?;
    let seed = res.get("seed", a.seed, 0)?;
    let json_path = res.opt("json", a.json.as_ref().map(|p| p.display().to_string()))?;
    res.finish()?;
    let report = run_suite(quick, seed, None)?;
    for c in &report.checks {
        eprintln!("{}: {:.2}s", c.name, c.seconds);
    }
    emit(out.as_deref(), &report.table())?;
    if let Some(p) = json_path {
        let v = json!({
            "config": config_json(&res.resolved()),
            "suite": serde_json::to_value(&report).expect("report serializes"),
        });
        emit(Some(PathBuf::from(p).as_path()), &json_text(v))?;
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Failed(failed.join(", ")))
    }
}

fn sample_bound(res: &Resolver, a: &crate::SampleBoundArgs, out: Option<PathBuf>) -> Result<(), CliError> {
    let big_n = res.get("N", a.big_n, 40)?;
    let n = res.get("n", a.n, big_n / 2)?;
    let alphabet = res.get("alphabet", a.alphabet, 2)?;
    let source = res.get("source", a.source.clone(), "halves".to_string())?;
    let eps = parse_grid(&res.get("eps", a.eps.clone(), "0..2:0.1".to_string())?)?;
    let trials = res.get("trials", a.trials, 100_000)?;
    let seed = res.get("seed", a.seed, 0)?;
    res.finish()?;
    if !(2..=255).contains(&alphabet) {
        return Err(CliError::Usage("alphabet size must lie in 2..=255".into()));
    }
    let y: Vec<u8> = match source.as_str() {
        "halves" => (0..big_n).map(|i| (i * alphabet / big_n) as u8).collect(),
        "zeros" => vec![0; big_n],
        "random" => random_string(big_n, alphabet, &mut stream_rng(seed, streams::ALICE)),
        digits => {
            let v: Option<Vec<u8>> = digits.chars().map(|c| c.to_digit(36).map(|x| x as u8)).collect();
            let v = v.ok_or_else(|| CliError::Usage(format!("bad source string {digits:?}")))?;
            if v.len() != big_n {
                return Err(CliError::Usage(format!("source has {} symbols, N = {big_n}", v.len())));
            }
            v
        }
    };
    let rep = sampling_tail_check(&source, &y, alphabet, n, &eps, trials, seed)?;
    let mut s = config_comment(&res.resolved());
    s.push_str("# Pr{||P_Y' - P_Y''||_1 >= eps} for a uniform n-subset Y' of the N-string and its complement Y''\n");
    s.push_str("# bound = 2|P_N|^2 d^(-N (g(a) eps)^2 / K_d), a = (N-n)/N, K_d = 2 ln d, d = alphabet size\n");
    s.push_str("# lower = one-sided 99% Wilson lower edge; violated = lower > bound\n");
    s.push_str("eps[l1],exceed[count],trials[count],frequency[prob],lower[prob],bound[prob],violated\n");
    for r in &rep.rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            cell(r.eps),
            r.exceed,
            r.trials,
            cell(r.frequency),
            cell(r.lower),
            cell(r.bound),
            r.violated
        ));
    }
    emit(out.as_deref(), &s)?;
    if rep.passed {
        Ok(())
    } else {
        Err(CliError::Failed("empirical tail above the bound".into()))
    }
}
