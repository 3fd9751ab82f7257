//! Verification suites. Each suite compares independent computational paths
//! for one parameter set and returns flat, serializable checks.

use std::fmt;
use std::str::FromStr;

use rug::ops::Pow;
use rug::{Float, Rational};
use serde::Serialize;

use crate::classical::{meixner_poly, monic_meixner_sequence};
use crate::error::{Error, Result};
use crate::exactnum::{factorial_q, float_to_string, pochhammer_q, pow_rational};
use crate::genseries::{extract_coefficients, verify_exp_kummer_identity};
use crate::params::MeixnerParams;
use crate::poly::Poly;
use crate::recurrence::{apply_lowering, build_monic_sequence, PolySeq};
use crate::su11::{
    build_rep, build_s, coherent_eigen_deviation, extract_phat, generating_identity_deviation, three_point_deviation,
    verify_identities,
};
use crate::weights::{
    biorthogonality, functional_apply, functional_exact, phi_series, verify_d_orthogonality, weight_r1_rational,
    weight_w, EntryStatus, KPolicy, Requirement,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Recurrence,
    Genfunc,
    Operator,
    Lowering,
    Biorth,
    Weights,
    Identities,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Recurrence,
        Suite::Genfunc,
        Suite::Operator,
        Suite::Lowering,
        Suite::Biorth,
        Suite::Weights,
        Suite::Identities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Recurrence => "recurrence",
            Suite::Genfunc => "genfunc",
            Suite::Operator => "operator",
            Suite::Lowering => "lowering",
            Suite::Biorth => "biorth",
            Suite::Weights => "weights",
            Suite::Identities => "identities",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::Domain(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NonStabilized,
    /// Reported for information; does not affect the verdict.
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub r: usize,
    pub beta: String,
    pub c: String,
    pub status: Status,
    /// Largest deviation seen, `"0"` for exact agreement.
    pub deviation: String,
    pub detail: String,
}

/// Sizes and tolerances shared by all suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub n_max: usize,
    pub k_max: usize,
    /// Operator truncation `N`.
    pub size: usize,
    pub prec: u32,
    pub tol: f64,
    /// Cap on `k` for the functional sums of the d-orthogonality check. The
    /// weights decay like `exp(-a k^(2/3))` for `r = 2`, so 8192 is needed at
    /// `tol = 1e-25`.
    pub k_cap: usize,
    /// Cap on `K` for the biorthogonality doubling.
    pub biorth_cap: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { n_max: 9, k_max: 20, size: 14, prec: 256, tol: 1e-25, k_cap: 8192, biorth_cap: 16384 }
    }
}

/// `{1, 2} x {1, 3/2, 5/2} x {1/4, 1/2}`.
pub fn default_grid() -> Vec<MeixnerParams> {
    let mut out = Vec::new();
    for r in [1, 2] {
        for beta in [(1, 1), (3, 2), (5, 2)] {
            for c in [(1, 4), (1, 2)] {
                out.push(MeixnerParams::from_ratios(r, beta, c).expect("grid values are valid"));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub failed: usize,
    pub non_stabilized: usize,
    pub pass: bool,
}

impl VerifyReport {
    fn from_checks(checks: Vec<Check>) -> Self {
        let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
        let non_stabilized = checks.iter().filter(|c| c.status == Status::NonStabilized).count();
        VerifyReport { pass: failed == 0 && non_stabilized == 0, checks, failed, non_stabilized }
    }
}

/// Runs `suites` on every parameter set, in order.
pub fn run(suites: &[Suite], grid: &[MeixnerParams], cfg: &SuiteConfig) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    for &suite in suites {
        for p in grid {
            checks.extend(run_one(suite, p, cfg)?);
        }
    }
    Ok(VerifyReport::from_checks(checks))
}

pub fn run_one(suite: Suite, p: &MeixnerParams, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Checks { suite, p, list: Vec::new() };
    match suite {
        Suite::Recurrence => recurrence_suite(&mut out, cfg),
        Suite::Genfunc => genfunc_suite(&mut out, cfg),
        Suite::Operator => operator_suite(&mut out, cfg)?,
        Suite::Lowering => lowering_suite(&mut out, cfg),
        Suite::Biorth => biorth_suite(&mut out, cfg)?,
        Suite::Weights => weights_suite(&mut out, cfg)?,
        Suite::Identities => identities_suite(&mut out, cfg)?,
    }
    Ok(out.list)
}

struct Checks<'a> {
    suite: Suite,
    p: &'a MeixnerParams,
    list: Vec<Check>,
}

impl Checks<'_> {
    fn push(
        &mut self,
        name: impl Into<String>,
        status: Status,
        deviation: impl Into<String>,
        detail: impl Into<String>,
    ) {
        self.list.push(Check {
            suite: self.suite,
            name: name.into(),
            r: self.p.r,
            beta: self.p.beta.to_string(),
            c: self.p.c.to_string(),
            status,
            deviation: deviation.into(),
            detail: detail.into(),
        });
    }

    /// Exact comparison: the detail lists the first mismatching index, if any.
    fn exact(&mut self, name: &str, mismatches: Vec<String>, checked: usize) {
        if mismatches.is_empty() {
            self.push(name, Status::Pass, "0", format!("{checked} exact comparisons"));
        } else {
            let first = mismatches[0].clone();
            self.push(
                name,
                Status::Fail,
                "nonzero",
                format!("{} of {checked} differ, first at {first}", mismatches.len()),
            );
        }
    }

    fn bounded(&mut self, name: &str, dev: &Float, tol: f64, detail: String) {
        let status = if *dev < tol { Status::Pass } else { Status::Fail };
        self.push(name, status, float_to_string(dev, 6), detail);
    }
}

fn bool_status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn monic(p: &MeixnerParams, n_max: usize) -> PolySeq {
    build_monic_sequence(&p.recurrence_data(), n_max)
}

fn recurrence_suite(out: &mut Checks, cfg: &SuiteConfig) {
    let p = out.p;
    let seq = monic(p, cfg.n_max);
    let bad: Vec<String> = (0..=cfg.n_max)
        .filter(|&n| seq.entries[n].degree() != Some(n) || seq.entries[n].leading().map_or(true, |l| *l != 1))
        .map(|n| format!("n={n}"))
        .collect();
    out.exact("monic of exact degree n", bad, cfg.n_max + 1);

    if cfg.n_max >= 1 {
        let shift = if p.r == 1 { Rational::from(&p.beta * &p.c) / Rational::from(&p.c - 1) } else { p.beta.clone() };
        let expect = Poly::from_coeffs(vec![shift, Rational::from(1)]);
        let bad = if seq.entries[1] == expect { vec![] } else { vec![seq.entries[1].to_string()] };
        out.exact("first-degree member", bad, 1);
    }

    if p.r == 1 {
        let classical = monic_meixner_sequence(cfg.n_max, &p.beta, &p.c);
        let bad = (0..=cfg.n_max).filter(|&n| classical[n] != seq.entries[n]).map(|n| format!("n={n}")).collect();
        out.exact("classical monic Meixner recurrence", bad, cfg.n_max + 1);
    }
}

fn genfunc_suite(out: &mut Checks, cfg: &SuiteConfig) {
    let p = out.p;
    let seq = monic(p, cfg.n_max);
    let series = extract_coefficients(&p.structure(), &p.beta, cfg.n_max);
    let bad = (0..=cfg.n_max).filter(|&n| series.entries[n] != seq.entries[n]).map(|n| format!("n={n}")).collect();
    out.exact("generating series = recurrence", bad, cfg.n_max + 1);

    let ek = verify_exp_kummer_identity(&p.beta, 8, 8);
    let bad = ek.mismatches.iter().map(|(a, b)| format!("t^{a} z^{b}")).collect();
    out.exact("exp(t) 0F1(;beta;zt) = sum 1F1(-m;beta;-z) t^m/m!", bad, ek.coefficients_checked);

    if p.r == 1 {
        let ratio = &p.c / Rational::from(&p.c - 1);
        let mut scale = Rational::from(1);
        let mut bad = Vec::new();
        for n in 0..=cfg.n_max {
            if n > 0 {
                scale *= &ratio;
            }
            let full = &scale * pochhammer_q(&p.beta, n as u64);
            if series.entries[n] != meixner_poly(n, &p.beta, &p.c).scale(&full) {
                bad.push(format!("n={n}"));
            }
        }
        out.exact("reduction to the classical Meixner generating function", bad, cfg.n_max + 1);
    }
}

fn operator_suite(out: &mut Checks, cfg: &SuiteConfig) -> Result<()> {
    let p = out.p;
    let q = p.structure().poly();
    let rep = build_rep(&p.beta, cfg.size)?;
    let me = build_s(&rep, &q)?;
    let seq = monic(p, cfg.size - 1);
    let mut bad = Vec::new();
    for n in 0..cfg.size {
        for k in 0..cfg.size {
            if extract_phat(&me, n, k)? != seq.entries[n].eval(&Rational::from(k as u64)) {
                bad.push(format!("n={n} k={k}"));
            }
        }
    }
    out.exact("P̂_n(k) from S = recurrence", bad, cfg.size * cfg.size);

    let bad = (0..cfg.size)
        .filter(|&k| me.psi_scaled[(k, 0)].clone() * factorial_q(k as u64) != 1)
        .map(|k| format!("k={k}"))
        .collect();
    out.exact("psi_0k = sqrt((beta)_k / k!)", bad, cfg.size);

    let dev = generating_identity_deviation(&q, &p.beta, &Rational::from((1, 4)), 6, 100, cfg.prec)?;
    out.bounded("generating identity at z = 1/4, k <= 6", &dev, cfg.tol, "100 terms in n".into());
    let dev = three_point_deviation(&q, &p.beta, 8, 8, cfg.prec)?;
    out.bounded("three-point relation, n, k <= 8", &dev, cfg.tol, String::new());

    Ok(())
}

fn lowering_suite(out: &mut Checks, cfg: &SuiteConfig) {
    let p = out.p;
    let seq = monic(p, cfg.n_max);
    let mut bad = Vec::new();
    if !apply_lowering(&seq.entries[0], &p.beta).is_zero() {
        bad.push("n=0".to_string());
    }
    for n in 1..=cfg.n_max {
        let factor = Rational::from(n as u64) * (Rational::from(n as u64 - 1) + &p.beta);
        if apply_lowering(&seq.entries[n], &p.beta) != seq.entries[n - 1].scale(&factor) {
            bad.push(format!("n={n}"));
        }
    }
    out.exact("sigma P̂_n = n(n+beta-1) P̂_{n-1}", bad, cfg.n_max + 1);
}

fn biorth_suite(out: &mut Checks, cfg: &SuiteConfig) -> Result<()> {
    let p = out.p;
    let seq = monic(p, cfg.n_max);
    let mut bad = Vec::new();
    for m in 0..=cfg.n_max {
        for n in 0..=cfg.n_max {
            let v = functional_exact(m, &seq.entries[n], p);
            let expect = if n == m { factorial_q(m as u64) * pochhammer_q(&p.beta, m as u64) } else { Rational::new() };
            if v != expect {
                bad.push(format!("m={m} n={n}"));
            }
        }
    }
    out.exact("exact moments: sum_k psi_nk phi_mk = delta_nm", bad, (cfg.n_max + 1) * (cfg.n_max + 1));

    let n_max = cfg.n_max.min(6);
    let entries = biorthogonality(p, n_max, cfg.tol, 64, cfg.biorth_cap, cfg.prec)?;
    let unstable = entries.iter().filter(|e| !e.stabilized).count();
    let failed = entries.iter().filter(|e| e.stabilized && !e.pass).count();
    let k_used = entries.iter().map(|e| e.k_used).max().unwrap_or(0);
    let worst = entries
        .iter()
        .filter_map(|e| e.deviations.last().map(|d| d.1.clone()))
        .max_by(|a, b| parse_dev(a).partial_cmp(&parse_dev(b)).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or_default();
    let status = if failed > 0 {
        Status::Fail
    } else if unstable > 0 {
        Status::NonStabilized
    } else {
        Status::Pass
    };
    out.push(
        format!("truncated sum_k psi_nk phi_mk = delta_nm, n, m <= {n_max}"),
        status,
        worst,
        format!("{} pairs, K up to {k_used}, {unstable} not stabilized by K = {}", entries.len(), cfg.biorth_cap),
    );
    Ok(())
}

fn parse_dev(s: &str) -> f64 {
    s.parse().unwrap_or(f64::INFINITY)
}

fn weights_suite(out: &mut Checks, cfg: &SuiteConfig) -> Result<()> {
    let p = out.p;
    let prec = cfg.prec;
    if p.r == 1 {
        let bad = (0..=cfg.k_max)
            .filter_map(|k| match weight_r1_rational(k, p) {
                Ok(v) if v == p.c.clone().pow(k as i32) => None,
                _ => Some(format!("k={k}")),
            })
            .collect();
        out.exact("r = 1: hypergeometric weight factor = c^k", bad, cfg.k_max + 1);
        let lead = pow_rational(&Rational::from(1 - &p.c), &p.beta, prec);
        let mut worst = Float::with_val(prec, 0);
        for k in 0..=cfg.k_max {
            let w = weight_w(0, k, p, prec)?.value;
            let expect = Float::with_val(prec, &lead * Float::with_val(prec, p.c.clone().pow(k as i32)));
            let rel = Float::with_val(prec, (w - &expect) / expect).abs();
            if rel > worst {
                worst = rel;
            }
        }
        out.bounded("r = 1: w_0k = (1-c)^beta c^k", &worst, cfg.tol, format!("k <= {}", cfg.k_max));
    }

    let mut worst = Float::with_val(prec, 0);
    for i in 0..p.d() {
        for k in 0..=cfg.k_max {
            let w = weight_w(i, k, p, prec)?.value;
            let mass = Float::with_val(prec, pochhammer_q(&p.beta, k as u64) / factorial_q(k as u64));
            let phi = phi_series(i, k, p, prec)?.value;
            let scale = Float::with_val(prec, phi.abs_ref()).max(&Float::with_val(prec, 1e-300));
            let rel = Float::with_val(prec, (w * mass - &phi) / scale).abs();
            if rel > worst {
                worst = rel;
            }
        }
    }
    out.bounded(
        "hypergeometric weights = single sum",
        &worst,
        cfg.tol,
        format!("i < {}, k <= {}, relative", p.d(), cfg.k_max),
    );

    let policy = KPolicy { cap: cfg.k_cap, tail_tol: cfg.tol * 1e-3, tail_stretch: 8, prec };
    let one = functional_apply(0, &Poly::one(), p, &policy);
    match one {
        Ok(v) => {
            let dev = Float::with_val(prec, &v.value - 1u32).abs();
            out.bounded("L_0(1) = 1", &dev, cfg.tol, format!("K = {}", v.k_used));
        }
        Err(Error::NonStabilized(msg)) => out.push("L_0(1) = 1", Status::NonStabilized, "-", msg),
        Err(e) => return Err(e),
    }

    let seq = monic(p, cfg.n_max);
    let d = p.d();
    let mut bad = Vec::new();
    let mut checked = 0;
    for i in 0..d {
        let mut m = 0;
        while m * d + i <= cfg.n_max {
            for n in (m * d + i)..=cfg.n_max {
                let v = functional_exact(i, &seq.entries[n].mul_x_pow(m), p);
                checked += 1;
                let ok = if n == m * d + i { v != 0 } else { v == 0 };
                if !ok {
                    bad.push(format!("i={i} m={m} n={n}"));
                }
            }
            m += 1;
        }
    }
    out.exact("exact moments: L_i(x^m P̂_n) = 0 for n > md+i, nonzero at n = md+i", bad, checked);

    let rep = verify_d_orthogonality(p, cfg.n_max, cfg.tol, &policy)?;
    let failed = rep.entries.iter().filter(|e| e.status == EntryStatus::Fail).count();
    let zeros = rep.entries.iter().filter(|e| e.requirement == Requirement::Zero).count();
    let status = if failed > 0 {
        Status::Fail
    } else if rep.non_stabilized > 0 {
        Status::NonStabilized
    } else {
        Status::Pass
    };
    let k_used = rep.entries.iter().map(|e| e.k_used).max().unwrap_or(0);
    out.push(
        "adaptive sums: L_i(x^m P̂_n) < tol for n > md+i, > 10 tol at n = md+i",
        status,
        rep.max_zero_abs.clone(),
        format!(
            "{} entries ({zeros} required zeros), {} not stabilized by K = {}, K up to {k_used}, smallest diagonal {}",
            rep.entries.len(),
            rep.non_stabilized,
            cfg.k_cap,
            rep.min_diagonal_abs
        ),
    );
    Ok(())
}

fn identities_suite(out: &mut Checks, cfg: &SuiteConfig) -> Result<()> {
    let p = out.p;
    let rep = build_rep(&p.beta, cfg.size)?;
    let report = verify_identities(&rep, &p.structure().poly())?;
    for c in report.checks {
        let status = if c.diagnostic { Status::Info } else { bool_status(c.pass) };
        out.push(c.name, status, c.max_deviation, format!("leading {} x {} block", c.block, c.block));
    }
    let size = cfg.size.max(40);
    let mut worst = Float::with_val(cfg.prec, 0);
    for z in [Rational::from((1, 4)), Rational::from(1)] {
        let zf = Float::with_val(cfg.prec, &z);
        for f in [Poly::x(), Poly::from_i64(&[0, 0, 1])] {
            let dev = coherent_eigen_deviation(&zf, &p.beta, size, &f);
            if dev > worst {
                worst = dev;
            }
        }
    }
    out.bounded(
        "F(J-)|z> = F(z)|z> for F = t, t^2; z = 1/4, 1",
        &worst,
        cfg.tol.min(1e-30),
        format!("{size} components, relative"),
    );
    Ok(())
}
