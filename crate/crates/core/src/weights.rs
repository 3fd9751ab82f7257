//! The functional vector `L_0..L_{d-1}`:
//!
//! ```text
//! L_i(f) = sum_{k>=0} w_{ik} (beta)_k / k! f(k)
//! ```
//!
//! `w_{ik}` comes from two reorganizations of the same finite series, the
//! hypergeometric form ([`weight_w`]) and the single sum ([`phi_series`]).
//! Long rows are produced by a recurrence in `k` ([`WeightRow`]) that is
//! checked against the direct formula as it grows.

use rug::{Complete, Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactnum::{
    digits_for_bits, factorial_q, float_to_string, gamma_real, pochhammer_q, pow_rational, sqrt_rational,
    terminating_sum_q, with_adaptive_precision, HypSpec, TrackedSum,
};
use crate::params::MeixnerParams;
use crate::poly::Poly;
use crate::qpoly::StructurePolynomial;
use crate::recurrence::build_monic_sequence;

/// Which variant of the hypergeometric weight formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeightFormula {
    /// Argument `(1-c)/r^r` and a factor `(1-c)^{s/r}` on each residue class `s`.
    Standard,
    /// Argument `(1-c)^{1/r}/r^r` and no per-class factor. Disagrees with the
    /// single sum for `r >= 2`; kept for comparison only.
    RootArgument,
}

/// A floating value together with how it was obtained.
#[derive(Debug, Clone)]
pub struct SeriesValue {
    pub value: Float,
    pub terms: usize,
    pub precision_used: u32,
    pub lost_bits: u32,
}

fn check_index(i: usize, params: &MeixnerParams) -> Result<()> {
    if i >= params.d() {
        return Err(Error::Domain(format!("functional index {i} must be below d = {}", params.d())));
    }
    Ok(())
}

/// `(-1)^i / (r Gamma(beta) sqrt(i! (beta)_i))`.
fn common_prefactor(i: usize, params: &MeixnerParams, prec: u32) -> Result<Float> {
    let gamma_beta = gamma_real(&Float::with_val(prec, &params.beta))?;
    let norm = sqrt_rational(&(factorial_q(i as u64) * pochhammer_q(&params.beta, i as u64)), prec);
    let mut pre = Float::with_val(prec, 1) / (gamma_beta * norm * params.r as u64);
    if i % 2 == 1 {
        pre = -pre;
    }
    Ok(pre)
}

/// `Delta(r, a) = (a/r, (a+1)/r, ..., (a+r-1)/r)`.
fn delta(r: usize, a: &Rational) -> Vec<Rational> {
    (0..r).map(|l| Rational::from(a + l as u64) / r as u64).collect()
}

/// Parameters of the `(r+2)F(2r)` attached to the residue class `s`.
fn class_spec(i: usize, k: usize, s: usize, params: &MeixnerParams) -> (Vec<Rational>, Vec<Rational>) {
    let r = params.r;
    let shift = Rational::from(&params.beta + (s + i) as u64);
    let mut upper = vec![Rational::from(1)];
    upper.extend(delta(r, &Rational::from(s as i64 - k as i64)));
    upper.push(shift / r as u64);
    let mut lower = delta(r, &Rational::from(&params.beta + s as u64));
    lower.extend(delta(r, &Rational::from(s as u64 + 1)));
    (upper, lower)
}

fn weight_at(
    i: usize,
    k: usize,
    params: &MeixnerParams,
    formula: WeightFormula,
    prec: u32,
) -> Result<(Float, u32, usize)> {
    let r = params.r;
    let one_minus_c = Rational::from(1 - &params.c);
    let r_pow = Rational::from(rug::Integer::u_pow_u(r as u32, r as u32).complete());
    let mut sum = TrackedSum::new(prec);
    let mut terms = 0usize;
    for s in 0..r.min(k + 1) {
        let (upper, lower) = class_spec(i, k, s, params);
        let spec = HypSpec::rational(&upper, &lower, Rational::new());
        let len = spec.terminating_length().ok_or(Error::NotTerminating)?;
        terms += len as usize;
        let hyp = match formula {
            WeightFormula::Standard => {
                let z = Rational::from(&one_minus_c / &r_pow);
                Float::with_val(prec, terminating_sum_q(&upper, &lower, &z, len))
            }
            WeightFormula::RootArgument => {
                let z =
                    pow_rational(&one_minus_c, &Rational::from((1, r as u64)), prec) / Float::with_val(prec, &r_pow);
                float_terminating(&upper, &lower, &z, len)
            }
        };
        let coef = pochhammer_q(&Rational::from(-(k as i64)), s as u64)
            / (factorial_q(s as u64) * pochhammer_q(&params.beta, s as u64));
        let arg = Rational::from(&params.beta + (i + s) as u64) / r as u64;
        let mut term = gamma_real(&Float::with_val(prec, &arg))? * Float::with_val(prec, &coef) * hyp;
        if formula == WeightFormula::Standard {
            term *= pow_rational(&one_minus_c, &Rational::from((s as u64, r as u64)), prec);
        }
        sum.add(&term);
    }
    let lost = sum.lost_bits();
    let outer = pow_rational(&one_minus_c, &(Rational::from(&params.beta + i as u64) / r as u64), prec);
    Ok((sum.into_value() * outer * common_prefactor(i, params, prec)?, lost, terms))
}

fn float_terminating(upper: &[Rational], lower: &[Rational], z: &Float, len: u64) -> Float {
    let prec = z.prec();
    let mut acc = Float::with_val(prec, 1);
    for m in (0..len.saturating_sub(1)).rev() {
        let mut ratio = Rational::from(1);
        for a in upper {
            ratio *= Rational::from(a + m);
        }
        for b in lower {
            ratio /= Rational::from(b + m);
        }
        ratio /= m + 1;
        acc *= Float::with_val(prec, &ratio) * z;
        acc += 1;
    }
    acc
}

/// `w_{ik}` from the hypergeometric form, `0 <= i < d`. The series terminates
/// for every residue class, and with rational data each `(r+2)F(2r)` is summed
/// exactly; precision is raised until the combination over classes keeps
/// `prec` accurate bits.
pub fn weight_w(i: usize, k: usize, params: &MeixnerParams, prec: u32) -> Result<SeriesValue> {
    weight_w_with(WeightFormula::Standard, i, k, params, prec)
}

pub fn weight_w_with(
    formula: WeightFormula,
    i: usize,
    k: usize,
    params: &MeixnerParams,
    prec: u32,
) -> Result<SeriesValue> {
    check_index(i, params)?;
    let mut failure = None;
    let run = with_adaptive_precision(prec, |p| match weight_at(i, k, params, formula, p) {
        Ok((v, lost, terms)) => ((v, terms), lost),
        Err(e) => {
            failure = Some(e);
            ((Float::new(p), 0), 0)
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (value, terms) = run.value;
    Ok(SeriesValue { value, terms, precision_used: run.precision_used, lost_bits: run.lost_bits })
}

/// For `r = 1` the weight is `(1-c)^beta` times a rational number: the
/// `3F2(1, -k, beta; beta, 1; 1-c)` of the hypergeometric form with the Gamma
/// ratio equal to one. Returns that rational factor.
pub fn weight_r1_rational(k: usize, params: &MeixnerParams) -> Result<Rational> {
    if params.r != 1 {
        return Err(Error::Domain(format!("closed form needs r = 1, got r = {}", params.r)));
    }
    let (upper, lower) = class_spec(0, k, 0, params);
    let len = HypSpec::rational(&upper, &lower, Rational::new()).terminating_length().ok_or(Error::NotTerminating)?;
    Ok(terminating_sum_q(&upper, &lower, &Rational::from(1 - &params.c), len))
}

fn phi_at(i: usize, k: usize, params: &MeixnerParams, prec: u32) -> Result<(Float, u32)> {
    let r = params.r;
    let one_minus_c = Rational::from(1 - &params.c);
    let step = pow_rational(&one_minus_c, &Rational::from((1, r as u64)), prec);
    // Gamma((m + beta + i)/r) for the r most recent m, advanced by (x)_1 steps
    let mut gammas: Vec<Float> = (0..r.min(k + 1))
        .map(|s| gamma_real(&Float::with_val(prec, Rational::from(&params.beta + (s + i) as u64) / r as u64)))
        .collect::<Result<_>>()?;
    let mut coef = Float::with_val(prec, 1);
    let mut power = Float::with_val(prec, 1);
    let mut sum = TrackedSum::new(prec);
    for m in 0..=k {
        let slot = m % r;
        if m >= r {
            let arg = Rational::from(&params.beta + (m - r + i) as u64) / r as u64;
            gammas[slot] *= Float::with_val(prec, &arg);
        }
        sum.add(&(Float::with_val(prec, &coef * &power) * &gammas[slot]));
        // (-k)_{m+1} / ((m+1)! (beta)_{m+1}) from its predecessor
        let ratio = Rational::from(m as i64 - k as i64) / (Rational::from(&params.beta + m as u64) * (m as u64 + 1));
        coef *= Float::with_val(prec, &ratio);
        power *= &step;
    }
    let lost = sum.lost_bits();
    let outer = pow_rational(&one_minus_c, &(Rational::from(&params.beta + i as u64) / r as u64), prec);
    let mass = Float::with_val(prec, pochhammer_q(&params.beta, k as u64) / factorial_q(k as u64));
    Ok((sum.into_value() * outer * common_prefactor(i, params, prec)? * mass, lost))
}

/// `psi_{0k} phi_{ik} = w_{ik} (beta)_k / k!` from the single sum over
/// `m = 0..k`. Any row index `i >= 0` is accepted: rows `i >= d` are the
/// further rows of `S^-1`, which the biorthogonality check needs.
pub fn phi_series(i: usize, k: usize, params: &MeixnerParams, prec: u32) -> Result<SeriesValue> {
    let mut failure = None;
    let run = with_adaptive_precision(prec, |p| match phi_at(i, k, params, p) {
        Ok(v) => v,
        Err(e) => {
            failure = Some(e);
            (Float::new(p), 0)
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(SeriesValue { value: run.value, terms: k + 1, precision_used: run.precision_used, lost_bits: run.lost_bits })
}

/// Coefficients `rho_j` of `R(y) = y Q'(-y)`, `j = 1..r`.
fn rho(q: &StructurePolynomial) -> Vec<Rational> {
    q.coeffs()
        .iter()
        .enumerate()
        .map(|(idx, ql)| {
            let l = idx + 1;
            let v = Rational::from(ql * l as u64);
            if l % 2 == 0 {
                -v
            } else {
                v
            }
        })
        .collect()
}

/// Coefficients of `u_{n-r} .. u_{n+r}` in the relation satisfied by a row
/// `u_k = w_{ik}`:
///
/// ```text
/// (n - i) u_n - (n + beta) u_{n+1} - sum_j rho_j (Y^j u)_n = 0,
/// (Y u)_n = -n u_{n-1} + (2n + beta) u_n - (n + beta) u_{n+1}.
/// ```
fn relation_row(n: usize, i: usize, beta: &Rational, rho: &[Rational]) -> Vec<Rational> {
    let r = rho.len();
    let width = 2 * r + 1;
    let mut row = vec![Rational::new(); width];
    row[r] += Rational::from(n as i64 - i as i64);
    row[r + 1] -= Rational::from(beta + n as u64);
    let mut cur = vec![Rational::new(); width];
    cur[r] = Rational::from(1);
    for rho_j in rho {
        let mut next = vec![Rational::new(); width];
        for (off, v) in cur.iter().enumerate() {
            if *v == 0 {
                continue;
            }
            let l = Rational::from(n as i64 + off as i64 - r as i64);
            next[off - 1] -= Rational::from(v * &l);
            next[off] += v * (Rational::from(2 * &l) + beta);
            next[off + 1] -= v * (l + beta);
        }
        for (acc, v) in row.iter_mut().zip(&next) {
            *acc -= Rational::from(rho_j * v);
        }
        cur = next;
    }
    row
}

/// One comparison of the recurrence against the direct single sum.
#[derive(Debug, Clone, Serialize)]
pub struct Checkpoint {
    pub k: usize,
    pub relative_error: String,
    pub precision: u32,
}

/// `w_{ik}` and `w_{ik} (beta)_k / k!` for `k = 0..len`, grown on demand.
///
/// Forward recurrence loses bits against the decaying row, so every time the
/// row grows its new last entry is compared with [`phi_series`]; on mismatch
/// the row is recomputed from scratch with the measured loss added.
#[derive(Debug, Clone)]
pub struct WeightRow {
    pub i: usize,
    params: MeixnerParams,
    target: u32,
    work: u32,
    rho: Vec<Rational>,
    weights: Vec<Float>,
    masses: Vec<Float>,
    pub checkpoints: Vec<Checkpoint>,
}

const MAX_RESTARTS: usize = 6;

impl WeightRow {
    pub fn new(i: usize, params: &MeixnerParams, prec: u32) -> Result<Self> {
        let mut row = WeightRow {
            i,
            params: params.clone(),
            target: prec,
            work: prec + 64,
            rho: rho(&params.structure()),
            weights: Vec::new(),
            masses: Vec::new(),
            checkpoints: Vec::new(),
        };
        row.restart(params.r)?;
        Ok(row)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn working_precision(&self) -> u32 {
        self.work
    }

    pub fn weight(&self, k: usize) -> &Float {
        &self.weights[k]
    }

    /// `w_{ik} (beta)_k / k!`.
    pub fn mass(&self, k: usize) -> &Float {
        &self.masses[k]
    }

    fn restart(&mut self, len: usize) -> Result<()> {
        self.weights.clear();
        self.masses.clear();
        for k in 0..self.params.r.min(len.max(1)) {
            let direct = phi_series(self.i, k, &self.params, self.work)?.value;
            self.push_mass(Float::with_val(self.work, direct))?;
        }
        self.extend_raw(len)
    }

    fn push_mass(&mut self, mass: Float) -> Result<()> {
        let k = self.masses.len() as u64;
        let factor = Float::with_val(self.work, factorial_q(k) / pochhammer_q(&self.params.beta, k));
        self.weights.push(Float::with_val(self.work, &mass * factor));
        self.masses.push(mass);
        Ok(())
    }

    fn extend_raw(&mut self, len: usize) -> Result<()> {
        let r = self.params.r;
        let mut mass_factor = if self.weights.is_empty() {
            Float::with_val(self.work, 1)
        } else {
            let k = (self.weights.len() - 1) as u64;
            Float::with_val(self.work, pochhammer_q(&self.params.beta, k) / factorial_q(k))
        };
        while self.weights.len() < len {
            let target = self.weights.len();
            let n = target - r;
            let row = relation_row(n, self.i, &self.params.beta, &self.rho);
            let mut acc = Float::with_val(self.work, 0);
            for (off, coef) in row.iter().enumerate().take(2 * r) {
                if *coef == 0 || n + off < r {
                    continue;
                }
                acc += Float::with_val(self.work, coef) * &self.weights[n + off - r];
            }
            let lead = Float::with_val(self.work, &row[2 * r]);
            if lead.is_zero() {
                return Err(Error::Domain(format!("weight recurrence degenerates at n = {n}")));
            }
            let next = -acc / lead;
            let k = target as u64;
            mass_factor *= Float::with_val(self.work, Rational::from(&self.params.beta + (k - 1)) / k);
            self.masses.push(Float::with_val(self.work, &next * &mass_factor));
            self.weights.push(next);
        }
        Ok(())
    }

    /// Relative error of the last entry against the direct single sum.
    fn check_last(&mut self) -> Result<Float> {
        let k = self.weights.len() - 1;
        let direct = phi_series(self.i, k, &self.params, self.target)?.value;
        let err = Float::with_val(self.target, &self.masses[k] - &direct).abs();
        let rel = if direct.is_zero() { err } else { err / direct.abs() };
        self.checkpoints.push(Checkpoint { k, relative_error: float_to_string(&rel, 6), precision: self.work });
        Ok(rel)
    }

    /// Makes `k_max` available. The row grows by doubling and is validated at
    /// each new end; restarts add the observed bit loss to the working precision.
    pub fn ensure(&mut self, k_max: usize) -> Result<()> {
        let bound = Float::with_val(self.target, 1) >> (self.target as i32 - 8);
        while self.weights.len() <= k_max {
            let len = (self.weights.len() * 2).max(k_max + 1).max(16);
            let mut restarts = 0;
            self.extend_raw(len)?;
            loop {
                let rel = self.check_last()?;
                if rel <= bound {
                    break;
                }
                restarts += 1;
                if restarts > MAX_RESTARTS {
                    return Err(Error::NonStabilized(format!(
                        "weight recurrence row {} still inaccurate at k = {} with {} bits",
                        self.i,
                        len - 1,
                        self.work
                    )));
                }
                let accurate = if rel.is_zero() { 0 } else { (-rel.get_exp().unwrap_or(0)).max(0) as u32 };
                let lost = self.work.saturating_sub(accurate);
                self.work = self.target + 2 * lost + 64;
                self.restart(len)?;
            }
        }
        Ok(())
    }
}

/// Truncation controls for the infinite sum over `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KPolicy {
    /// Largest `k` the sum may reach before giving up.
    pub cap: usize,
    /// The sum stops once `tail_stretch` consecutive terms are below this.
    pub tail_tol: f64,
    pub tail_stretch: usize,
    pub prec: u32,
}

impl Default for KPolicy {
    fn default() -> Self {
        KPolicy { cap: 4096, tail_tol: 1e-28, tail_stretch: 8, prec: 256 }
    }
}

#[derive(Debug, Clone)]
pub struct FunctionalValue {
    pub value: Float,
    /// Number of terms summed (`k = 0..k_used`).
    pub k_used: usize,
    pub stabilized: bool,
    pub lost_bits: u32,
}

/// `sum_k w_{ik} (beta)_k / k! f(k)` over a prepared row. Terms are added
/// until `tail_stretch` consecutive ones (past `k = deg f`) fall below
/// `tail_tol`; if `cap` is reached first the partial sum is returned with
/// `stabilized = false`.
pub fn functional_sum(row: &mut WeightRow, f: &Poly, policy: &KPolicy) -> Result<FunctionalValue> {
    let deg = f.degree().unwrap_or(0);
    let mut sum = TrackedSum::new(row.working_precision());
    let tol = Float::with_val(64, policy.tail_tol);
    let mut quiet = 0usize;
    let mut k = 0usize;
    while k <= policy.cap {
        if k >= row.len() {
            let before = row.working_precision();
            row.ensure(k.max(63).min(policy.cap))?;
            if row.working_precision() != before {
                // the row was recomputed with more bits; so is the sum
                sum = TrackedSum::new(row.working_precision());
                quiet = 0;
                k = 0;
            }
        }
        let prec = row.working_precision();
        let fk = f.eval_float(&Float::with_val(prec, k as u64));
        let term = Float::with_val(prec, row.mass(k) * &fk);
        sum.add(&term);
        if k > deg && Float::with_val(64, term.abs_ref()) < tol {
            quiet += 1;
            if quiet >= policy.tail_stretch {
                let lost = sum.lost_bits();
                return Ok(FunctionalValue {
                    value: sum.into_value(),
                    k_used: k + 1,
                    stabilized: true,
                    lost_bits: lost,
                });
            }
        } else {
            quiet = 0;
        }
        k += 1;
    }
    let lost = sum.lost_bits();
    Ok(FunctionalValue { value: sum.into_value(), k_used: k, stabilized: false, lost_bits: lost })
}

/// `L_i(f)` with adaptive truncation; `NonStabilized` if the policy cap is hit.
pub fn functional_apply(i: usize, f: &Poly, params: &MeixnerParams, policy: &KPolicy) -> Result<FunctionalValue> {
    check_index(i, params)?;
    let mut row = WeightRow::new(i, params, policy.prec)?;
    let out = functional_sum(&mut row, f, policy)?;
    if !out.stabilized {
        return Err(Error::NonStabilized(format!(
            "L_{i} sum still moving at k = {} (partial value {})",
            policy.cap,
            float_to_string(&out.value, 12)
        )));
    }
    Ok(out)
}

/// Exact moments: `L_i(x (x-1) ... (x-j+1)) sqrt(i! (beta)_i) = j! (beta)_j [z^{j-i}] exp(-Q(z))`.
/// Returns the rational left-hand factor for `j = 0..=j_max`.
pub fn exact_falling_moments(i: usize, j_max: usize, params: &MeixnerParams) -> Vec<Rational> {
    let neg = params.structure().poly().scale(&Rational::from(-1));
    let e = crate::genseries::FormalSeries::from_z_poly(&neg, j_max).exp();
    (0..=j_max)
        .map(|j| {
            if j < i {
                Rational::new()
            } else {
                factorial_q(j as u64) * pochhammer_q(&params.beta, j as u64) * e.coeff(j - i).coeff(0)
            }
        })
        .collect()
}

/// Coefficients of `f` in the falling-factorial basis, from forward differences at 0.
pub fn falling_factorial_coeffs(f: &Poly) -> Vec<Rational> {
    let deg = match f.degree() {
        None => return Vec::new(),
        Some(d) => d,
    };
    let mut diffs: Vec<Rational> = (0..=deg).map(|x| f.eval(&Rational::from(x as u64))).collect();
    let mut out = Vec::with_capacity(deg + 1);
    for j in 0..=deg {
        out.push(&diffs[0] / factorial_q(j as u64));
        for t in 0..diffs.len() - 1 {
            diffs[t] = Rational::from(&diffs[t + 1] - &diffs[t]);
        }
        diffs.pop();
    }
    out
}

/// `L_i(f) sqrt(i! (beta)_i)`, exactly.
pub fn functional_exact(i: usize, f: &Poly, params: &MeixnerParams) -> Rational {
    let coeffs = falling_factorial_coeffs(f);
    if coeffs.is_empty() {
        return Rational::new();
    }
    let moments = exact_falling_moments(i, coeffs.len() - 1, params);
    coeffs.iter().zip(&moments).map(|(a, m)| Rational::from(a * m)).sum()
}

/// `L_i(f)` in floating point from the exact moments.
pub fn functional_exact_float(i: usize, f: &Poly, params: &MeixnerParams, prec: u32) -> Float {
    let norm = sqrt_rational(&(factorial_q(i as u64) * pochhammer_q(&params.beta, i as u64)), prec);
    Float::with_val(prec, functional_exact(i, f, params)) / norm
}

/// Values `w_{ik}` for `i < d`, `k <= k_max`, with per-entry diagnostics.
#[derive(Debug, Clone)]
pub struct WeightTable {
    pub params: MeixnerParams,
    pub k_max: usize,
    pub precision: u32,
    pub values: Vec<Vec<Float>>,
    pub diagnostics: Vec<Vec<EntryDiagnostics>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntryDiagnostics {
    /// Series terms summed, or recurrence steps taken.
    pub terms: usize,
    pub precision_used: u32,
    pub lost_bits: u32,
    /// The entry met its accuracy target.
    pub stabilized: bool,
    pub method: &'static str,
}

/// Rows up to this `k_max` are evaluated entry by entry from the hypergeometric form.
pub const DIRECT_TABLE_LIMIT: usize = 64;

impl WeightTable {
    /// Short rows use [`weight_w`] per entry; longer ones use the validated
    /// recurrence of [`WeightRow`].
    pub fn build(params: &MeixnerParams, k_max: usize, prec: u32) -> Result<Self> {
        let d = params.d();
        let mut values = Vec::with_capacity(d);
        let mut diagnostics = Vec::with_capacity(d);
        for i in 0..d {
            let mut vrow = Vec::with_capacity(k_max + 1);
            let mut drow = Vec::with_capacity(k_max + 1);
            if k_max <= DIRECT_TABLE_LIMIT {
                for k in 0..=k_max {
                    let w = weight_w(i, k, params, prec)?;
                    let stabilized = w.value.is_finite() && w.precision_used >= prec + w.lost_bits;
                    drow.push(EntryDiagnostics {
                        terms: w.terms,
                        precision_used: w.precision_used,
                        lost_bits: w.lost_bits,
                        stabilized,
                        method: "hypergeometric",
                    });
                    vrow.push(w.value);
                }
            } else {
                let mut row = WeightRow::new(i, params, prec)?;
                let stabilized = row.ensure(k_max).is_ok();
                for k in 0..=k_max.min(row.len() - 1) {
                    drow.push(EntryDiagnostics {
                        terms: k + 1,
                        precision_used: row.working_precision(),
                        lost_bits: row.working_precision() - prec,
                        stabilized: stabilized && row.weight(k).is_finite(),
                        method: "recurrence",
                    });
                    vrow.push(row.weight(k).clone());
                }
            }
            values.push(vrow);
            diagnostics.push(drow);
        }
        Ok(WeightTable { params: params.clone(), k_max, precision: prec, values, diagnostics })
    }

    pub fn all_stabilized(&self) -> bool {
        self.diagnostics.iter().flatten().all(|d| d.stabilized)
    }

    pub fn value_string(&self, i: usize, k: usize) -> String {
        float_to_string(&self.values[i][k], digits_for_bits(self.precision))
    }
}

/// What the definition of d-orthogonality demands of `L_i(x^m P̂_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    /// `n >= m d + i + 1`.
    Zero,
    /// `n = m d + i`.
    Nonzero,
    Unconstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Pass,
    Fail,
    NonStabilized,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrthogonalityEntry {
    pub i: usize,
    pub m: usize,
    pub n: usize,
    pub requirement: Requirement,
    /// Adaptive sum over `k`.
    pub value: String,
    /// The same functional from the exact moments.
    pub exact: String,
    pub k_used: usize,
    pub lost_bits: u32,
    pub status: EntryStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrthogonalityReport {
    pub r: usize,
    pub d: usize,
    pub beta: String,
    pub c: String,
    pub n_max: usize,
    pub tol: String,
    pub k_cap: usize,
    pub entries: Vec<OrthogonalityEntry>,
    /// Largest `|L_i(x^m P̂_n)|` among the required zeros.
    pub max_zero_abs: String,
    /// Smallest `|L_i(x^m P̂_{md+i})|`.
    pub min_diagonal_abs: String,
    pub non_stabilized: usize,
    pub pass: bool,
}

/// Evaluates `L_i(x^m P̂_n)` for every `i < d`, every `m` with `m d + i <= n_max`
/// and every `n <= n_max`. Zeros must be below `tol`, diagonal entries at
/// least `10 tol`. Entries whose sum hits the cap are marked, not raised.
pub fn verify_d_orthogonality(
    params: &MeixnerParams,
    n_max: usize,
    tol: f64,
    policy: &KPolicy,
) -> Result<OrthogonalityReport> {
    let d = params.d();
    let prec = policy.prec;
    let seq = build_monic_sequence(&params.recurrence_data(), n_max);
    let tol_f = Float::with_val(prec, tol);
    let big = Float::with_val(prec, &tol_f * 10u32);
    let mut entries = Vec::new();
    let mut max_zero = Float::with_val(prec, 0);
    let mut min_diag: Option<Float> = None;
    let mut non_stabilized = 0;
    for i in 0..d {
        let mut row = WeightRow::new(i, params, prec)?;
        let mut m = 0;
        while m * d + i <= n_max {
            for n in 0..=n_max {
                let requirement = if n > m * d + i {
                    Requirement::Zero
                } else if n == m * d + i {
                    Requirement::Nonzero
                } else {
                    Requirement::Unconstrained
                };
                let f = seq.entries[n].mul_x_pow(m);
                let out = functional_sum(&mut row, &f, policy)?;
                let abs = Float::with_val(prec, out.value.abs_ref());
                let status = if !out.stabilized {
                    non_stabilized += 1;
                    EntryStatus::NonStabilized
                } else {
                    let ok = match requirement {
                        Requirement::Zero => abs < tol_f,
                        Requirement::Nonzero => abs >= big,
                        Requirement::Unconstrained => true,
                    };
                    if ok {
                        EntryStatus::Pass
                    } else {
                        EntryStatus::Fail
                    }
                };
                match requirement {
                    Requirement::Zero if abs > max_zero => max_zero = abs.clone(),
                    Requirement::Nonzero if min_diag.as_ref().map_or(true, |v| abs < *v) => {
                        min_diag = Some(abs.clone())
                    }
                    _ => {}
                }
                entries.push(OrthogonalityEntry {
                    i,
                    m,
                    n,
                    requirement,
                    value: float_to_string(&out.value, 12),
                    exact: float_to_string(&functional_exact_float(i, &f, params, prec), 12),
                    k_used: out.k_used,
                    lost_bits: out.lost_bits,
                    status,
                });
            }
            m += 1;
        }
    }
    let pass = entries.iter().all(|e| e.status == EntryStatus::Pass);
    Ok(OrthogonalityReport {
        r: params.r,
        d,
        beta: params.beta.to_string(),
        c: params.c.to_string(),
        n_max,
        tol: format!("{tol:e}"),
        k_cap: policy.cap,
        entries,
        max_zero_abs: float_to_string(&max_zero, 6),
        min_diagonal_abs: min_diag.map_or_else(|| "none".into(), |v| float_to_string(&v, 6)),
        non_stabilized,
        pass,
    })
}

/// `sum_{k<K} psi_{nk} phi_{mk}` for the truncations `K` visited by doubling.
#[derive(Debug, Clone, Serialize)]
pub struct BiorthogonalityEntry {
    pub n: usize,
    pub m: usize,
    pub value: String,
    /// `|sum - delta_{nm}|` at each visited truncation.
    pub deviations: Vec<(usize, String)>,
    pub k_used: usize,
    pub stabilized: bool,
    pub pass: bool,
}

/// Doubles `K` from `k_start` until two consecutive truncations agree to
/// `tol / 10`, at most up to `k_cap`, then compares with `delta_{nm}`.
pub fn biorthogonality(
    params: &MeixnerParams,
    n_max: usize,
    tol: f64,
    k_start: usize,
    k_cap: usize,
    prec: u32,
) -> Result<Vec<BiorthogonalityEntry>> {
    let seq = build_monic_sequence(&params.recurrence_data(), n_max);
    let tol_f = Float::with_val(prec, tol);
    let settle = Float::with_val(prec, &tol_f / 10u32);
    let mut out = Vec::new();
    for m in 0..=n_max {
        let mut row = WeightRow::new(m, params, prec)?;
        row.ensure(k_start.min(k_cap))?;
        for n in 0..=n_max {
            let norm =
                sqrt_rational(&(factorial_q(n as u64) * pochhammer_q(&params.beta, n as u64)), row.working_precision());
            let delta = if n == m { 1 } else { 0 };
            let mut deviations = Vec::new();
            let mut prev: Option<Float> = None;
            let mut acc = Float::with_val(row.working_precision(), 0);
            let mut done = 0usize;
            let mut k_target = k_start.min(k_cap);
            let mut stabilized = false;
            loop {
                let before = row.working_precision();
                row.ensure(k_target - 1)?;
                let p = row.working_precision();
                if p != before {
                    done = 0;
                    acc = Float::with_val(p, 0);
                }
                for k in done..k_target {
                    let v = seq.entries[n].eval_float(&Float::with_val(p, k as u64));
                    acc += Float::with_val(p, row.mass(k) * v);
                }
                done = k_target;
                let value = Float::with_val(p, &acc / &norm);
                let dev = Float::with_val(p, &value - delta).abs();
                deviations.push((k_target, float_to_string(&dev, 6)));
                if let Some(pv) = &prev {
                    if Float::with_val(p, &value - pv).abs() < settle {
                        stabilized = true;
                        prev = Some(value);
                        break;
                    }
                }
                prev = Some(value);
                if k_target >= k_cap {
                    break;
                }
                k_target = (k_target * 2).min(k_cap);
            }
            let value = prev.expect("at least one truncation");
            let dev = Float::with_val(prec, &value - delta).abs();
            out.push(BiorthogonalityEntry {
                n,
                m,
                value: float_to_string(&value, 30),
                deviations,
                k_used: done,
                stabilized,
                pass: stabilized && dev < tol_f,
            });
        }
    }
    Ok(out)
}
