//! Truncated matrices of the su(1,1) positive discrete series and the
//! matrix elements of `S = exp(J+) exp(Q(J-))`.
//!
//! Everything is computed in the scaled basis `f_n = sqrt(n! (beta)_n) |n, beta>`,
//! where `J+ f_n = f_{n+1}`, `J- f_n = n (n + beta - 1) f_{n-1}` and
//! `J0 f_n = (n + beta/2) f_n`, so all entries are rational. Matrices act on
//! column vectors: entry `(row, col)` is the `f_row` component of `X f_col`.
//! With this convention `psi_{nk} = <k|S|n>` sits at row `k`, column `n`.

use std::fmt;

use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactnum::{factorial_q, float_to_string, pochhammer_q};
use crate::genseries::FormalSeries;
use crate::poly::Poly;
use crate::qpoly::lowering_ratio;

/// Dense square matrix of exact rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RatMatrix {
    n: usize,
    data: Vec<Rational>,
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for RatMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.n + j]
    }
}

impl RatMatrix {
    pub fn zeros(n: usize) -> Self {
        RatMatrix { n, data: vec![Rational::new(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = Rational::from(1);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| *x == 0)
    }

    pub fn mul(&self, rhs: &RatMatrix) -> RatMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = RatMatrix::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = &self[(i, l)];
                if *a == 0 {
                    continue;
                }
                for j in 0..n {
                    let b = &rhs[(l, j)];
                    if *b != 0 {
                        out[(i, j)] += Rational::from(a * b);
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &RatMatrix) -> RatMatrix {
        RatMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| Rational::from(a + b)).collect() }
    }

    pub fn sub(&self, rhs: &RatMatrix) -> RatMatrix {
        RatMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| Rational::from(a - b)).collect() }
    }

    pub fn scale(&self, c: &Rational) -> RatMatrix {
        RatMatrix { n: self.n, data: self.data.iter().map(|a| Rational::from(a * c)).collect() }
    }

    /// `[self, rhs] = self rhs - rhs self`.
    pub fn commutator(&self, rhs: &RatMatrix) -> RatMatrix {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    pub fn pow(&self, k: usize) -> RatMatrix {
        (0..k).fold(RatMatrix::identity(self.n), |acc, _| acc.mul(self))
    }

    /// `p(self)` by Horner's rule.
    pub fn poly_apply(&self, p: &Poly) -> RatMatrix {
        let mut acc = RatMatrix::zeros(self.n);
        for c in p.coeffs().iter().rev() {
            acc = acc.mul(self).add(&RatMatrix::identity(self.n).scale(c));
        }
        acc
    }

    /// `exp(self)` for a nilpotent matrix; the series stops once a power vanishes.
    pub fn exp_nilpotent(&self) -> RatMatrix {
        let mut out = RatMatrix::identity(self.n);
        let mut term = RatMatrix::identity(self.n);
        for j in 1..=self.n {
            term = term.mul(self).scale(&Rational::from((1, j as u64)));
            if term.is_zero() {
                return out;
            }
            out = out.add(&term);
        }
        assert!(term.mul(self).is_zero(), "exp_nilpotent called on a non-nilpotent matrix");
        out
    }

    /// Largest `|self - rhs|` entry on the leading `block x block` submatrix.
    pub fn max_deviation(&self, rhs: &RatMatrix, block: usize) -> Rational {
        let mut worst = Rational::new();
        for i in 0..block.min(self.n) {
            for j in 0..block.min(self.n) {
                let d = Rational::from(&self[(i, j)] - &rhs[(i, j)]).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// Truncated ladder operators in the scaled basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorRep {
    pub size: usize,
    pub beta: Rational,
    pub j0: RatMatrix,
    pub jplus: RatMatrix,
    pub jminus: RatMatrix,
}

/// Builds `J0`, `J+`, `J-` on `f_0..f_{size-1}`.
pub fn build_rep(beta: &Rational, size: usize) -> Result<OperatorRep> {
    if size < 2 {
        return Err(Error::Domain(format!("truncation size must be >= 2, got {size}")));
    }
    if *beta <= 0 {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let half = Rational::from(beta / 2);
    let mut j0 = RatMatrix::zeros(size);
    let mut jplus = RatMatrix::zeros(size);
    let mut jminus = RatMatrix::zeros(size);
    for n in 0..size {
        j0[(n, n)] = Rational::from(n as i64) + &half;
        if n + 1 < size {
            jplus[(n + 1, n)] = Rational::from(1);
        }
        if n > 0 {
            jminus[(n - 1, n)] = Rational::from(n as i64) * (Rational::from(n as i64 - 1) + beta);
        }
    }
    Ok(OperatorRep { size, beta: beta.clone(), j0, jplus, jminus })
}

/// Scaled-basis matrices of `S` and of the truncated inverse `exp(-Q(J-)) exp(-J+)`.
///
/// `psi_scaled` is exact: lowering before raising never leaves the retained
/// window. `phi_scaled` is the exact inverse of the truncated `S`, whose
/// entries are partial sums over intermediate states below the truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixElements {
    pub psi_scaled: RatMatrix,
    pub phi_scaled: RatMatrix,
    pub size: usize,
    pub beta: Rational,
}

fn check_q(q: &Poly) -> Result<()> {
    if q.coeff(0) != 0 {
        return Err(Error::Domain("Q(0) must be 0".into()));
    }
    Ok(())
}

/// `exp(J+)`, `exp(Q(J-))` and their inverses on the truncated space.
pub fn build_s(rep: &OperatorRep, q: &Poly) -> Result<MatrixElements> {
    check_q(q)?;
    let qm = rep.jminus.poly_apply(q);
    let raise = rep.jplus.exp_nilpotent();
    let lower = qm.exp_nilpotent();
    let raise_inv = rep.jplus.scale(&Rational::from(-1)).exp_nilpotent();
    let lower_inv = qm.scale(&Rational::from(-1)).exp_nilpotent();
    Ok(MatrixElements {
        psi_scaled: raise.mul(&lower),
        phi_scaled: lower_inv.mul(&raise_inv),
        size: rep.size,
        beta: rep.beta.clone(),
    })
}

/// `P̂_n(k) = k! * S_scaled[k][n]`.
pub fn extract_phat(me: &MatrixElements, n: usize, k: usize) -> Result<Rational> {
    if n >= me.size || k >= me.size {
        return Err(Error::Domain(format!("indices ({n},{k}) outside truncation {}", me.size)));
    }
    Ok(factorial_q(k as u64) * &me.psi_scaled[(k, n)])
}

/// Polynomial `c_n(k)` with `S_scaled[k][n] = c_n(k) / k!` for every `k >= 0`,
/// read off from `exp(Q(J-)) f_n = sum_L [z^L]exp(Q) rho_{n,L} f_{n-L}`
/// followed by `exp(J+) f_m = sum_j f_{m+j} / j!`. No truncation is involved.
pub fn column_polynomial(q: &Poly, beta: &Rational, n: usize) -> Result<Poly> {
    check_q(q)?;
    let e = FormalSeries::from_z_poly(q, n).exp();
    let mut acc = Poly::zero();
    for l in 0..=n {
        let coef = e.coeff(l).coeff(0) * lowering_ratio(beta, n, l);
        if coef != 0 {
            acc = &acc + &Poly::falling_factorial(n - l).scale(&coef);
        }
    }
    Ok(acc)
}

/// Exact `S_scaled[k][n]` for arbitrary `k`, `n`.
pub fn psi_scaled_entry(q: &Poly, beta: &Rational, k: usize, n: usize) -> Result<Rational> {
    Ok(column_polynomial(q, beta, n)?.eval(&Rational::from(k as u64)) / factorial_q(k as u64))
}

/// Orthonormal-basis `psi_{nk} = S_scaled[k][n] sqrt(k!(beta)_k / (n!(beta)_n))`.
pub fn psi_orthonormal(scaled: &Rational, beta: &Rational, n: usize, k: usize, prec: u32) -> Float {
    let ratio = lowering_ratio(beta, k, k) / lowering_ratio(beta, n, n);
    Float::with_val(prec, &ratio).sqrt() * Float::with_val(prec, scaled)
}

/// Orthonormal-basis `phi_{mk} = Phi_scaled[m][k] sqrt(m!(beta)_m / (k!(beta)_k))`.
pub fn phi_orthonormal(scaled: &Float, beta: &Rational, m: usize, k: usize) -> Float {
    let prec = scaled.prec();
    let ratio = lowering_ratio(beta, m, m) / lowering_ratio(beta, k, k);
    Float::with_val(prec, &ratio).sqrt() * scaled
}

/// Entry `(m, k)` of the truncated `exp(-Q(J-)) exp(-J+)` at truncation `size`,
/// i.e. the partial sum over intermediate states `p < size`.
pub fn phi_scaled_partial(q: &Poly, beta: &Rational, m: usize, k: usize, size: usize, prec: u32) -> Result<Float> {
    check_q(q)?;
    if m >= size || k >= size {
        return Ok(Float::with_val(prec, 0));
    }
    let neg = q.scale(&Rational::from(-1));
    let e = FormalSeries::from_z_poly(&neg, size).exp();
    // E[m][p] = [z^{p-m}] exp(-Q) * p!(beta)_p / (m!(beta)_m); F[p][k] = (-1)^{p-k} / (p-k)!
    let start = m.max(k);
    let mut norm = Float::with_val(prec, lowering_ratio(beta, start, start - m));
    let mut fact = Float::with_val(prec, factorial_q((start - k) as u64));
    let mut sum = Float::with_val(prec, 0);
    for p in start..size {
        if p > start {
            norm *= Float::with_val(prec, p as u64) * Float::with_val(prec, Rational::from(beta + (p as u64 - 1)));
            fact *= (p - k) as u64;
        }
        let ep = e.coeff(p - m).coeff(0);
        if ep == 0 {
            continue;
        }
        let mut term = Float::with_val(prec, &ep) * &norm / &fact;
        if (p - k) % 2 == 1 {
            term = -term;
        }
        sum += term;
    }
    Ok(sum)
}

/// Truncation-doubling controls for `S^-1` entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizeOptions {
    pub start_size: usize,
    pub max_size: usize,
    pub tol: f64,
    pub prec: u32,
}

impl Default for StabilizeOptions {
    fn default() -> Self {
        StabilizeOptions { start_size: 14, max_size: 512, tol: 1e-25, prec: 256 }
    }
}

#[derive(Debug, Clone)]
pub struct StabilizedEntry {
    /// Orthonormal `phi_{mk}`.
    pub value: Float,
    pub size_used: usize,
}

/// `phi_{mk}` from the truncated inverse, doubling the truncation until two
/// consecutive sizes agree to `tol` (relative to `max(1, |phi|)`).
///
/// The partial sums alternate and need not converge, so agreement of two
/// sizes is evidence, not proof; prefer [`crate::weights::phi_series`].
pub fn stabilized_phi(
    q: &Poly,
    beta: &Rational,
    m: usize,
    k: usize,
    opts: &StabilizeOptions,
) -> Result<StabilizedEntry> {
    let mut size = opts.start_size.max(m.max(k) + 2);
    let mut prev = phi_orthonormal(&phi_scaled_partial(q, beta, m, k, size, opts.prec)?, beta, m, k);
    let tol = Float::with_val(opts.prec, opts.tol);
    while size * 2 <= opts.max_size {
        size *= 2;
        let next = phi_orthonormal(&phi_scaled_partial(q, beta, m, k, size, opts.prec)?, beta, m, k);
        let scale = Float::with_val(opts.prec, next.abs_ref()).max(&Float::with_val(opts.prec, 1));
        let diff = Float::with_val(opts.prec, &next - &prev).abs();
        if diff <= Float::with_val(opts.prec, &tol * &scale) {
            return Ok(StabilizedEntry { value: next, size_used: size });
        }
        prev = next;
    }
    Err(Error::NonStabilized(format!("S^-1 entry ({m},{k}) still moving at truncation {size} (cap {})", opts.max_size)))
}

/// One algebraic identity checked on an interior block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    /// Size of the leading block on which the identity was compared.
    pub block: usize,
    pub max_deviation: String,
    pub pass: bool,
    /// Diagnostic entries are reported but do not count toward the verdict.
    pub diagnostic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub size: usize,
    pub beta: String,
    pub checks: Vec<IdentityCheck>,
    pub pass: bool,
}

/// Checks the ladder-algebra identities entrywise on interior blocks. The
/// margin excluded for each identity is the raising reach that truncation
/// can contaminate.
pub fn verify_identities(rep: &OperatorRep, q: &Poly) -> Result<IdentityReport> {
    check_q(q)?;
    let n = rep.size;
    let (j0, jp, jm) = (&rep.j0, &rep.jplus, &rep.jminus);
    let r = q.degree().unwrap_or(1).max(1);
    let id = RatMatrix::identity(n);
    let two = Rational::from(2);
    let neg = Rational::from(-1);

    let mut checks = Vec::new();
    let mut push = |name: String, lhs: RatMatrix, rhs: RatMatrix, margin: usize, diagnostic: bool| {
        let block = n.saturating_sub(margin);
        let dev = lhs.max_deviation(&rhs, block);
        checks.push(IdentityCheck { name, block, pass: dev == 0, max_deviation: dev.to_string(), diagnostic });
    };

    push("[J0,J+] = J+".into(), j0.commutator(jp), jp.clone(), 1, false);
    push("[J0,J-] = -J-".into(), j0.commutator(jm), jm.scale(&neg), 1, false);
    push("[J-,J+] = 2J0".into(), jm.commutator(jp), j0.scale(&two), 1, false);

    for p in 1..=4usize {
        let pf = Rational::from(p as u64);
        let jp_p = jp.pow(p);
        let jm_p = jm.pow(p);
        let jm_pm1 = jm.pow(p - 1);
        push(format!("[J0,J+^{p}] = {p} J+^{p}"), j0.commutator(&jp_p), jp_p.scale(&pf), p, false);
        push(format!("[J0,J-^{p}] = -{p} J-^{p}"), j0.commutator(&jm_p), jm_p.scale(&-pf.clone()), p, false);
        let rhs = j0
            .mul(&jm_pm1)
            .scale(&Rational::from(2 * p as u64))
            .add(&jm_pm1.scale(&Rational::from((p * (p - 1)) as u64)));
        push(
            format!("[J-^{p},J+] = 2{p} J0 J-^{} + {} J-^{}", p - 1, p * (p - 1), p - 1),
            jm_p.commutator(jp),
            rhs,
            1,
            false,
        );
    }

    let qp = q.derivative();
    let qpp = qp.derivative();
    let q_jm = jm.poly_apply(q);
    let q_jp = jp.poly_apply(q);
    let qp_jm = jm.poly_apply(&qp);
    let qp_jp = jp.poly_apply(&qp);
    let qpp_jm = jm.poly_apply(&qpp);

    push("[Q(J-),J0] = J- Q'(J-)".into(), q_jm.commutator(j0), jm.mul(&qp_jm), 1, false);
    push("[Q(J+),J0] = -J+ Q'(J+)".into(), q_jp.commutator(j0), jp.mul(&qp_jp).scale(&neg), r, false);
    push(
        "[Q(J-),J+] = 2 J0 Q'(J-) + J- Q''(J-)".into(),
        q_jm.commutator(jp),
        j0.mul(&qp_jm).scale(&two).add(&jm.mul(&qpp_jm)),
        1,
        false,
    );

    let e_qp = q_jp.exp_nilpotent();
    let e_qp_inv = q_jp.scale(&neg).exp_nilpotent();
    let e_qm = q_jm.exp_nilpotent();
    let e_qm_inv = q_jm.scale(&neg).exp_nilpotent();
    push(
        "exp(Q(J+)) J0 exp(-Q(J+)) = J0 - J+ Q'(J+)".into(),
        e_qp.mul(j0).mul(&e_qp_inv),
        j0.sub(&jp.mul(&qp_jp)),
        0,
        false,
    );
    push(
        "exp(Q(J-)) J0 exp(-Q(J-)) = J0 + J- Q'(J-)".into(),
        e_qm.mul(j0).mul(&e_qm_inv),
        j0.add(&jm.mul(&qp_jm)),
        0,
        false,
    );
    let qp_sq_minus_qpp = qp_jm.mul(&qp_jm).sub(&qpp_jm);
    push(
        "exp(-Q(J-)) J+ exp(Q(J-)) = J+ - 2 J0 Q'(J-) + J- (Q'(J-)^2 - Q''(J-))".into(),
        e_qm_inv.mul(jp).mul(&e_qm),
        jp.sub(&j0.mul(&qp_jm).scale(&two)).add(&jm.mul(&qp_sq_minus_qpp)),
        r,
        false,
    );

    let me = build_s(rep, q)?;
    let s = &me.psi_scaled;
    let s_inv = &me.phi_scaled;
    push("S S^-1 = I".into(), s.mul(s_inv), id.clone(), 0, false);
    let ones = id.scale(&Rational::from(1));
    let recur_rhs =
        jp.add(&j0.mul(&ones.sub(&qp_jm.scale(&two)))).add(&jm.mul(&qp_jm.mul(&qp_jm).sub(&qp_jm).sub(&qpp_jm)));
    push(
        "S^-1 J0 S = J+ + J0 (1 - 2Q'(J-)) + J- (Q'^2 - Q' - Q'')(J-)".into(),
        s_inv.mul(j0).mul(s),
        recur_rhs,
        r,
        false,
    );
    let lowering = jm.sub(&j0.scale(&two)).add(jp);
    push("S J- S^-1 = J- - 2J0 + J+".into(), s.mul(jm).mul(s_inv), lowering.clone(), 1, false);
    push("S J- = (J- - 2J0 + J+) S".into(), s.mul(jm), lowering.mul(s), 1, false);

    let half = Rational::from(&rep.beta / 2);
    let casimir_value = &half * Rational::from(&half - 1);
    let j0_sq = j0.mul(j0);
    push(
        format!("J0^2 - J0 - J+J- = {casimir_value} I"),
        j0_sq.sub(j0).sub(&jp.mul(jm)),
        id.scale(&casimir_value),
        1,
        false,
    );
    // The combination J+J- + J0^2 - J0 is not central; report how far from constant it is.
    push(
        format!("J+J- + J0^2 - J0 = {casimir_value} I (non-central form)"),
        jp.mul(jm).add(&j0_sq).sub(j0),
        id.scale(&casimir_value),
        1,
        true,
    );

    let pass = checks.iter().filter(|c| !c.diagnostic).all(|c| c.pass);
    Ok(IdentityReport { size: n, beta: rep.beta.to_string(), checks, pass })
}

/// Components `z^n / sqrt(n! (beta)_n)` of the coherent state `|z, beta>`, `n < size`.
pub fn coherent_vector(z: &Float, beta: &Rational, size: usize) -> Vec<Float> {
    let prec = z.prec();
    let mut out = Vec::with_capacity(size);
    let mut zn = Float::with_val(prec, 1);
    for n in 0..size {
        let norm = Float::with_val(prec, lowering_ratio(beta, n, n)).sqrt();
        out.push(Float::with_val(prec, &zn / &norm));
        zn *= z;
    }
    out
}

/// `J-` in the orthonormal basis applied to a truncated vector; the last component is dropped.
pub fn lower_orthonormal(v: &[Float], beta: &Rational) -> Vec<Float> {
    (0..v.len().saturating_sub(1))
        .map(|n| {
            let prec = v[n + 1].prec();
            let coef = Rational::from((n + 1) as u64) * Rational::from(beta + n as u64);
            Float::with_val(prec, &coef).sqrt() * &v[n + 1]
        })
        .collect()
}

/// `F(J-) v` for a polynomial `F`; the result keeps the `len - deg F` components
/// unaffected by truncation.
pub fn apply_poly_lowering(f: &Poly, v: &[Float], beta: &Rational) -> Vec<Float> {
    let deg = f.degree().unwrap_or(0);
    let keep = v.len().saturating_sub(deg);
    let prec = v.first().map_or(64, Float::prec);
    let mut acc: Vec<Float> = vec![Float::with_val(prec, 0); keep];
    let mut power: Vec<Float> = v.to_vec();
    for (j, c) in f.coeffs().iter().enumerate() {
        if j > 0 {
            power = lower_orthonormal(&power, beta);
        }
        if *c == 0 {
            continue;
        }
        let cf = Float::with_val(prec, c);
        for (a, p) in acc.iter_mut().zip(&power) {
            *a += Float::with_val(prec, p * &cf);
        }
    }
    acc
}

/// Largest relative deviation of `F(J-)|z>` from `F(z)|z>` over the valid components.
pub fn coherent_eigen_deviation(z: &Float, beta: &Rational, size: usize, f: &Poly) -> Float {
    let prec = z.prec();
    let v = coherent_vector(z, beta, size);
    let fv = apply_poly_lowering(f, &v, beta);
    let fz = f.eval_float(z);
    let mut worst = Float::with_val(prec, 0);
    for (a, b) in fv.iter().zip(&v) {
        let expect = Float::with_val(prec, &fz * b);
        if expect.is_zero() {
            continue;
        }
        let rel = Float::with_val(prec, a - &expect).abs() / expect.abs();
        if rel > worst {
            worst = rel;
        }
    }
    worst
}

/// Largest deviation of `sum_{n<terms} psi_{nk} z^n / sqrt(n!(beta)_n)` from
/// `sqrt((beta)_k / k!) exp(Q(z)) 1F1(-k; beta; -z)` over `k <= k_max`.
pub fn generating_identity_deviation(
    q: &Poly,
    beta: &Rational,
    z: &Rational,
    k_max: usize,
    terms: usize,
    prec: u32,
) -> Result<Float> {
    let mut worst = Float::with_val(prec, 0);
    let columns: Vec<Poly> = (0..terms).map(|n| column_polynomial(q, beta, n)).collect::<Result<_>>()?;
    let zf = Float::with_val(prec, z);
    let exp_q = q.eval_float(&zf).exp();
    for k in 0..=k_max {
        let mut lhs = Float::with_val(prec, 0);
        let mut zn = Rational::from(1);
        for (n, col) in columns.iter().enumerate() {
            let scaled = col.eval(&Rational::from(k as u64)) / factorial_q(k as u64);
            let psi = psi_orthonormal(&scaled, beta, n, k, prec);
            let norm = Float::with_val(prec, lowering_ratio(beta, n, n)).sqrt();
            lhs += psi * Float::with_val(prec, &zn) / norm;
            zn *= z;
        }
        let kummer = crate::exactnum::terminating_sum_q(
            &[Rational::from(-(k as i64))],
            std::slice::from_ref(beta),
            &Rational::from(-z),
            k as u64 + 1,
        );
        let psi0 = Float::with_val(prec, pochhammer_q(beta, k as u64) / factorial_q(k as u64)).sqrt();
        let rhs = psi0 * &exp_q * Float::with_val(prec, &kummer);
        let dev = Float::with_val(prec, &lhs - &rhs).abs();
        if dev > worst {
            worst = dev;
        }
    }
    Ok(worst)
}

/// Largest deviation of the three-point relation
/// `sqrt((k+1)(k+beta)) psi_{n,k+1} - 2(k+beta/2) psi_{nk} + sqrt(k(k+beta-1)) psi_{n,k-1}
///  = sqrt(n(n+beta-1)) psi_{n-1,k}` over `1 <= n <= n_max`, `0 <= k <= k_max`.
pub fn three_point_deviation(q: &Poly, beta: &Rational, n_max: usize, k_max: usize, prec: u32) -> Result<Float> {
    let psi = |n: usize, k: usize| -> Result<Float> {
        let scaled = psi_scaled_entry(q, beta, k, n)?;
        Ok(psi_orthonormal(&scaled, beta, n, k, prec))
    };
    let mut worst = Float::with_val(prec, 0);
    for n in 1..=n_max {
        for k in 0..=k_max {
            let kq = Rational::from(k as u64);
            let up =
                Float::with_val(prec, Rational::from(&kq + 1) * Rational::from(&kq + beta)).sqrt() * psi(n, k + 1)?;
            let mid = Float::with_val(prec, Rational::from(2 * &kq) + beta) * psi(n, k)?;
            let down = if k > 0 {
                Float::with_val(prec, &kq * (Rational::from(&kq - 1) + beta)).sqrt() * psi(n, k - 1)?
            } else {
                Float::with_val(prec, 0)
            };
            let nq = Rational::from(n as u64);
            let rhs = Float::with_val(prec, &nq * (Rational::from(&nq - 1) + beta)).sqrt() * psi(n - 1, k)?;
            let dev = Float::with_val(prec, up - mid + down - rhs).abs();
            if dev > worst {
                worst = dev;
            }
        }
    }
    Ok(worst)
}

/// Renders a float deviation for reports.
pub fn deviation_string(x: &Float) -> String {
    float_to_string(x, 6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::MeixnerParams;
    use crate::recurrence::build_monic_sequence;
    use rug::ops::Pow;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn rep_examples() {
        let beta = q(3, 2);
        let rep = build_rep(&beta, 2).unwrap();
        assert_eq!(rep.j0[(0, 0)], q(3, 4));
        assert_eq!(rep.j0[(1, 1)], q(7, 4));
        let rep = build_rep(&beta, 3).unwrap();
        assert_eq!(rep.jminus[(0, 1)], beta);
        assert_eq!(rep.jminus[(1, 2)], (2 * (&beta + Rational::from(1))));
        let comm = rep.jminus.commutator(&rep.jplus);
        assert_eq!(comm[(0, 0)], beta);
        assert!(build_rep(&beta, 1).is_err());
    }

    #[test]
    fn shift_exponential_closed_form() {
        let rep = build_rep(&q(5, 2), 20).unwrap();
        let e = rep.jplus.exp_nilpotent();
        for k in 0..20 {
            for n in 0..20 {
                let expect = if k >= n { factorial_q((k - n) as u64).recip() } else { Rational::new() };
                assert_eq!(e[(k, n)], expect);
            }
        }
        // Q = 0 leaves only exp(J+)
        let me = build_s(&rep, &Poly::zero()).unwrap();
        assert_eq!(me.psi_scaled, e);
    }

    #[test]
    fn first_column_gives_psi0() {
        let p = MeixnerParams::from_ratios(2, (3, 2), (1, 2)).unwrap();
        let rep = build_rep(&p.beta, 10).unwrap();
        let me = build_s(&rep, &p.structure().poly()).unwrap();
        for k in 0..10 {
            let psi = psi_orthonormal(&me.psi_scaled[(k, 0)], &p.beta, 0, k, 200);
            let expect = Float::with_val(200, pochhammer_q(&p.beta, k as u64) / factorial_q(k as u64)).sqrt();
            assert!(Float::with_val(200, psi - expect).abs() < 1e-55);
            assert_eq!(extract_phat(&me, 0, k).unwrap(), 1);
        }
    }

    #[test]
    fn operator_matches_recurrence() {
        let p = MeixnerParams::from_ratios(2, (3, 2), (1, 2)).unwrap();
        let rep = build_rep(&p.beta, 12).unwrap();
        let qp = p.structure().poly();
        let me = build_s(&rep, &qp).unwrap();
        let seq = build_monic_sequence(&p.recurrence_data(), 11);
        for n in 0..12 {
            for k in 0..12 {
                let v = extract_phat(&me, n, k).unwrap();
                assert_eq!(v, seq.entries[n].eval(&Rational::from(k as u64)), "n={n} k={k}");
                assert_eq!(v, factorial_q(k as u64) * psi_scaled_entry(&qp, &p.beta, k, n).unwrap());
            }
        }
    }

    #[test]
    fn truncated_inverse_is_partial_sum() {
        let p = MeixnerParams::from_ratios(2, (3, 2), (1, 2)).unwrap();
        let rep = build_rep(&p.beta, 9).unwrap();
        let qp = p.structure().poly();
        let me = build_s(&rep, &qp).unwrap();
        for m in 0..9 {
            for k in 0..9 {
                let v = phi_scaled_partial(&qp, &p.beta, m, k, 9, 256).unwrap();
                let exact = Float::with_val(256, &me.phi_scaled[(m, k)]);
                let scale = Float::with_val(256, exact.abs_ref()).max(&Float::with_val(256, 1));
                assert!(Float::with_val(256, v - &exact).abs() / scale < 1e-70, "({m},{k})");
            }
        }
    }

    #[test]
    fn inverse_stabilizes_only_in_convergent_regime() {
        let conv = MeixnerParams::from_ratios(1, (3, 2), (1, 4)).unwrap();
        let out = stabilized_phi(&conv.structure().poly(), &conv.beta, 0, 3, &StabilizeOptions::default()).unwrap();
        // phi_{0k} psi_{0k} = (1-c)^beta c^k (beta)_k / k!
        let prec = 256;
        let psi0 = Float::with_val(prec, pochhammer_q(&conv.beta, 3) / factorial_q(3)).sqrt();
        let expect = Float::with_val(prec, 0.75f64).pow(Float::with_val(prec, 1.5f64))
            * Float::with_val(prec, q(1, 64))
            * Float::with_val(prec, pochhammer_q(&conv.beta, 3) / factorial_q(3));
        let got = out.value * psi0;
        assert!(Float::with_val(prec, got - expect).abs() < 1e-24);

        let div = MeixnerParams::from_ratios(2, (3, 2), (1, 2)).unwrap();
        let err = stabilized_phi(&div.structure().poly(), &div.beta, 0, 0, &StabilizeOptions::default());
        assert!(matches!(err, Err(Error::NonStabilized(_))));
    }

    #[test]
    fn identities_hold_on_interior() {
        for (r, c) in [(1, (1, 2)), (2, (1, 2)), (3, (1, 4))] {
            let p = MeixnerParams::from_ratios(r, (3, 2), c).unwrap();
            let rep = build_rep(&p.beta, 12).unwrap();
            let report = verify_identities(&rep, &p.structure().poly()).unwrap();
            for check in &report.checks {
                assert!(check.pass || check.diagnostic, "{p}: {check:?}");
            }
            assert!(report.pass);
            let diag = report.checks.iter().find(|c| c.diagnostic).unwrap();
            assert!(!diag.pass);
        }
    }

    #[test]
    fn casimir_value() {
        let rep = build_rep(&q(3, 2), 6).unwrap();
        let report = verify_identities(&rep, &Poly::from_i64(&[0, 1, 2])).unwrap();
        assert!(report.checks.iter().any(|c| c.name.starts_with("J0^2 - J0 - J+J- = -3/16")));
    }

    #[test]
    fn coherent_state_eigenvector() {
        let z = Float::with_val(256, 0.25);
        let v = coherent_vector(&Float::with_val(256, 0), &q(1, 1), 5);
        assert_eq!(v[0], 1);
        assert!(v[1..].iter().all(|x| x.is_zero()));
        let dev = coherent_eigen_deviation(&z, &q(3, 2), 30, &Poly::x());
        assert!(dev < 1e-70);
        let dev = coherent_eigen_deviation(&z, &q(3, 2), 30, &Poly::from_i64(&[0, 0, 1]));
        assert!(dev < 1e-70);
    }

    #[test]
    fn generating_and_three_point() {
        let p = MeixnerParams::from_ratios(2, (3, 2), (1, 2)).unwrap();
        let qp = p.structure().poly();
        let dev = generating_identity_deviation(&qp, &p.beta, &q(1, 4), 6, 100, 256).unwrap();
        assert!(dev < 1e-60, "{dev}");
        let dev = three_point_deviation(&qp, &p.beta, 8, 8, 256).unwrap();
        assert!(dev < 1e-60, "{dev}");
    }
}
