//! The structure polynomial `Q` and the recurrence coefficients derived from it.
//!
//! Conjugating `J0` by `S = exp(J+) exp(Q(J-))` gives
//!
//! ```text
//! S^-1 J0 S = J+ + J0 (1 - 2Q'(J-)) + J- (Q'(J-)^2 - Q'(J-) - Q''(J-))
//! ```
//!
//! so the recurrence is driven by the coefficient lists
//! `a = coeffs(1 - 2Q'(x))` and `b = coeffs(x (Q'^2 - Q' - Q''))`, both of
//! length `d + 1` with `d = 2r - 1`.

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::exactnum::pochhammer_q;
use crate::poly::Poly;

/// `Q(z) = q_1 z + ... + q_r z^r`, with `q_r != 0` and no constant term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructurePolynomial {
    coeffs: Vec<Rational>,
}

impl StructurePolynomial {
    /// Builds `Q` from `q_1..q_r`.
    pub fn new(coeffs: Vec<Rational>) -> Result<Self> {
        match coeffs.last() {
            None => Err(Error::Domain("structure polynomial needs degree r >= 1".into())),
            Some(l) if *l == 0 => Err(Error::Domain("leading coefficient q_r must be nonzero".into())),
            Some(_) => Ok(StructurePolynomial { coeffs }),
        }
    }

    /// Accepts a polynomial with zero constant term.
    pub fn from_poly(p: &Poly) -> Result<Self> {
        if p.coeff(0) != 0 {
            return Err(Error::Domain("Q(0) must be 0".into()));
        }
        StructurePolynomial::new(p.coeffs().iter().skip(1).cloned().collect())
    }

    /// `q_1..q_r`.
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn r(&self) -> usize {
        self.coeffs.len()
    }

    pub fn d(&self) -> usize {
        2 * self.r() - 1
    }

    pub fn poly(&self) -> Poly {
        let mut c = vec![Rational::new()];
        c.extend(self.coeffs.iter().cloned());
        Poly::from_coeffs(c)
    }
}

/// `Q(z) = z + (-1)^r z^r / (1 - c)`; for `r = 1` the two terms merge into `c/(c-1) z`.
pub fn meixner_q(r: usize, c: &Rational) -> Result<StructurePolynomial> {
    if r == 0 {
        return Err(Error::Domain("r must be >= 1".into()));
    }
    check_c(c)?;
    let mut coeffs = vec![Rational::new(); r];
    coeffs[0] += 1;
    let top = Rational::from(1) / Rational::from(1 - c);
    if r % 2 == 0 {
        coeffs[r - 1] += top;
    } else {
        coeffs[r - 1] -= top;
    }
    StructurePolynomial::new(coeffs)
}

pub(crate) fn check_c(c: &Rational) -> Result<()> {
    if *c <= 0 || *c >= 1 {
        return Err(Error::Domain(format!("c must lie in the open interval (0,1), got {c}")));
    }
    Ok(())
}

/// The coefficient lists driving the order-(d+1) recurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceData {
    /// Coefficients of `1 - 2Q'(x)`, padded to `d + 1`.
    pub a: Vec<Rational>,
    /// Coefficients of `x (Q'(x)^2 - Q'(x) - Q''(x))`, padded to `d + 1`.
    pub b: Vec<Rational>,
    pub beta: Rational,
    pub r: usize,
}

impl RecurrenceData {
    pub fn d(&self) -> usize {
        2 * self.r - 1
    }
}

/// Synthesizes `a_i`, `b_i` from `Q`. Rejects `Q` with `a_{r-1} b_d = 0`.
pub fn derive_recurrence_data(q: &StructurePolynomial, beta: &Rational) -> Result<RecurrenceData> {
    if *beta <= 0 {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let r = q.r();
    let d = q.d();
    let qp = q.poly().derivative();
    let qpp = qp.derivative();
    let a_poly = &Poly::one() - &qp.scale(&Rational::from(2));
    let b_poly = (&(&(&qp * &qp) - &qp) - &qpp).mul_x_pow(1);
    let a: Vec<Rational> = (0..=d).map(|i| a_poly.coeff(i)).collect();
    let b: Vec<Rational> = (0..=d).map(|i| b_poly.coeff(i)).collect();
    if a[r - 1] == 0 {
        return Err(Error::DegenerateQ(format!("a_{} = 0", r - 1)));
    }
    if b[d] == 0 {
        return Err(Error::DegenerateQ(format!("b_{d} = 0")));
    }
    Ok(RecurrenceData { a, b, beta: beta.clone(), r })
}

/// `n! (beta)_n / ((n-i)! (beta)_{n-i})`, the square of the `J-^i` matrix-element norm ratio.
pub fn lowering_ratio(beta: &Rational, n: usize, i: usize) -> Rational {
    if i > n {
        return Rational::new();
    }
    let mut acc = Rational::from(1);
    for l in 0..i {
        let m = (n - l) as u64;
        acc *= m;
        acc *= Rational::from(beta + (m - 1));
    }
    acc
}

/// A number of the form `coeff * sqrt(radicand)`, with both parts exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqrtScaled {
    pub coeff: Rational,
    pub radicand: Rational,
}

impl SqrtScaled {
    pub fn square(&self) -> Rational {
        Rational::from(&self.coeff * &self.coeff) * &self.radicand
    }

    pub fn to_float(&self, prec: u32) -> Float {
        let s = Float::with_val(prec, &self.radicand).sqrt();
        s * Float::with_val(prec, &self.coeff)
    }
}

fn prefactor(data: &RecurrenceData, n: usize, i: usize) -> Rational {
    let half_beta = Rational::from(&data.beta / 2);
    let shift = Rational::from(n as i64 - i as i64) + half_beta;
    Rational::from(&data.a[i] * &shift) + &data.b[i]
}

/// `gamma_{n,i} = (a_i (n - i + beta/2) + b_i) sqrt(n!(beta)_n / ((n-i)!(beta)_{n-i}))`
/// for `i = 0..=d`; entries with `i > n` are zero.
pub fn gamma_ni(data: &RecurrenceData, n: usize) -> Vec<SqrtScaled> {
    (0..=data.d())
        .map(|i| {
            if i > n {
                SqrtScaled { coeff: Rational::new(), radicand: Rational::new() }
            } else {
                SqrtScaled { coeff: prefactor(data, n, i), radicand: lowering_ratio(&data.beta, n, i) }
            }
        })
        .collect()
}

/// Rational coefficients of the monic recurrence
/// `(k + beta/2) P̂_n = P̂_{n+1} + sum_i ĝ_{n,i} P̂_{n-i}`.
pub fn monic_gamma_ni(data: &RecurrenceData, n: usize) -> Vec<Rational> {
    (0..=data.d())
        .map(|i| if i > n { Rational::new() } else { prefactor(data, n, i) * lowering_ratio(&data.beta, n, i) })
        .collect()
}

/// `(beta)_n` as a rational; re-exported here for the normalization helpers.
pub fn beta_poch(beta: &Rational, n: usize) -> Rational {
    pochhammer_q(beta, n as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn meixner_q_examples() {
        let c = q(1, 3);
        let r1 = meixner_q(1, &c).unwrap();
        assert_eq!(r1.coeffs(), &[(&c / Rational::from(&c - 1))]);
        assert_eq!(meixner_q(2, &q(1, 2)).unwrap().coeffs(), &[q(1, 1), q(2, 1)]);
        assert_eq!(meixner_q(3, &q(1, 2)).unwrap().coeffs(), &[q(1, 1), q(0, 1), q(-2, 1)]);
        assert!(matches!(meixner_q(2, &q(2, 1)), Err(Error::Domain(_))));
        assert!(matches!(meixner_q(2, &q(0, 1)), Err(Error::Domain(_))));
    }

    #[test]
    fn recurrence_data_r1() {
        let c = q(1, 4);
        let beta = q(3, 2);
        let data = derive_recurrence_data(&meixner_q(1, &c).unwrap(), &beta).unwrap();
        let one_minus = Rational::from(1 - &c);
        assert_eq!(data.a, vec![Rational::from(1 + &c) / &one_minus, q(0, 1)]);
        let cm1 = Rational::from(&c - 1);
        assert_eq!(data.b, vec![q(0, 1), (&c / Rational::from(&cm1 * &cm1))]);
    }

    #[test]
    fn recurrence_data_r2() {
        let data = derive_recurrence_data(&meixner_q(2, &q(1, 2)).unwrap(), &q(3, 2)).unwrap();
        assert_eq!(data.a, vec![q(-1, 1), q(-8, 1), q(0, 1), q(0, 1)]);
        // Q' = 1 + 4z, Q'' = 4: x(Q'^2 - Q' - Q'') = -4x + 4x^2 + 16x^3
        assert_eq!(data.b, vec![q(0, 1), q(-4, 1), q(4, 1), q(16, 1)]);
    }

    #[test]
    fn degenerate_q_rejected() {
        let identity = StructurePolynomial::new(vec![q(1, 1)]).unwrap();
        assert!(matches!(derive_recurrence_data(&identity, &q(1, 1)), Err(Error::DegenerateQ(_))));
        // Q = z/2 gives 1 - 2Q' = 0, so a_0 vanishes
        let half = StructurePolynomial::new(vec![q(1, 2)]).unwrap();
        assert!(matches!(derive_recurrence_data(&half, &q(1, 1)), Err(Error::DegenerateQ(_))));
        assert!(StructurePolynomial::new(vec![q(1, 1), q(0, 1)]).is_err());
    }

    #[test]
    fn nonzero_pattern_of_a() {
        for r in 1..=4 {
            for c in [q(1, 2), q(1, 4)] {
                let data = derive_recurrence_data(&meixner_q(r, &c).unwrap(), &q(1, 1)).unwrap();
                for (i, ai) in data.a.iter().enumerate() {
                    assert_eq!(*ai != 0, i == 0 || i == r - 1, "r={r} i={i}");
                }
                assert!(data.b[data.d()] != 0);
            }
        }
    }

    #[test]
    fn gamma_examples() {
        let data = derive_recurrence_data(&meixner_q(2, &q(1, 2)).unwrap(), &q(3, 2)).unwrap();
        let g0 = monic_gamma_ni(&data, 0);
        assert_eq!(g0[0], q(-3, 4));
        assert!(g0[1..].iter().all(|g| *g == 0));
        let s0 = gamma_ni(&data, 0);
        assert!(s0[1..].iter().all(|g| g.square() == 0));

        let c = q(1, 2);
        let beta = q(5, 2);
        let data = derive_recurrence_data(&meixner_q(1, &c).unwrap(), &beta).unwrap();
        for n in 0..6usize {
            let g = monic_gamma_ni(&data, n);
            let nb = Rational::from(n as i64) + Rational::from(&beta / 2);
            assert_eq!(g[0], Rational::from(1 + &c) / Rational::from(1 - &c) * nb);
            let cm1 = Rational::from(&c - 1);
            let expect =
                (&c / Rational::from(&cm1 * &cm1)) * Rational::from(n as i64) * (Rational::from(n as i64 - 1) + &beta);
            assert_eq!(g[1], expect);
        }
    }

    #[test]
    fn sqrt_form_squares_to_monic() {
        for r in 1..=3 {
            let data = derive_recurrence_data(&meixner_q(r, &q(1, 4)).unwrap(), &q(3, 2)).unwrap();
            for n in 0..=20 {
                let g = gamma_ni(&data, n);
                let gh = monic_gamma_ni(&data, n);
                for i in 0..=data.d().min(n) {
                    let pre = prefactor(&data, n, i);
                    assert_eq!(g[i].square(), Rational::from(&gh[i] * &pre));
                }
            }
        }
    }
}
