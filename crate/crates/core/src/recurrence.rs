//! The polynomial families `P_n`, `P̂_n` and `M_n` built from the order-(d+1)
//! recurrence, plus the lowering operator.

use rug::{Float, Rational};

use crate::params::MeixnerParams;
use crate::poly::Poly;
use crate::qpoly::{beta_poch, monic_gamma_ni, RecurrenceData};

/// Which normalization a [`PolySeq`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `P_n = P̂_n / sqrt(n! (beta)_n)`; irrational in general, so never stored exactly.
    P,
    /// Monic `P̂_n`.
    Phat,
    /// Meixner type `M_n = P̂_n / (beta)_n`.
    M,
}

/// A sequence of exact polynomials `entries[n]` of degree `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolySeq {
    pub entries: Vec<Poly>,
    pub normalization: Normalization,
    pub beta: Rational,
}

impl PolySeq {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<&Poly> {
        self.entries.get(n)
    }

    /// Converts a monic sequence to the Meixner-type normalization.
    pub fn to_meixner_type(&self) -> PolySeq {
        assert_eq!(self.normalization, Normalization::Phat, "conversion starts from the monic family");
        let entries =
            self.entries.iter().enumerate().map(|(n, p)| p.scale(&beta_poch(&self.beta, n).recip())).collect();
        PolySeq { entries, normalization: Normalization::M, beta: self.beta.clone() }
    }

    /// `P_n(x) = P̂_n(x) / sqrt(n!(beta)_n)` evaluated in floating point.
    pub fn eval_orthonormal(&self, n: usize, x: &Float) -> Float {
        assert_eq!(self.normalization, Normalization::Phat);
        let norm = crate::qpoly::lowering_ratio(&self.beta, n, n);
        self.entries[n].eval_float(x) / Float::with_val(x.prec(), &norm).sqrt()
    }
}

/// `P̂_0 = 1`, `P̂_{n+1}(k) = (k + beta/2) P̂_n(k) - sum_{i<=min(n,d)} ĝ_{n,i} P̂_{n-i}(k)`.
pub fn build_monic_sequence(data: &RecurrenceData, n_max: usize) -> PolySeq {
    let half_beta = Rational::from(&data.beta / 2);
    let lin = Poly::from_coeffs(vec![half_beta, Rational::from(1)]);
    let mut entries = vec![Poly::one()];
    for n in 0..n_max {
        let g = monic_gamma_ni(data, n);
        let mut next = &lin * &entries[n];
        for (i, gi) in g.iter().enumerate().take(n.min(data.d()) + 1) {
            if *gi != 0 {
                next = &next - &entries[n - i].scale(gi);
            }
        }
        entries.push(next);
    }
    PolySeq { entries, normalization: Normalization::Phat, beta: data.beta.clone() }
}

/// Meixner-type family `M_0..M_{n_max}` for the given parameters.
pub fn meixner_type_sequence(params: &MeixnerParams, n_max: usize) -> PolySeq {
    build_monic_sequence(&params.recurrence_data(), n_max).to_meixner_type()
}

/// `M_n(x; beta, c, d) = P̂_n(x) / (beta)_n`.
pub fn meixner_type_value(n: usize, x: &Rational, params: &MeixnerParams) -> Rational {
    meixner_type_sequence(params, n).entries[n].eval(x)
}

/// `(σf)(x) = x (f(x+1) - 2 f(x) + f(x-1)) + beta (f(x+1) - f(x))`.
pub fn apply_lowering(f: &Poly, beta: &Rational) -> Poly {
    let fwd = f.shift(&Rational::from(1));
    let back = f.shift(&Rational::from(-1));
    let second = &(&fwd - &f.scale(&Rational::from(2))) + &back;
    let first = &fwd - f;
    &second.mul_x_pow(1) + &first.scale(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::monic_meixner_sequence;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn first_entries() {
        let p = MeixnerParams::from_ratios(2, (3, 2), (1, 2)).unwrap();
        let seq = build_monic_sequence(&p.recurrence_data(), 2);
        assert_eq!(seq.entries[0], Poly::one());
        assert_eq!(seq.entries[1], Poly::from_coeffs(vec![q(3, 2), q(1, 1)]));
        // generating-function value: x^2 + (2 beta + 1) x + 5 beta (beta + 1)
        assert_eq!(seq.entries[2], Poly::from_coeffs(vec![q(75, 4), q(4, 1), q(1, 1)]));
    }

    #[test]
    fn r1_matches_classical_recurrence() {
        for (b, c) in [((1, 1), (1, 2)), ((5, 2), (1, 4))] {
            let p = MeixnerParams::from_ratios(1, b, c).unwrap();
            let seq = build_monic_sequence(&p.recurrence_data(), 10);
            assert_eq!(seq.entries, monic_meixner_sequence(10, &p.beta, &p.c));
        }
    }

    #[test]
    fn meixner_type_first_values() {
        let x = q(7, 3);
        for r in 1..=3 {
            let p = MeixnerParams::from_ratios(r, (3, 2), (1, 4)).unwrap();
            assert_eq!(meixner_type_value(0, &x, &p), 1);
            let m1 = meixner_type_value(1, &x, &p);
            let expect = if r == 1 {
                Rational::from(&x / &p.beta) - (&p.c / Rational::from(1 - &p.c))
            } else {
                Rational::from(&x / &p.beta) + 1
            };
            assert_eq!(m1, expect, "r={r}");
        }
    }

    #[test]
    fn lowering_examples() {
        let beta = q(5, 2);
        assert!(apply_lowering(&Poly::one(), &beta).is_zero());
        assert_eq!(apply_lowering(&Poly::x(), &beta), Poly::constant(beta.clone()));
        let p = MeixnerParams::from_ratios(2, (5, 2), (1, 2)).unwrap();
        let seq = build_monic_sequence(&p.recurrence_data(), 6);
        for n in 1..=6 {
            let factor = Rational::from(n as i64) * (Rational::from(n as i64 - 1) + &beta);
            assert_eq!(apply_lowering(&seq.entries[n], &beta), seq.entries[n - 1].scale(&factor));
        }
    }

    #[test]
    fn meixner_normalization() {
        let p = MeixnerParams::from_ratios(2, (3, 2), (1, 2)).unwrap();
        let m = meixner_type_sequence(&p, 4);
        assert_eq!(m.normalization, Normalization::M);
        assert_eq!(m.entries[1].leading(), Some(&q(2, 3)));
    }
}
