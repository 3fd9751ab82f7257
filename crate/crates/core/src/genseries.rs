//! Truncated formal power series in `z` whose coefficients are polynomials in `x`.
//!
//! The monic family is recovered from its generating function
//! `sum_n P̂_n(x) z^n / (n! (beta)_n) = exp(Q(z)) 1F1(-x; beta; -z)`.

use rug::Rational;
use serde::Serialize;

use crate::exactnum::{factorial_q, pochhammer_q};
use crate::poly::Poly;
use crate::qpoly::StructurePolynomial;
use crate::recurrence::{Normalization, PolySeq};

/// `sum_{m <= order} coeffs[m] z^m`, exact, higher orders discarded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalSeries {
    coeffs: Vec<Poly>,
}

impl FormalSeries {
    pub fn zero(order: usize) -> Self {
        FormalSeries { coeffs: vec![Poly::zero(); order + 1] }
    }

    pub fn from_coeffs(coeffs: Vec<Poly>) -> Self {
        assert!(!coeffs.is_empty(), "a series keeps at least the constant term");
        FormalSeries { coeffs }
    }

    /// Series whose coefficients are the constants of `p` (as a polynomial in `z`).
    pub fn from_z_poly(p: &Poly, order: usize) -> Self {
        FormalSeries { coeffs: (0..=order).map(|m| Poly::constant(p.coeff(m))).collect() }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, m: usize) -> &Poly {
        &self.coeffs[m]
    }

    pub fn coeffs(&self) -> &[Poly] {
        &self.coeffs
    }

    pub fn add(&self, other: &FormalSeries) -> FormalSeries {
        let order = self.order().min(other.order());
        FormalSeries { coeffs: (0..=order).map(|m| &self.coeffs[m] + &other.coeffs[m]).collect() }
    }

    /// Cauchy product truncated at the smaller order.
    pub fn mul(&self, other: &FormalSeries) -> FormalSeries {
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|m| {
                (0..=m).fold(Poly::zero(), |acc, j| {
                    if self.coeffs[j].is_zero() || other.coeffs[m - j].is_zero() {
                        acc
                    } else {
                        &acc + &(&self.coeffs[j] * &other.coeffs[m - j])
                    }
                })
            })
            .collect();
        FormalSeries { coeffs }
    }

    /// `exp(self)` for a series with zero constant term, from `m E_m = sum_j j S_j E_{m-j}`.
    pub fn exp(&self) -> FormalSeries {
        assert!(self.coeffs[0].is_zero(), "exp needs a zero constant term");
        let order = self.order();
        let mut e = vec![Poly::one()];
        for m in 1..=order {
            let mut acc = Poly::zero();
            for j in 1..=m {
                if self.coeffs[j].is_zero() {
                    continue;
                }
                acc = &acc + &(&self.coeffs[j] * &e[m - j]).scale(&Rational::from(j as u64));
            }
            e.push(acc.scale(&Rational::from((1, m as u64))));
        }
        FormalSeries { coeffs: e }
    }
}

/// Coefficients of `exp(Q(z))` to order `order`.
pub fn series_exp(q: &StructurePolynomial, order: usize) -> FormalSeries {
    FormalSeries::from_z_poly(&q.poly(), order).exp()
}

/// `1F1(-x; beta; -z)` with symbolic `x`: the `z^m` coefficient is
/// `x(x-1)...(x-m+1) / (m! (beta)_m)`.
pub fn series_kummer(beta: &Rational, order: usize) -> FormalSeries {
    let coeffs = (0..=order)
        .map(|m| {
            let denom = factorial_q(m as u64) * pochhammer_q(beta, m as u64);
            Poly::falling_factorial(m).scale(&denom.recip())
        })
        .collect();
    FormalSeries { coeffs }
}

/// `P̂_n(x) = n! (beta)_n [z^n] exp(Q(z)) 1F1(-x; beta; -z)` for `n <= n_max`.
/// The series is carried to order `n_max + r`.
pub fn extract_coefficients(q: &StructurePolynomial, beta: &Rational, n_max: usize) -> PolySeq {
    let order = n_max + q.r();
    let product = series_exp(q, order).mul(&series_kummer(beta, order));
    let entries =
        (0..=n_max).map(|n| product.coeff(n).scale(&(factorial_q(n as u64) * pochhammer_q(beta, n as u64)))).collect();
    PolySeq { entries, normalization: Normalization::Phat, beta: beta.clone() }
}

/// Outcome of the bivariate check `exp(t) 0F1(;beta;zt) = sum_m 1F1(-m;beta;-z) t^m/m!`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpKummerReport {
    pub beta: String,
    pub max_t_order: usize,
    pub max_z_order: usize,
    pub coefficients_checked: usize,
    /// `(t power, z power)` pairs where the two sides differ.
    pub mismatches: Vec<(usize, usize)>,
    pub pass: bool,
}

/// Compares both sides coefficientwise for every `t^a z^b` with `a <= m_order`,
/// `b <= k_order` and `a + b <= min(m_order, k_order)`.
pub fn verify_exp_kummer_identity(beta: &Rational, m_order: usize, k_order: usize) -> ExpKummerReport {
    let total = m_order.min(k_order);
    // left: Cauchy product in t of exp(t) with sum_b z^b t^b / (b! (beta)_b)
    let mut left = vec![vec![Rational::new(); k_order + 1]; m_order + 1];
    for a in 0..=m_order {
        let exp_coef = factorial_q(a as u64).recip();
        for b in 0..=k_order.min(m_order - a) {
            let bessel = (factorial_q(b as u64) * pochhammer_q(beta, b as u64)).recip();
            left[a + b][b] += Rational::from(&exp_coef * &bessel);
        }
    }
    // right: [z^b] 1F1(-m; beta; -z) = (-m)_b (-1)^b / (b! (beta)_b), divided by m!
    let right: Vec<Vec<Rational>> = (0..=m_order)
        .map(|m| {
            (0..=k_order)
                .map(|b| {
                    let c = pochhammer_q(&Rational::from(-(m as i64)), b as u64)
                        / (factorial_q(b as u64) * pochhammer_q(beta, b as u64) * factorial_q(m as u64));
                    if b % 2 == 1 {
                        -c
                    } else {
                        c
                    }
                })
                .collect()
        })
        .collect();
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for a in 0..=m_order {
        for b in 0..=k_order {
            if a + b > total {
                continue;
            }
            checked += 1;
            if left[a][b] != right[a][b] {
                mismatches.push((a, b));
            }
        }
    }
    ExpKummerReport {
        beta: beta.to_string(),
        max_t_order: m_order,
        max_z_order: k_order,
        coefficients_checked: checked,
        pass: mismatches.is_empty(),
        mismatches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::meixner_poly;
    use crate::params::MeixnerParams;
    use rug::ops::Pow;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn constants(s: &FormalSeries) -> Vec<Rational> {
        s.coeffs().iter().map(|p| p.coeff(0)).collect()
    }

    #[test]
    fn exp_examples() {
        let z = StructurePolynomial::new(vec![q(1, 1)]).unwrap();
        assert_eq!(constants(&series_exp(&z, 3)), vec![q(1, 1), q(1, 1), q(1, 2), q(1, 6)]);
        let z2 = StructurePolynomial::new(vec![q(1, 1), q(2, 1)]).unwrap();
        assert_eq!(constants(&series_exp(&z2, 2)), vec![q(1, 1), q(1, 1), q(5, 2)]);
        let r1 = MeixnerParams::from_ratios(1, (1, 1), (1, 2)).unwrap().structure();
        assert_eq!(constants(&series_exp(&r1, 1)), vec![q(1, 1), q(-1, 1)]);
    }

    #[test]
    fn kummer_examples() {
        let beta = q(3, 2);
        let s = series_kummer(&beta, 2);
        assert_eq!(s.coeff(0), &Poly::one());
        assert_eq!(s.coeff(1), &Poly::from_coeffs(vec![q(0, 1), q(2, 3)]));
        // x(x-1) / (2 beta (beta+1)) = x(x-1) * 2/15
        assert_eq!(s.coeff(2), &Poly::from_coeffs(vec![q(0, 1), q(-2, 15), q(2, 15)]));
    }

    #[test]
    fn extracted_low_degrees() {
        let p2 = MeixnerParams::from_ratios(2, (3, 2), (1, 2)).unwrap();
        let seq = extract_coefficients(&p2.structure(), &p2.beta, 3);
        assert_eq!(seq.entries[0], Poly::one());
        assert_eq!(seq.entries[1], Poly::from_coeffs(vec![q(3, 2), q(1, 1)]));
        let p1 = MeixnerParams::from_ratios(1, (3, 2), (1, 4)).unwrap();
        let seq = extract_coefficients(&p1.structure(), &p1.beta, 1);
        // x + beta c / (c - 1) = x - 1/2
        assert_eq!(seq.entries[1], Poly::from_coeffs(vec![q(-1, 2), q(1, 1)]));
    }

    #[test]
    fn exp_kummer_identity_holds() {
        let rep = verify_exp_kummer_identity(&q(3, 2), 8, 8);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.coefficients_checked, 45);
    }

    #[test]
    fn classical_meixner_reduction() {
        for (b, c) in [((1, 1), (1, 2)), ((3, 2), (1, 4)), ((5, 2), (1, 3))] {
            let p = MeixnerParams::from_ratios(1, b, c).unwrap();
            let seq = extract_coefficients(&p.structure(), &p.beta, 8);
            let ratio = &p.c / Rational::from(&p.c - 1);
            for n in 0..=8usize {
                let scale = ratio.clone().pow(n as i32) * pochhammer_q(&p.beta, n as u64);
                assert_eq!(seq.entries[n], meixner_poly(n, &p.beta, &p.c).scale(&scale), "{p} n={n}");
            }
        }
    }
}
