//! Classical Meixner polynomials, coded from their textbook forms. They
//! serve as an independent reference for the `r = 1` case.

use rug::ops::Pow;
use rug::Rational;

use crate::exactnum::{factorial_q, pochhammer_q};
use crate::poly::Poly;

/// Monic Meixner polynomials from the classical three-term recurrence
/// `p_{n+1} = (x - (n + (n+beta)c)/(1-c)) p_n - c n (n+beta-1)/(1-c)^2 p_{n-1}`.
pub fn monic_meixner_sequence(n_max: usize, beta: &Rational, c: &Rational) -> Vec<Poly> {
    let one_minus = Rational::from(1 - c);
    let mut out = vec![Poly::one()];
    for n in 0..n_max {
        let nq = Rational::from(n as i64);
        let shift = (Rational::from(&nq + beta) * c + &nq) / &one_minus;
        let lin = Poly::from_coeffs(vec![-shift, Rational::from(1)]);
        let mut next = &lin * &out[n];
        if n > 0 {
            let coef =
                Rational::from(c * &nq) * (Rational::from(&nq - 1) + beta) / Rational::from(&one_minus * &one_minus);
            next = &next - &out[n - 1].scale(&coef);
        }
        out.push(next);
    }
    out
}

/// `M_n(x; beta, c) = 2F1(-n, -x; beta; 1 - 1/c)` as a polynomial in `x`.
pub fn meixner_poly(n: usize, beta: &Rational, c: &Rational) -> Poly {
    let z = Rational::from(1) - Rational::from(c.recip_ref());
    let mut acc = Poly::zero();
    let mut zj = Rational::from(1);
    for j in 0..=n {
        // (-n)_j (-x)_j / ((beta)_j j!) z^j, with (-x)_j = (-1)^j x(x-1)..(x-j+1)
        let mut coef = pochhammer_q(&Rational::from(-(n as i64)), j as u64) * &zj
            / (pochhammer_q(beta, j as u64) * factorial_q(j as u64));
        if j % 2 == 1 {
            coef = -coef;
        }
        acc = &acc + &Poly::falling_factorial(j).scale(&coef);
        zj *= &z;
    }
    acc
}

/// Orthogonality weight `(1-c)^beta (beta)_k c^k / k!` without the `(1-c)^beta` factor.
pub fn meixner_weight_rational_part(k: u64, beta: &Rational, c: &Rational) -> Rational {
    pochhammer_q(beta, k) * c.clone().pow(k as i32) / factorial_q(k)
}
