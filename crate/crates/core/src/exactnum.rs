//! Arithmetic kernel.
//!
//! Two number modes coexist: exact rationals (GMP `mpq`) for everything that
//! terminates, and fixed-precision binary floats (MPFR) for quantities that
//! involve Γ at fractional arguments, square roots or fractional powers.
//! The mode of a [`Scalar`] is always explicit.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Round;
use rug::ops::Pow;
use rug::{Assign, Complete, Float, Integer, Rational};

use crate::error::{Error, Result};

/// Default working precision in bits for the floating mode.
pub const DEFAULT_PRECISION: u32 = 256;

/// A number that is either an exact rational or a big-precision float.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Real(Float),
}

impl Scalar {
    pub fn exact(v: impl Into<Rational>) -> Self {
        Scalar::Exact(v.into())
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Scalar::Exact(Rational::from((num, den)))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    /// Precision carried by a float scalar; `None` for exact values.
    pub fn precision(&self) -> Option<u32> {
        match self {
            Scalar::Exact(_) => None,
            Scalar::Real(f) => Some(f.prec()),
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Real(_) => None,
        }
    }

    pub fn to_float(&self, prec: u32) -> Float {
        match self {
            Scalar::Exact(q) => Float::with_val(prec, q),
            Scalar::Real(f) => Float::with_val(prec, f),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => *q == 0,
            Scalar::Real(f) => f.is_zero(),
        }
    }

    /// `Some(n)` when the value is an integer `<= 0`, i.e. `-n` with `n >= 0`.
    pub fn nonpositive_integer(&self) -> Option<u64> {
        match self {
            Scalar::Exact(q) => nonpositive_integer(q),
            Scalar::Real(f) => {
                if f.is_integer() && *f <= 0 {
                    f.to_integer().and_then(|i| (-i).to_u64())
                } else {
                    None
                }
            }
        }
    }

    fn binary(
        &self,
        rhs: &Scalar,
        exact: impl Fn(&Rational, &Rational) -> Rational,
        real: impl Fn(Float, &Float) -> Float,
    ) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(exact(a, b)),
            _ => {
                let prec = self.precision().max(rhs.precision()).unwrap_or(DEFAULT_PRECISION);
                Scalar::Real(real(self.to_float(prec), &rhs.to_float(prec)))
            }
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => write!(f, "{q}"),
            Scalar::Real(x) => write!(f, "{}", float_to_string(x, digits_for_bits(x.prec()))),
        }
    }
}

impl From<Rational> for Scalar {
    fn from(q: Rational) -> Self {
        Scalar::Exact(q)
    }
}

impl From<Float> for Scalar {
    fn from(x: Float) -> Self {
        Scalar::Real(x)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Exact(Rational::from(v))
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        self.binary(rhs, |a, b| Rational::from(a + b), |a, b| a + b)
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self.binary(rhs, |a, b| Rational::from(a - b), |a, b| a - b)
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        self.binary(rhs, |a, b| Rational::from(a * b), |a, b| a * b)
    }
}

impl Div for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        self.binary(rhs, |a, b| Rational::from(a / b), |a, b| a / b)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(Rational::from(-q)),
            Scalar::Real(x) => Scalar::Real(Float::with_val(x.prec(), -x)),
        }
    }
}

/// `Some(n)` when `q == -n` for an integer `n >= 0`.
pub fn nonpositive_integer(q: &Rational) -> Option<u64> {
    if *q.denom() == 1 && *q <= 0 {
        Integer::from(-q.numer()).to_u64()
    } else {
        None
    }
}

/// Rising factorial `(a)_n = a (a+1) ... (a+n-1)`, `(a)_0 = 1`.
pub fn pochhammer(a: &Scalar, n: u64) -> Scalar {
    match a {
        Scalar::Exact(q) => Scalar::Exact(pochhammer_q(q, n)),
        Scalar::Real(x) => {
            let mut acc = Float::with_val(x.prec(), 1);
            let mut t = Float::with_val(x.prec(), x);
            for _ in 0..n {
                acc *= &t;
                t += 1;
            }
            Scalar::Real(acc)
        }
    }
}

/// Exact rising factorial on rationals.
pub fn pochhammer_q(a: &Rational, n: u64) -> Rational {
    let mut acc = Rational::from(1);
    let mut t = a.clone();
    for _ in 0..n {
        acc *= &t;
        if acc == 0 {
            break;
        }
        t += 1;
    }
    acc
}

pub fn factorial_q(n: u64) -> Rational {
    Rational::from(Integer::factorial(n as u32).complete())
}

/// Parameters of a generalized hypergeometric series `pFq(upper; lower; argument)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypSpec {
    pub upper: Vec<Scalar>,
    pub lower: Vec<Scalar>,
    pub argument: Scalar,
}

impl HypSpec {
    pub fn new(upper: Vec<Scalar>, lower: Vec<Scalar>, argument: Scalar) -> Self {
        HypSpec { upper, lower, argument }
    }

    /// Exact-rational convenience constructor.
    pub fn rational(upper: &[Rational], lower: &[Rational], argument: Rational) -> Self {
        HypSpec {
            upper: upper.iter().cloned().map(Scalar::Exact).collect(),
            lower: lower.iter().cloned().map(Scalar::Exact).collect(),
            argument: Scalar::Exact(argument),
        }
    }

    fn check_lower(&self) -> Result<()> {
        for (index, b) in self.lower.iter().enumerate() {
            if b.nonpositive_integer().is_some() {
                return Err(Error::InvalidLowerParameter { index, param: b.to_string() });
            }
        }
        Ok(())
    }

    /// Number of terms of a terminating series, if it terminates.
    pub fn terminating_length(&self) -> Option<u64> {
        self.upper.iter().filter_map(Scalar::nonpositive_integer).min().map(|n| n + 1)
    }

    fn all_exact(&self) -> bool {
        self.upper.iter().chain(&self.lower).chain(std::iter::once(&self.argument)).all(Scalar::is_exact)
    }

    fn working_precision(&self) -> u32 {
        self.upper
            .iter()
            .chain(&self.lower)
            .chain(std::iter::once(&self.argument))
            .filter_map(Scalar::precision)
            .max()
            .unwrap_or(DEFAULT_PRECISION)
    }
}

/// Evaluation strategy for [`hyp_pfq`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HypMode {
    /// Exact finite sum; requires a non-positive integer upper parameter.
    Terminating,
    /// Partial sums until `|term| < tail_tol` holds for 3 consecutive terms.
    Truncated { max_terms: usize, tail_tol: f64, prec: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypValue {
    pub value: Scalar,
    pub terms: usize,
}

/// Generalized hypergeometric series `sum_m (a_1)_m..(a_p)_m / ((b_1)_m..(b_q)_m) z^m / m!`.
pub fn hyp_pfq(spec: &HypSpec, mode: HypMode) -> Result<HypValue> {
    spec.check_lower()?;
    match mode {
        HypMode::Terminating => {
            let len = spec.terminating_length().ok_or(Error::NotTerminating)?;
            if spec.all_exact() {
                let up: Vec<Rational> = spec.upper.iter().map(|s| s.as_rational().unwrap().clone()).collect();
                let lo: Vec<Rational> = spec.lower.iter().map(|s| s.as_rational().unwrap().clone()).collect();
                let z = spec.argument.as_rational().unwrap();
                Ok(HypValue { value: Scalar::Exact(terminating_sum_q(&up, &lo, z, len)), terms: len as usize })
            } else {
                let prec = spec.working_precision();
                let (value, terms) = float_series(spec, prec, |m, _| m as u64 >= len, usize::MAX)?;
                Ok(HypValue { value: Scalar::Real(value), terms })
            }
        }
        HypMode::Truncated { max_terms, tail_tol, prec } => {
            let tol = Float::with_val(prec, tail_tol);
            let mut small_run = 0usize;
            let (value, terms) = float_series(
                spec,
                prec,
                |_, term| {
                    if Float::with_val(prec, term.abs_ref()) < tol {
                        small_run += 1;
                    } else {
                        small_run = 0;
                    }
                    small_run >= 3
                },
                max_terms,
            )?;
            Ok(HypValue { value: Scalar::Real(value), terms })
        }
    }
}

/// Sums the series in floating point. `stop(m, term_m)` is consulted after term `m` is added.
fn float_series(
    spec: &HypSpec,
    prec: u32,
    mut stop: impl FnMut(usize, &Float) -> bool,
    max_terms: usize,
) -> Result<(Float, usize)> {
    let up: Vec<Float> = spec.upper.iter().map(|s| s.to_float(prec)).collect();
    let lo: Vec<Float> = spec.lower.iter().map(|s| s.to_float(prec)).collect();
    let z = spec.argument.to_float(prec);
    let mut term = Float::with_val(prec, 1);
    let mut sum = Float::with_val(prec, 0);
    let mut m = 0usize;
    loop {
        if m >= max_terms {
            return Err(Error::NonConvergent { max_terms });
        }
        sum += &term;
        if stop(m, &term) {
            return Ok((sum, m + 1));
        }
        for a in &up {
            term *= Float::with_val(prec, a + m as u64);
        }
        for b in &lo {
            term /= Float::with_val(prec, b + m as u64);
        }
        term *= &z;
        term /= (m + 1) as u64;
        m += 1;
        // a terminating series in the float path stops once the product hits an exact zero
        if term.is_zero() && spec.terminating_length().is_some_and(|l| m as u64 >= l) {
            return Ok((sum, m));
        }
    }
}

/// Exact sum of the first `len` terms of a rational-parameter series.
pub fn terminating_sum_q(upper: &[Rational], lower: &[Rational], z: &Rational, len: u64) -> Rational {
    // Horner from the innermost term keeps every intermediate a single fraction.
    let mut acc = Rational::from(1);
    for m in (0..len.saturating_sub(1)).rev() {
        let mut ratio = z.clone();
        for a in upper {
            ratio *= Rational::from(a + m);
        }
        for b in lower {
            ratio /= Rational::from(b + m);
        }
        ratio /= m + 1;
        acc *= ratio;
        acc += 1;
    }
    acc
}

/// Γ(x) for real `x > 0`, correctly rounded at the precision of `x`.
pub fn gamma_real(x: &Float) -> Result<Float> {
    if !(x.is_finite() && *x > 0) {
        return Err(Error::Domain(format!("gamma_real requires x > 0, got {}", x.to_f64())));
    }
    Ok(Float::with_val(x.prec(), x.gamma_ref()))
}

/// Generalized Laguerre polynomial `L_k^(alpha)(x) = (alpha+1)_k / k! * 1F1(-k; alpha+1; x)`.
pub fn laguerre(k: u64, alpha: &Scalar, x: &Scalar) -> Result<Scalar> {
    let one = Scalar::from(1);
    let b = alpha + &one;
    let spec = HypSpec::new(vec![Scalar::from(-(k as i64))], vec![b.clone()], x.clone());
    let h = hyp_pfq(&spec, HypMode::Terminating)?.value;
    let norm = &pochhammer(&b, k) / &Scalar::Exact(factorial_q(k));
    Ok(&norm * &h)
}

/// Accumulates a floating sum and remembers the largest term magnitude, so
/// the number of bits lost to cancellation can be measured afterwards.
#[derive(Debug, Clone)]
pub struct TrackedSum {
    sum: Float,
    peak_exp: Option<i32>,
}

impl TrackedSum {
    pub fn new(prec: u32) -> Self {
        TrackedSum { sum: Float::with_val(prec, 0), peak_exp: None }
    }

    pub fn add(&mut self, term: &Float) {
        if let Some(e) = term.get_exp() {
            self.peak_exp = Some(self.peak_exp.map_or(e, |p| p.max(e)));
        }
        self.sum += term;
    }

    /// Folds another tracked sum scaled by `factor` into this one.
    pub fn add_scaled(&mut self, other: &TrackedSum, factor: &Float) {
        let scaled = Float::with_val(self.sum.prec(), &other.sum * factor);
        if let (Some(p), Some(fe)) = (other.peak_exp, factor.get_exp()) {
            let e = p + fe;
            self.peak_exp = Some(self.peak_exp.map_or(e, |q| q.max(e)));
        }
        self.sum += scaled;
    }

    /// Bits of cancellation between the largest term and the final sum.
    /// A zero sum with nonzero terms reports the full precision as lost.
    pub fn lost_bits(&self) -> u32 {
        match (self.peak_exp, self.sum.get_exp()) {
            (Some(p), Some(s)) => (p - s).max(0) as u32,
            (Some(_), None) => self.sum.prec(),
            _ => 0,
        }
    }

    pub fn value(&self) -> &Float {
        &self.sum
    }

    pub fn into_value(self) -> Float {
        self.sum
    }
}

/// Result of a computation run under adaptive precision.
#[derive(Debug, Clone)]
pub struct Adaptive<T> {
    pub value: T,
    pub precision_used: u32,
    pub lost_bits: u32,
}

/// Re-runs `f` with more working bits until the cancellation it reports
/// leaves at least `target` accurate bits. `f(prec)` returns the value and
/// the number of bits it lost.
pub fn with_adaptive_precision<T>(target: u32, mut f: impl FnMut(u32) -> (T, u32)) -> Adaptive<T> {
    const GUARD: u32 = 32;
    const MAX_ROUNDS: usize = 8;
    let mut prec = target + 2 * GUARD;
    let mut round = 0;
    loop {
        let (value, lost) = f(prec);
        round += 1;
        if prec >= target + lost + GUARD || round >= MAX_ROUNDS {
            return Adaptive { value, precision_used: prec, lost_bits: lost };
        }
        prec = (target + lost + 2 * GUARD).max(prec + prec / 2);
    }
}

/// Parses `"p/q"`, an integer, or a plain decimal such as `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if let Some((int, frac)) = t.split_once('.') {
        if !frac.is_empty() && frac.chars().all(|c| c.is_ascii_digit()) {
            let neg = int.starts_with('-');
            let int_part: Integer = if int.is_empty() || int == "-" || int == "+" {
                Integer::new()
            } else {
                Integer::parse(int).map_err(|e| Error::Domain(format!("bad number {s:?}: {e}")))?.complete()
            };
            let scale = Integer::from(10).pow(frac.len() as u32);
            let frac_part =
                Integer::parse(frac).map_err(|e| Error::Domain(format!("bad number {s:?}: {e}")))?.complete();
            let mut q = Rational::from((int_part.abs() * &scale + frac_part, scale));
            if neg {
                q = -q;
            }
            return Ok(q);
        }
    }
    Rational::parse(t).map(|p| p.complete()).map_err(|e| Error::Domain(format!("bad rational {s:?}: {e}")))
}

/// Decimal digits carried by `bits` binary digits.
pub fn digits_for_bits(bits: u32) -> usize {
    ((bits as f64) * std::f64::consts::LOG10_2).floor() as usize
}

/// Scientific-notation rendering with an explicit number of significant digits.
pub fn float_to_string(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix_round(10, Some(digits.max(1)), Round::Nearest)
}

/// `x^p` for positive `x` and a rational exponent, at precision `prec`.
pub fn pow_rational(x: &Rational, p: &Rational, prec: u32) -> Float {
    let base = Float::with_val(prec, x);
    let e = Float::with_val(prec, p);
    base.pow(e)
}

/// Square root of a nonnegative rational at precision `prec`.
pub fn sqrt_rational(x: &Rational, prec: u32) -> Float {
    Float::with_val(prec, x).sqrt()
}

/// Absolute value helper that keeps precision.
pub fn abs_float(x: &Float) -> Float {
    let mut y = Float::new(x.prec());
    y.assign(x.abs_ref());
    y
}
