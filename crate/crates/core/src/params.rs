use rug::Rational;

use crate::error::{Error, Result};
use crate::qpoly::{check_c, derive_recurrence_data, meixner_q, RecurrenceData, StructurePolynomial};

/// A Meixner-type instance: `Q(z) = z + (-1)^r z^r / (1 - c)`, `d = 2r - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeixnerParams {
    pub r: usize,
    pub beta: Rational,
    pub c: Rational,
}

impl MeixnerParams {
    pub fn new(r: usize, beta: Rational, c: Rational) -> Result<Self> {
        if r == 0 {
            return Err(Error::Domain("r must be >= 1".into()));
        }
        if beta <= 0 {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        check_c(&c)?;
        Ok(MeixnerParams { r, beta, c })
    }

    /// Shorthand for small integer fractions, e.g. `from_ratios(2, (3, 2), (1, 2))`.
    pub fn from_ratios(r: usize, beta: (i64, i64), c: (i64, i64)) -> Result<Self> {
        MeixnerParams::new(r, Rational::from(beta), Rational::from(c))
    }

    pub fn d(&self) -> usize {
        2 * self.r - 1
    }

    pub fn structure(&self) -> StructurePolynomial {
        meixner_q(self.r, &self.c).expect("validated parameters")
    }

    pub fn recurrence_data(&self) -> RecurrenceData {
        derive_recurrence_data(&self.structure(), &self.beta).expect("Meixner-type Q is never degenerate")
    }
}

impl std::fmt::Display for MeixnerParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "r={} beta={} c={}", self.r, self.beta, self.c)
    }
}
