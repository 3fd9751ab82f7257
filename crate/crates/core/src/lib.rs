//! d-orthogonal polynomials of Meixner type attached to the su(1,1) discrete series.
//!
//! The same family is produced by four independent routes: the order-(d+1)
//! recurrence ([`recurrence`]), the generating series ([`genseries`]), the
//! matrix elements of `S = exp(J+) exp(Q(J-))` ([`su11`]) and the explicit
//! hypergeometric weights of the functional vector ([`weights`]).
//! [`verify`] cross-checks them.

pub mod classical;
pub mod error;
pub mod exactnum;
pub mod genseries;
pub mod params;
pub mod poly;
pub mod qpoly;
pub mod recurrence;
pub mod su11;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use exactnum::{HypMode, HypSpec, HypValue, Scalar, DEFAULT_PRECISION};
pub use genseries::FormalSeries;
pub use params::MeixnerParams;
pub use poly::Poly;
pub use qpoly::{RecurrenceData, StructurePolynomial};
pub use recurrence::{Normalization, PolySeq};
pub use rug::{Float, Rational};
pub use su11::{MatrixElements, OperatorRep, RatMatrix};
pub use verify::{Suite, SuiteConfig};
pub use weights::{KPolicy, WeightFormula, WeightRow, WeightTable};
