//! Exact and floating-point machinery for linear ODEs with regular singular
//! points: operator form conversions, Taylor-coefficient recurrences,
//! ratio-limit estimation, derivative chains, Perron continued fractions and
//! a Gauss hypergeometric oracle.

pub mod cf;
pub mod chain;
pub mod error;
pub mod geometry;
pub mod hypergeom;
pub mod json;
pub mod operator;
pub mod poly;
pub mod ratfn;
pub mod roots;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use json::AnyOperator;
pub use operator::{DifferentialOperator, OperatorForm, SingularSet};
pub use poly::Polynomial;
pub use ratfn::RationalFunction;
pub use scalar::{Backend, BigComplex, Coeff, GaussianRational, Scalar};
