//! Order-convolution algebra on `(0, inf)` and a classifier for
//! `(A_r, A_p)` multipliers.
//!
//! Functions are exact piecewise power-log sums ([`PiecewiseFn`]), generic
//! over the coefficient field. [`ExactFn`] (rational coefficients) is the
//! default working type; [`FloatFn`] and [`Float32Fn`] trade exactness for
//! closure under irrational constants.

pub mod algebra;
pub mod dsl;
pub mod error;
pub mod multiplier;
pub mod oracle;
pub mod random;
pub mod scalar;
pub mod scenario;
pub mod symfunc;

pub use error::{Error, Result};
pub use scalar::{Coeff, Extended, Rational};
pub use symfunc::{Endpoint, LeadingBehavior, Piece, PiecewiseFn, Term};

pub type ExactFn = PiecewiseFn<Rational>;
pub type FloatFn = PiecewiseFn<f64>;
pub type Float32Fn = PiecewiseFn<f32>;
