//! Exact arithmetic: fields, polynomials, rational functions, Laurent series.

pub mod field;
pub mod laurent;
pub mod mpoly;
pub mod poly;
pub mod ratfunc;
pub mod symbolic;

pub use field::{parse_rational, rat_to_f64, rational, Field, PrimeField, Rationals};
pub use laurent::{LaurentOrder, LaurentSeries, DEFAULT_PRECISION};
pub use mpoly::MPoly;
pub use poly::UniPoly;
pub use ratfunc::RationalFunction;
pub use symbolic::{SymFrac, SymbolField};
