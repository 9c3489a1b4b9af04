//! Martingale optimal transport on the real line for finitely supported
//! marginals.
//!
//! The crate makes the one-step martingale transport duality executable at
//! desk scale: convex-order verification through potential functions,
//! decomposition into irreducible components, polar-set decisions, the
//! generalized integral of concave functions, and the transport LP in
//! pointwise, quasi-sure, and componentwise formulations with verified
//! primal/dual certificates. The default arithmetic is exact rational; an
//! `f64` mode with explicit tolerances covers larger refinement studies.

pub mod harness;
pub mod integrals;
pub mod lp;
pub mod measures;
pub mod mot;
pub mod scalar;

pub use measures::{
    check_convex_order, decompose, endpoint_slope_gap, Bound, Decomposition, DiscreteMeasure,
    IrreducibleComponent, MeasureError, OrderFailure, OrderReport, PotentialFunction, Side,
};
pub use scalar::{Rational, Scalar};
