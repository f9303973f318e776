//! Extremal-index (EI) statistics for orbits of expanding interval maps whose
//! observables are maximised on Cantor sets.
//!
//! The crate has three pillars:
//!
//! * an exact pipeline ([`exact`], [`theory`], [`ifs`]) that manipulates finite
//!   unions of closed rational intervals and evaluates O'Brien's ratio
//!   `θ = μ(A_{q,L}) / μ(U_L)` without any floating point,
//! * a Digraph-IFS pipeline ([`digraph`]) that builds the substitution
//!   matrices describing `C ∩ T^{-q}(C)` and bounds the box dimension of the
//!   intersection through their spectral radius,
//! * a Monte-Carlo pipeline ([`dynamics`], [`estimator`]) that simulates orbit
//!   ensembles and estimates the EI with the Hsing estimator.
//!
//! All exact operations are pure functions over immutable values and may be
//! called concurrently; resource usage is bounded by [`Caps`].

pub mod digraph;
pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod ifs;
pub mod theory;

pub use dynamics::{MapId, Observable, ObservableSeries, PiecewiseMap};
pub use error::{Error, Result};
pub use estimator::{EstimateRecord, SweepTable};
pub use exact::{Caps, IntervalSet, Rational, RationalInterval};
pub use theory::{Schedule, TheoryResult};

/// Crate version, embedded in every CLI output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
