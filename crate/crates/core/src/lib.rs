//! Complex dimensions and prime orbit counting for self-similar suspended
//! flows.
//!
//! A self-similar flow over an alphabet of N symbols is determined by
//! positive weights w_1 <= ... <= w_N. Its dynamical zeta function is
//! 1/(1 - sum_j exp(-w_j s)); the complex solutions of
//! sum_j exp(-w_j omega) = 1 are the flow's complex dimensions, and they
//! drive the oscillatory expansion of the orbit counting functions.
//!
//! The crate is organized around cross-checking routes to the same
//! quantities:
//!
//! - [`flow`]: flow specifications, lattice/nonlattice classification, the
//!   real dimension D and the strip edge D0;
//! - [`orbits`]: brute-force orbit census (Lyndon words) and the exact
//!   counting functions psi, theta, pi plus truncated Euler sums: the
//!   ground-truth side of every comparison;
//! - [`zeta`]: closed-form zeta evaluation on the whole plane;
//! - [`dioph`]: continued fractions, Ostrowski numeration and simultaneous
//!   Diophantine approximation, which control where dimensions sit;
//! - [`dims`]: complex-dimension windows (exact lattice lines, refined
//!   nonlattice roots, perturbation-series predictions, dimension-free
//!   regions, density checks);
//! - [`explicit`]: Prime Orbit Theorem expansions at levels 1 and 2 and
//!   error-scaling reports against the census;
//! - [`verify`]: the executable reproduction suite with pinned tolerances.
//!
//! All types are immutable after construction and all operations are pure,
//! so everything is safe to use from multiple threads without coordination.

pub mod dioph;
pub mod dims;
pub mod error;
pub mod explicit;
pub mod flow;
pub mod orbits;
pub mod poly;
pub mod verify;
pub mod zeta;

pub use error::{Error, Result};
pub use flow::{classify_lattice, solve_dimension, DimensionPair, FlowSpec, LatticeStructure};
pub use orbits::{enumerate_orbits, Jump, OrbitCensus, OrbitRecord};
