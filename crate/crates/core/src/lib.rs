//! Rainbow perfect matchings in k-uniform hypergraphs.
//!
//! The crate covers the parity extremal constructions and their degree
//! thresholds, the reduction from rainbow matchings to perfect matchings of a
//! (1,k)-graph, exact solvers, an absorbing-method pipeline for the
//! non-extremal regime, a constructive solver for instances close to the
//! extremal graph, and the experiment harness that sweeps all of it.

pub mod absorbing;
pub mod closeness;
pub mod combinatorics;
pub mod error;
pub mod extremal;
pub mod extremal_solver;
pub mod harness;
pub mod hypergraph;
pub mod io;
pub mod scalar;
pub mod solver;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use hypergraph::{Hypergraph, VertexSubset};
pub use scalar::Scalar;
pub use solver::{SolveOutcome, SolverConfig, Status};
pub use transform::{ColoredEdge, ColoredGraph, Matching, RainbowFamily, RainbowMatching};

/// Exact rational used for thresholds and closeness values.
pub type Rational = num_rational::Ratio<i64>;
/// Wide exact rational for large normalisers.
pub type WideRational = num_rational::Ratio<i128>;
/// Goodness report in double precision.
pub type GoodnessReport = closeness::GoodnessReport<f64>;
