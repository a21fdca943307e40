//! Numerical laboratory for critical bond percolation in high dimensions.
//!
//! The crate grows percolation clusters of the origin on Z^d, estimates
//! cluster-size laws and conditional two- and three-point profiles, evaluates
//! the ISE densities those profiles converge to, and provides the power-series
//! and diagram tools used to check the mean-field picture numerically.
//!
//! Deterministic numerics (quadrature, ISE transforms, power series) are
//! generic over [`Real`]; the aliases below fix them to `f64`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod diagrams;
pub mod error;
pub mod genfunc;
pub mod ise;
pub mod lattice;
pub mod pc;
pub mod percolation;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod tree_oracle;

pub use error::{Error, Result};
pub use lattice::{dhat, Bond, Site};
pub use percolation::{Cluster, GreenAssignment, PivotalDecomposition};
pub use scalar::Real;
pub use stats::{EmpiricalMeasure, ExponentFit, SizeHistogram};

pub type Wavevector = lattice::Wavevector<f64>;
pub type IseParams = ise::IseParams<f64>;
pub type PowerSeries = genfunc::PowerSeries<f64>;
pub type BranchMainTerm = genfunc::BranchMainTerm<f64>;
