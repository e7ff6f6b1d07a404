//! Monte Carlo laboratory for simple random walks on long-range percolation
//! clusters of `Z^d` and their stable scaling limits.
//!
//! The crate is organised bottom-up: [`env`] samples and reveals the random
//! graph, [`walk`] runs walks and computes path functionals, [`cluster`]
//! decomposes boxes into clusters, [`coupling`] replays walks to classify
//! coupling errors and regeneration times, [`stable`] provides the limit
//! process, surrogates and estimators, and [`harness`] ties them into
//! reproducible experiments.

pub mod error;
pub mod lattice;
pub mod env;
pub mod stats;
pub mod path;
pub mod walk;
pub mod cluster;
pub mod coupling;
pub mod stable;
pub mod harness;

pub use error::{LabError, Result};
pub use lattice::LatticePoint;
