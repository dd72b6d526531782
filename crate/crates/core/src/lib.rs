//! Dispatchable-region approximation for renewable generation on radial
//! distribution feeders.
//!
//! The relaxed region `W'` is approximated by dual cutting planes over the
//! second-order cone relaxation of Dist-Flow ([`algorithms::run_algorithm1`]).
//! Sub-regions where the relaxation is likely inexact are then carved out with
//! a tightened dual ([`algorithms::run_algorithm2`]), producing a
//! [`geometry::Region`] that may be nonconvex. A sweep power-flow oracle
//! ([`oracle`]) supplies ground truth for failure and missing rates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod baselines;
pub mod cli;
pub mod conic;
pub mod geometry;
pub mod network;
pub mod oracle;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Case(#[from] network::CaseError),
    #[error(transparent)]
    Conic(#[from] conic::ConicError),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Algorithm(#[from] algorithms::AlgorithmError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
