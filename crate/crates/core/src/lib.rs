//! Simulation of the von Neumann measurement model: system/probe coupling,
//! single and successive pointer statistics, quasi-probability distributions
//! and state tomography from successive measurements.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod format;
pub mod hilbert;
pub mod probe;
pub mod rng;
pub mod sampler;
pub mod single;
pub mod stern_gerlach;
pub mod successive;
pub mod tomography;

pub use error::{Error, Result};
pub use exec::Execution;
pub use hilbert::{
    BasisPair, CMatrix, CVector, DensityOperator, Observable, born_probability, make_basis_pair,
    random_density, spectral_decompose, validate_density,
};
pub use probe::{GaussianProbe, GridProbe, ProbeState};
