//! Numerical toolkit for locally coupled wave equations with local
//! Kelvin-Voigt damping: problem setup, a dissipation-exact finite-difference
//! generator, Crank-Nicolson time stepping with energy bookkeeping, spectral
//! and resolvent checks, and the `kvwave` command-line front end.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod discretize;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod linalg;
pub mod model;
pub mod spectra;

pub use discretize::{assemble_generator, build_grid, Block, DiscreteGenerator, Grid, StateVector};
pub use error::{Error, Result};
pub use evolve::{DecayFit, EnergySample, EnergyTrace, InitialData};
pub use model::{check_ssc, validate_config, CaseLabel, CoefficientProfile, SscReport, SystemConfig};
pub use spectra::{ResolventPoint, ResolventProfile, SpectrumReport};
