//! Periodic-domain pseudospectral solver for the nondimensional KdV
//! equation together with a verification engine for its mass, momentum,
//! and energy balance laws.
//!
//! The crate evaluates the six density/flux pairs of the model (three
//! exact identities and three approximate balances), measures balance
//! residuals with the time derivative eliminated through the PDE, checks
//! them against closed-form oracles, and reproduces the second-order
//! scaling of the residuals in the amplitude parameter. Interior velocity
//! and pressure fields reconstructed from the surface excursion are
//! verified against the density/flux catalog by vertical quadrature.
//!
//! Modules:
//! - [`spectral`]: periodic grid, fields, spectral calculus.
//! - [`dynamics`]: ETDRK4/IFRK4 evolution and the solitary wave.
//! - [`balance`]: density/flux catalog, residuals, closed-form oracles.
//! - [`flow`]: velocity/pressure reconstruction and column integrals.
//! - [`experiments`]: epsilon sweeps, slope fits, drift and uniformity.
//! - [`thresholds`]: the one table of numeric pass/fail bounds.
//! - [`config`], [`runner`]: CLI configuration and artifact output.

// Negated float comparisons in validation (`!(x > 0.0)`) are deliberate:
// they reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balance;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod runner;
pub mod spectral;
pub mod thresholds;

pub use balance::{
    conserved_integrals, density, density_time_derivative, flux, residual,
    residual_closed_form, Invariants, LawId,
};
pub use dynamics::{
    advance, kdv_rhs, simulate, solitary_profile, solitary_wave, stability_limit, Params,
    Scheme, SolverConfig, Trajectory,
};
pub use error::{KdvError, Result};
pub use experiments::{
    epsilon_sweep, epsilon_sweep_dynamic, fit_loglog_slope, invariant_drift, time_uniformity,
    DriftReport, ProfileSpec, SweepResult, UniformityReport,
};
pub use flow::{
    column_integral, column_slice, dynamic_pressure, horizontal_velocity, vertical_velocity,
    ColumnKind, ColumnSlice,
};
pub use spectral::{Field, Grid, Norms};
