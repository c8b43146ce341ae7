//! Finite-volume simulation of a nonlocal scalar balance law for highway
//! traffic with one on-ramp and one off-ramp.
//!
//! The model is the LWR equation with a nonlocal flux ρ·v(ρ*ω_η) and
//! zero-order ramp source terms. Three on-ramp source variants are
//! provided (Model 0, 1 and 2); the solver is a first-order upwind scheme
//! with operator splitting and a CFL-constrained time step. A classical
//! Godunov solver for the corresponding local model serves as the η→0
//! reference, and the diagnostics module machine-checks the provable
//! inequalities (maximum principle, L1 and BV bounds, discrete entropy
//! inequality) along every run.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod kernels;
pub mod local_reference;
pub mod scheme;

pub use error::{Error, Result};
