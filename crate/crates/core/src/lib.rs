//! Matrix-free exponential time integration for stiff systems.
//!
//! The crate is organized bottom-up:
//!
//! * [`phi`] evaluates the φ functions for scalars, dense matrices and divided differences.
//! * [`leja`] and [`krylov`] apply φ(J·dt) to a vector using only operator applications.
//! * [`linearization`] turns a right-hand side into a finite-difference Jacobian action
//!   and estimates its spectral radius by power iteration.
//! * [`integrators`] holds the exponential Rosenbrock / EPIRK schemes and two explicit
//!   Runge–Kutta baselines.
//! * [`controllers`] implements the tolerance-based and cost-based step-size controllers.
//! * [`mhd`] and [`scenarios`] discretize 2.5D resistive MHD and set up the test problems.
//! * [`harness`] drives runs, sweeps and output files.

pub mod controllers;
pub mod error;
pub mod harness;
pub mod integrators;
pub mod krylov;
pub mod leja;
pub mod linearization;
pub mod mhd;
pub mod operator;
pub mod phi;
pub mod scenarios;

pub use error::{Error, Result};
pub use operator::LinearOperator;
pub use phi::PhiOrder;
