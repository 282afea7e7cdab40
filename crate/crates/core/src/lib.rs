//! Device simulator for metal/ferroelectric/insulator/metal (MFIM) ferroelectric
//! tunnel junctions.
//!
//! The crate is organised bottom-up:
//!
//! - [`stack`]: layer stack, materials, electrodes and derived capacitances.
//! - [`domains`]: square domain lattice and per-domain anisotropy sampling.
//! - [`electrostatics`]: inverse-capacitance coupling matrix (closure and 3D
//!   finite-difference builders) and the per-domain voltage partition.
//! - [`dynamics`]: multi-domain Landau-Ginzburg-Devonshire kinetics and an
//!   adaptive embedded Runge-Kutta integrator.
//! - [`tunneling`]: WKB transmission through the linear band profile and the
//!   Landauer read current.
//! - [`protocol`]: waveforms and the hysteresis / program-read / sweep experiments.
//!
//! Data-parallel loops (sweep points, per-domain currents, stencil sweeps) go
//! through [`exec::Execution`], which falls back to plain iterators when the
//! `parallel` feature is disabled.

// `!(x > 0.0)` is the idiom for rejecting NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops mirror the stage formulas of the integrator and solvers
#![allow(clippy::needless_range_loop)]

pub mod constants;
pub mod domains;
pub mod dynamics;
pub mod electrostatics;
mod error;
pub mod exec;
pub mod protocol;
pub mod stack;
pub mod tunneling;

pub use error::{FtjError, Result};
