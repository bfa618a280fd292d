//! Solver core for the compressible Navier-Stokes-Fokker-Planck system with
//! FENE bead-spring chains.
//!
//! The crate is `no_std` (with `alloc`). It holds the pointwise model, the
//! cut-off and entropy regularizations, the grids and discrete operators,
//! the three sub-solves and the Picard-coupled time stepper together with
//! its energy ledger. File formats and the command-line driver live in the
//! companion `nsfp` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
// `!(x > 0.0)` is used on purpose: it rejects NaN along with the range
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod eigen;
pub mod error;
pub mod forcing;
pub mod grid;
pub mod linalg;
pub mod math;
pub mod model;
pub mod ops;
pub mod quadrature;
pub mod regularization;
pub mod scheme;
pub mod setup;
pub mod solvers;
pub mod stress;

pub use error::{Error, Result};
