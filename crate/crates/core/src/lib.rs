//! Approximate quantum counting, from ideal gates down to the pulses of a
//! two-spin NMR ensemble computer.
//!
//! The crate is layered bottom-up:
//!
//! - [`opcore`]: dense complex operators, density matrices, partial trace,
//!   Hermitian matrix exponentials.
//! - [`circuit`]: oracles, the Grover iterate, its eigenphases and the
//!   controlled-iterate counting circuit.
//! - [`counting`]: signal acquisition, damped-cosine fitting, phase to count
//!   conversion, iteration budgets and bisection for the first match.
//! - [`pulsecompile`]: lowering of the one-bit counting circuit to hard
//!   pulses and free-precession delays.
//! - [`nmrengine`]: density-matrix propagation of compiled sequences with
//!   relaxation, pulse imperfections and the readout pipeline.
//! - [`cli`] and [`verify`]: the `qcount` command-line surface and its
//!   cross-module self-check.
//!
//! Runnable walkthroughs of each layer live in `examples/`.

pub mod circuit;
pub mod cli;
pub mod counting;
pub mod error;
pub mod nmrengine;
pub(crate) mod numfmt;
pub mod opcore;
pub mod pulsecompile;
pub mod verify;

pub use error::{Error, Result};
