//! Solver for non-Markovian master equations of completely positive,
//! non-signalling form: a GKSL generator plus a memory integral over the whole
//! state history. Provides two-time correlations from conditional states,
//! emission spectra, a discrete Kraus-map construction and a driven two-level
//! application.

// `!(x > 0.0)` form is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod config;
pub mod correlation;
pub mod cpns;
pub mod error;
pub mod io;
pub mod mollow;
pub mod operator;
pub mod propagator;
pub mod quad;
pub mod verify;

pub use error::{Error, Result};
