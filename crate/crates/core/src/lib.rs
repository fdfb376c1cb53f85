//! Pseudospectral toolkit for the deep-water steady wave equation
//!
//! ```text
//! H w' = μ (w + w H w' + H(w w'))
//! ```
//!
//! with `H` the Hilbert transform. The crate provides residuals of the
//! equation and of its Bernoulli and boundary-value forms, the integral
//! identities built on the scaling generator `x d/dx`, a periodic Stokes-wave
//! solver used as a positive control, probes for decaying solutions on the
//! line, the linearized operator with its Plotnikov conjugation, and
//! half-plane potential theory diagnostics.

// `!(a < b)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod halfplane;
pub mod identities;
pub mod io;
mod krylov;
pub mod linearized;
pub mod probe;
pub mod steady;
pub mod stokes;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::{Grid, GridKind, Profile, WaveState};
pub use transforms::{LineMethod, Transforms};
