//! Reconstruction of distribution-of-relaxation-times functions from
//! impedance spectra.
//!
//! The measurement model is a Fredholm integral of the first kind: the
//! impedance at angular frequency omega is R0 plus Rpol times the
//! integral of g(t) / (1 + i omega t) over relaxation times t. This
//! crate discretizes that integral on a logarithmic grid (four
//! quadrature rules, including tail-corrected weights), solves the
//! resulting ill-conditioned system by Tikhonov-regularized least
//! squares with optional non-negativity, and selects the regularization
//! parameter from the residual periodogram or the L-curve corner. Model
//! problems with known relaxation-time densities, analytic error
//! bounds, and conditioning diagnostics support end-to-end validation.

pub mod analysis;
pub mod error;
pub mod integrate;
pub mod kernel;
pub mod models;
pub mod nnls;
pub mod select;
pub mod sim;
pub mod solver;
pub mod tikhonov;

pub use error::{DrtError, Result};
