//! Band-limited level-set curves.
//!
//! Planar curves are modelled as zero sets of trigonometric polynomials
//! `ψ(x) = Σ_k c_k exp(j2π kᵀx)` with coefficients on a rectangular frequency
//! support. The crate recovers such curves from point samples, denoises point
//! clouds with a kernel low-rank penalty and segments images by penalizing the
//! trailing singular values of a structured lift of their gradients.

pub mod curve_model;
pub mod denoise;
pub mod error;
pub mod io;
pub mod lifting;
pub mod recovery;
pub mod segmentation;

pub use error::{Error, Result};
