//! Periodic continuation of stationary Gaussian random fields on bounded
//! domains, with Karhunen-Loève and filtered Meyer-wavelet expansions.
//!
//! Pipeline: a [`kernel::Matern`] covariance is truncated by a smooth
//! cutoff ([`cutoff`]), its spectrum is sampled by FFT
//! ([`periodization::spectral_grid`]), and the resulting table feeds both
//! [`kl::kl_expansion`] and [`wavelet::WaveletFamily`]. [`sampler`] draws
//! realizations from either system; [`diffusion`] solves a 1D lognormal
//! diffusion problem with the sampled coefficients.

pub mod cli;
pub mod cutoff;
pub mod diffusion;
pub mod error;
pub mod fit;
pub mod grid;
pub mod kernel;
pub mod kl;
pub mod meyer;
pub mod periodization;
pub mod sampler;
pub mod verify;
pub mod wavelet;

pub use error::{Error, Result};
