//! 2D Fourier transforms and the truncated spectral convolution.

pub mod conv;
pub mod fft;

pub use conv::{
    retained_frequencies, spectral_backward, spectral_conv, spectral_forward, SpectralCtx, SpectralPlan,
    SpectralWeights,
};
pub use fft::{fft2, ifft2, Spectrum};
