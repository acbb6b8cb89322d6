//! High-dynamic-range sampling of bandpass signals through modulo (folding)
//! nonlinearities: signal synthesis, three folding architectures, sampling
//! planners for sub-Nyquist acquisition, and time- and Fourier-domain
//! unfolding with spectral relocation back into the passband.

pub mod error;
pub mod folding;
pub mod harness;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod planner;
pub mod recovery;
pub mod series;
pub mod signal;
pub mod spectral;

pub use error::{Error, Result};
