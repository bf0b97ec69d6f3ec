//! Sharp comparison constants for one-dimensional CD(K,N) model spaces.

pub mod coeffs;
pub mod density;
pub mod error;
pub mod functional;
pub mod localize;
pub mod ptrig;
pub mod quad;
pub mod spectral;
pub mod suite;
pub mod transport1d;

pub use error::{Error, Result};
