pub mod error;
pub mod greens;
pub mod qkrein;
pub mod quadrature;
pub mod resonance;
pub mod scattering;
mod roots;
pub mod specfun;
pub mod spectra;

pub use error::{Error, Result};
