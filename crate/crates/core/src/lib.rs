//! Fourier pseudo-spectral solver for the no-slope-selection epitaxial
//! thin-film equation with exponential time differencing multistep schemes.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod etdphi;
pub mod experiments;
pub mod model;
pub mod schemes;
pub mod series;
pub mod spectral;
pub mod suites;

pub use error::{Error, Result};
