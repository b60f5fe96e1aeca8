//! Photon-number entangled states (PNES) in truncated Fock space.
//!
//! Build states, score them for teleportation and Bell tests, and simulate
//! the heralded optical circuits that prepare them.

pub mod error;
pub mod fock;
pub mod measures;
pub mod optics;
pub mod optimizer;
pub mod protocols;
pub mod schemes;
pub mod special;
pub mod states;

pub use error::{PnesError, Result};
pub use num_complex::Complex64 as C64;
