//! Small numerical kernels shared by the physics modules.

mod compensated;
mod pchip;

pub use compensated::{CompensatedComplex, NeumaierSum};
pub use pchip::{MonotoneCubic, PchipError};
