//! Design and simulation toolkit for step-chirped quasi-phase-matched
//! waveguides: domain patterns, SHG efficiency and SPDC spectra, bandwidth
//! extraction, and photon-pair counting statistics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counting;
pub mod dispersion;
pub mod grating;
pub mod numeric;
pub mod units;
pub mod shg;
pub mod spdc;
pub mod spectrum;
