//! Physical constants and the unit conversions used across the crate.
//!
//! Internal lengths are µm, wavelengths are carried in nm at API boundaries,
//! powers are W and normalized efficiencies are reported in %/W/cm².

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.8541878128e-12;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;

/// Speed of light expressed as nm·THz, so that `f[THz] = C_NM_THZ / λ[nm]`.
pub const C_NM_THZ: f64 = 299_792.458;

/// Magnitude of d₃₃ for lithium niobate, pm/V. The tensor element is negative;
/// only its square enters the efficiency.
pub const D33_LITHIUM_NIOBATE_PM_PER_V: f64 = 27.0;

pub const NM_PER_UM: f64 = 1e3;

#[inline]
pub fn nm_to_um(nm: f64) -> f64 {
    nm / NM_PER_UM
}

#[inline]
pub fn um_to_nm(um: f64) -> f64 {
    um * NM_PER_UM
}

#[inline]
pub fn nm_to_m(nm: f64) -> f64 {
    nm * 1e-9
}

#[inline]
pub fn um2_to_m2(um2: f64) -> f64 {
    um2 * 1e-12
}

#[inline]
pub fn pm_per_v_to_m_per_v(d: f64) -> f64 {
    d * 1e-12
}

/// W⁻¹·m⁻² → %/W/cm².
#[inline]
pub fn per_w_m2_to_percent_per_w_cm2(eta: f64) -> f64 {
    // ×100 for percent, ×1e-4 for m⁻² → cm⁻²
    eta * 1e-2
}

/// Optical frequency in THz for a vacuum wavelength in nm.
#[inline]
pub fn frequency_thz(wavelength_nm: f64) -> f64 {
    C_NM_THZ / wavelength_nm
}

/// Idler wavelength fixed by energy conservation, 1/λi = 1/λp − 1/λs (all nm).
#[inline]
pub fn idler_wavelength_nm(pump_nm: f64, signal_nm: f64) -> f64 {
    pump_nm * signal_nm / (signal_nm - pump_nm)
}
