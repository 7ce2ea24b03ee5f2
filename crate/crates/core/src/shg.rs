//! Second-harmonic generation: measured and theoretical normalized efficiency.
//!
//! The theoretical efficiency of a QPM waveguide of any length is
//!
//! ```text
//! η = 8π² / (ε₀ c n₁² n₂ λ²) · d_eff² / S_eff · G²(Δk),   Δk = k_SH − 2 k_FH
//! ```
//!
//! with the grating's phase compensation carried entirely by `G²`.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{DispersionError, DispersionModel};
use crate::grating::{structure_factor, DomainPattern};
use crate::spectrum::{PointStatus, Spectrum};
use crate::units::{
    nm_to_m, per_w_m2_to_percent_per_w_cm2, pm_per_v_to_m_per_v, um2_to_m2,
    D33_LITHIUM_NIOBATE_PM_PER_V, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY,
};

pub const EFFICIENCY_UNIT: &str = "%/W/cm^2";

#[derive(Debug, Error)]
pub enum ShgError {
    #[error("powers, coupling efficiencies and length must be positive: {0}")]
    NonPositivePower(String),
    #[error("mode grids differ: {0}")]
    GridMismatch(String),
    #[error("nonlinear overlap integral is zero")]
    ZeroOverlap,
    #[error("invalid mode field: {0}")]
    InvalidField(String),
    #[error("effective area must be positive, got {0} µm²")]
    InvalidArea(f64),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("mode field CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// Fiber-side power readings and coupling for one SHG measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReading {
    pub p_fh_mw: f64,
    pub p_sh_uw: f64,
    pub coupling_fh: f64,
    pub coupling_sh: f64,
    pub length_cm: f64,
}

/// `(P_SH/η_SH) / ((P_FH/η_FH)² · L²)` in %/W/cm².
pub fn normalized_efficiency_measured(r: &PowerReading) -> Result<f64, ShgError> {
    let positive = [r.p_fh_mw, r.p_sh_uw, r.coupling_fh, r.coupling_sh, r.length_cm]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
    if !positive {
        return Err(ShgError::NonPositivePower(format!("{r:?}")));
    }
    if r.coupling_fh > 1.0 || r.coupling_sh > 1.0 {
        return Err(ShgError::NonPositivePower(
            "coupling efficiencies must not exceed 1".into(),
        ));
    }
    let p_sh_w = r.p_sh_uw * 1e-6 / r.coupling_sh;
    let p_fh_w = r.p_fh_mw * 1e-3 / r.coupling_fh;
    Ok(100.0 * p_sh_w / (p_fh_w * p_fh_w * r.length_cm * r.length_cm))
}

/// Transverse field on a rectangular `(x, z)` mesh with the nonlinear
/// coefficient map. Sample `(ix, iz)` is stored at `iz * nx + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    pub nx: usize,
    pub nz: usize,
    pub dx_nm: f64,
    pub dz_nm: f64,
    pub values: Vec<f64>,
    pub mask_pm_per_v: Vec<f64>,
}

impl ModeField {
    pub fn new(
        nx: usize,
        nz: usize,
        dx_nm: f64,
        dz_nm: f64,
        values: Vec<f64>,
        mask_pm_per_v: Vec<f64>,
    ) -> Result<Self, ShgError> {
        if nx == 0 || nz == 0 {
            return Err(ShgError::InvalidField("empty grid".into()));
        }
        if !(dx_nm > 0.0 && dz_nm > 0.0) {
            return Err(ShgError::InvalidField("grid spacing must be positive".into()));
        }
        if values.len() != nx * nz || mask_pm_per_v.len() != nx * nz {
            return Err(ShgError::InvalidField(format!(
                "{nx}×{nz} grid needs {} samples, got {} field and {} mask values",
                nx * nz,
                values.len(),
                mask_pm_per_v.len()
            )));
        }
        if values.iter().chain(&mask_pm_per_v).any(|v| !v.is_finite()) {
            return Err(ShgError::InvalidField("non-finite sample".into()));
        }
        if mask_pm_per_v.iter().all(|d| *d == 0.0) {
            return Err(ShgError::InvalidField("nonlinear mask is zero everywhere".into()));
        }
        Ok(Self {
            nx,
            nz,
            dx_nm,
            dz_nm,
            values,
            mask_pm_per_v,
        })
    }

    /// Builds a field by sampling `field(x, z)` and `mask(x, z)` at cell
    /// centres of an `nx × nz` grid starting at `(x0, z0)` (nm).
    pub fn sample(
        (nx, nz): (usize, usize),
        (x0, z0): (f64, f64),
        (dx_nm, dz_nm): (f64, f64),
        field: impl Fn(f64, f64) -> f64,
        mask: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, ShgError> {
        let mut values = Vec::with_capacity(nx * nz);
        let mut masks = Vec::with_capacity(nx * nz);
        for iz in 0..nz {
            let z = z0 + (iz as f64 + 0.5) * dz_nm;
            for ix in 0..nx {
                let x = x0 + (ix as f64 + 0.5) * dx_nm;
                values.push(field(x, z));
                masks.push(mask(x, z));
            }
        }
        Self::new(nx, nz, dx_nm, dz_nm, values, masks)
    }

    fn cell_area_um2(&self) -> f64 {
        self.dx_nm * self.dz_nm * 1e-6
    }

    /// Reads `x_nm,z_nm,E_z,d_pm_per_V`. Rows may come in any order but must
    /// fill a complete, evenly spaced rectangular grid.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, ShgError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["x_nm", "z_nm", "E_z", "d_pm_per_V"] {
            return Err(ShgError::InvalidField(
                "expected header `x_nm,z_nm,E_z,d_pm_per_V`".into(),
            ));
        }
        let mut rows: Vec<ModeRow> = Vec::new();
        for row in rdr.deserialize() {
            rows.push(row?);
        }
        if rows.is_empty() {
            return Err(ShgError::InvalidField("no samples".into()));
        }
        let xs = distinct_sorted(rows.iter().map(|r| r.x_nm));
        let zs = distinct_sorted(rows.iter().map(|r| r.z_nm));
        let (nx, nz) = (xs.len(), zs.len());
        if rows.len() != nx * nz {
            return Err(ShgError::InvalidField(format!(
                "{} rows do not form a rectangular {nx}×{nz} grid",
                rows.len()
            )));
        }
        let dx = uniform_spacing(&xs, "x")?;
        let dz = uniform_spacing(&zs, "z")?;
        rows.sort_by(|a, b| a.z_nm.total_cmp(&b.z_nm).then(a.x_nm.total_cmp(&b.x_nm)));
        for (i, r) in rows.iter().enumerate() {
            if r.x_nm != xs[i % nx] || r.z_nm != zs[i / nx] {
                return Err(ShgError::InvalidField(format!(
                    "grid point ({}, {}) is missing or duplicated",
                    xs[i % nx],
                    zs[i / nx]
                )));
            }
        }
        Self::new(
            nx,
            nz,
            dx,
            dz,
            rows.iter().map(|r| r.e_z).collect(),
            rows.iter().map(|r| r.d_pm_per_v).collect(),
        )
    }

    pub fn load_csv(path: &Path) -> Result<Self, ShgError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }
}

#[derive(Debug, Deserialize)]
struct ModeRow {
    x_nm: f64,
    z_nm: f64,
    #[serde(rename = "E_z")]
    e_z: f64,
    #[serde(rename = "d_pm_per_V")]
    d_pm_per_v: f64,
}

fn distinct_sorted(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = it.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn uniform_spacing(axis: &[f64], name: &str) -> Result<f64, ShgError> {
    if axis.len() < 2 {
        return Err(ShgError::InvalidField(format!("{name} axis needs at least 2 points")));
    }
    let step = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    let tol = 1e-6 * step;
    if axis.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > tol) {
        return Err(ShgError::InvalidField(format!("{name} axis is not evenly spaced")));
    }
    Ok(step)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub epsilon0: f64,
    pub c: f64,
    pub d_eff_pm_per_v: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            epsilon0: VACUUM_PERMITTIVITY,
            c: SPEED_OF_LIGHT,
            d_eff_pm_per_v: D33_LITHIUM_NIOBATE_PM_PER_V,
        }
    }
}

impl PhysicalConstants {
    pub fn with_d_eff(d_eff_pm_per_v: f64) -> Self {
        Self {
            d_eff_pm_per_v,
            ..Self::default()
        }
    }
}

/// Effective nonlinear area (µm²) from midpoint quadrature of the overlap
/// integrals on the ingested grid. The nonlinear weight is the FH field's mask
/// divided by `d_eff`.
pub fn effective_area(fh: &ModeField, sh: &ModeField, d_eff_pm_per_v: f64) -> Result<f64, ShgError> {
    if fh.nx != sh.nx || fh.nz != sh.nz || fh.dx_nm != sh.dx_nm || fh.dz_nm != sh.dz_nm {
        return Err(ShgError::GridMismatch(format!(
            "FH {}×{} @ ({}, {}) nm vs SH {}×{} @ ({}, {}) nm",
            fh.nx, fh.nz, fh.dx_nm, fh.dz_nm, sh.nx, sh.nz, sh.dx_nm, sh.dz_nm
        )));
    }
    let da = fh.cell_area_um2();
    let (mut i_fh, mut i_sh, mut overlap) = (0.0, 0.0, 0.0);
    for ((&e1, &e2), &d) in fh.values.iter().zip(&sh.values).zip(&fh.mask_pm_per_v) {
        let e1sq = e1 * e1;
        i_fh += e1sq;
        i_sh += e2 * e2;
        overlap += d / d_eff_pm_per_v * e1sq * e2;
    }
    let (i_fh, i_sh, overlap) = (i_fh * da, i_sh * da, overlap * da);
    if overlap == 0.0 || !overlap.is_finite() {
        return Err(ShgError::ZeroOverlap);
    }
    Ok(i_fh * i_fh * i_sh / (overlap * overlap))
}

/// Inputs shared by every point of a theoretical SHG spectrum.
#[derive(Debug, Clone, Copy)]
pub struct ShgModel<'a> {
    pub fh_band: &'a DispersionModel,
    pub sh_band: &'a DispersionModel,
    pub pattern: &'a DomainPattern,
    pub s_eff_um2: f64,
    pub constants: PhysicalConstants,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShgPoint {
    /// %/W/cm²
    pub efficiency: f64,
    /// rad/µm
    pub delta_k: f64,
    pub g_squared: f64,
    pub extrapolated: bool,
}

impl ShgModel<'_> {
    /// Theoretical normalized efficiency at FH wavelength `fh_nm`.
    pub fn theoretical_efficiency(&self, fh_nm: f64) -> Result<ShgPoint, ShgError> {
        if !(self.s_eff_um2 > 0.0 && self.s_eff_um2.is_finite()) {
            return Err(ShgError::InvalidArea(self.s_eff_um2));
        }
        let sh_nm = fh_nm / 2.0;
        let n1 = self.fh_band.evaluate(fh_nm)?;
        let n2 = self.sh_band.evaluate(sh_nm)?;
        let k_fh = self.fh_band.wave_vector(fh_nm)?;
        let k_sh = self.sh_band.wave_vector(sh_nm)?;
        let delta_k = k_sh - 2.0 * k_fh;
        let g_squared = structure_factor(self.pattern, delta_k).g_squared;

        let k = &self.constants;
        let lambda_m = nm_to_m(fh_nm);
        let d_m_per_v = pm_per_v_to_m_per_v(k.d_eff_pm_per_v);
        let prefactor =
            8.0 * PI * PI / (k.epsilon0 * k.c * n1.n_eff * n1.n_eff * n2.n_eff * lambda_m * lambda_m);
        let eta_si = prefactor * d_m_per_v * d_m_per_v / um2_to_m2(self.s_eff_um2) * g_squared;
        Ok(ShgPoint {
            efficiency: per_w_m2_to_percent_per_w_cm2(eta_si),
            delta_k,
            g_squared,
            extrapolated: n1.extrapolated || n2.extrapolated,
        })
    }

    /// Pointwise efficiency over `fh_grid_nm`; failures are recorded per point.
    pub fn spectrum(&self, fh_grid_nm: &[f64]) -> Spectrum {
        let points: Vec<Result<ShgPoint, ShgError>> = fh_grid_nm
            .par_iter()
            .map(|&wl| self.theoretical_efficiency(wl))
            .collect();
        let mut out = Spectrum::new(fh_grid_nm.to_vec(), vec![0.0; points.len()], EFFICIENCY_UNIT);
        for (i, p) in points.into_iter().enumerate() {
            match p {
                Ok(p) => {
                    out.values[i] = p.efficiency;
                    if p.extrapolated {
                        out.status[i] = PointStatus::Extrapolated;
                    }
                }
                Err(e) => {
                    out.values[i] = f64::NAN;
                    out.status[i] = PointStatus::Error(e.to_string());
                }
            }
        }
        out
    }

    /// Effective area that makes the spectrum's mean over `[lo, hi]` equal
    /// `target`. Efficiency scales as 1/S_eff, so a single evaluation suffices.
    pub fn calibrate_s_eff(
        &self,
        fh_grid_nm: &[f64],
        (lo_nm, hi_nm): (f64, f64),
        target: f64,
    ) -> Option<f64> {
        let mean = self.spectrum(fh_grid_nm).mean_over(lo_nm, hi_nm)?;
        (mean > 0.0 && target > 0.0).then(|| self.s_eff_um2 * mean / target)
    }
}
