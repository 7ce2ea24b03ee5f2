//! Effective refractive index models per optical band.
//!
//! A [`DispersionModel`] is either a table of `(λ, n_eff)` samples evaluated
//! with monotone cubic interpolation, or a polynomial in λ expressed in µm.
//! Both carry an explicit validity range; evaluation outside it fails unless
//! extrapolation was switched on, in which case the value is continued
//! linearly with the boundary derivative and flagged as extrapolated.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{MonotoneCubic, PchipError};
use crate::units::nm_to_um;

/// Lower/upper plausibility bound on n_eff for lithium-niobate waveguide modes.
pub const N_EFF_BOUNDS: (f64, f64) = (1.0, 3.0);

/// Minimum number of table rows accepted for cubic interpolation.
pub const MIN_TABLE_SAMPLES: usize = 4;

#[derive(Debug, Error)]
pub enum DispersionError {
    #[error("wavelength {wavelength_nm} nm outside valid range [{min_nm}, {max_nm}] nm of band {band}")]
    OutOfRange {
        band: String,
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },
    #[error("dispersion table has {0} samples, at least 4 are required")]
    DegenerateTable(usize),
    #[error("invalid dispersion table: {0}")]
    InvalidTable(String),
    #[error("n_eff = {n_eff} at {wavelength_nm} nm is outside the plausible range (1, 3)")]
    Implausible { wavelength_nm: f64, n_eff: f64 },
    #[error("wavelength must be positive and finite, got {0} nm")]
    InvalidWavelength(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("dispersion CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DispersionKind {
    Tabulated(MonotoneCubic),
    /// Coefficients `c0 + c1·λ + c2·λ² + …` with λ in µm.
    Polynomial(Vec<f64>),
}

/// Result of an index evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexValue {
    pub n_eff: f64,
    pub extrapolated: bool,
}

/// Result of a wave-vector evaluation, rad/µm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector {
    pub k: f64,
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionModel {
    band_label: String,
    kind: DispersionKind,
    valid_range_nm: (f64, f64),
    extrapolation: bool,
}

impl DispersionModel {
    /// Builds a tabulated model from `(wavelength_nm, n_eff)` samples, which must
    /// be strictly increasing in wavelength.
    pub fn tabulated(
        band_label: impl Into<String>,
        samples: &[(f64, f64)],
    ) -> Result<Self, DispersionError> {
        if samples.len() < MIN_TABLE_SAMPLES {
            return Err(DispersionError::DegenerateTable(samples.len()));
        }
        for &(wl, n) in samples {
            if !(wl > 0.0 && wl.is_finite()) {
                return Err(DispersionError::InvalidWavelength(wl));
            }
            check_plausible(wl, n)?;
        }
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let interp = MonotoneCubic::new(xs, ys).map_err(|e| match e {
            PchipError::NotIncreasing { index } => DispersionError::InvalidTable(format!(
                "wavelengths must be strictly increasing; row {} is {} nm after {} nm",
                index + 1,
                samples[index].0,
                samples[index - 1].0
            )),
            other => DispersionError::InvalidTable(other.to_string()),
        })?;
        let valid_range_nm = interp.domain();
        Ok(Self {
            band_label: band_label.into(),
            kind: DispersionKind::Tabulated(interp),
            valid_range_nm,
            extrapolation: false,
        })
    }

    /// Builds a polynomial model; coefficients act on λ in µm.
    pub fn polynomial(
        band_label: impl Into<String>,
        coefficients: Vec<f64>,
        valid_range_nm: (f64, f64),
    ) -> Result<Self, DispersionError> {
        if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(DispersionError::InvalidModel(
                "polynomial needs at least one finite coefficient".into(),
            ));
        }
        let (lo, hi) = valid_range_nm;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(DispersionError::InvalidModel(format!(
                "valid range [{lo}, {hi}] nm is empty or non-positive"
            )));
        }
        let model = Self {
            band_label: band_label.into(),
            kind: DispersionKind::Polynomial(coefficients),
            valid_range_nm,
            extrapolation: false,
        };
        // plausibility over the whole declared range
        const PROBES: usize = 1000;
        for i in 0..=PROBES {
            let wl = lo + (hi - lo) * i as f64 / PROBES as f64;
            check_plausible(wl, model.raw_value(wl))?;
        }
        Ok(model)
    }

    pub fn with_extrapolation(mut self, enabled: bool) -> Self {
        self.extrapolation = enabled;
        self
    }

    pub fn band_label(&self) -> &str {
        &self.band_label
    }

    pub fn kind(&self) -> &DispersionKind {
        &self.kind
    }

    pub fn valid_range_nm(&self) -> (f64, f64) {
        self.valid_range_nm
    }

    pub fn extrapolation_enabled(&self) -> bool {
        self.extrapolation
    }

    pub fn covers(&self, wavelength_nm: f64) -> bool {
        let (lo, hi) = self.valid_range_nm;
        wavelength_nm >= lo && wavelength_nm <= hi
    }

    /// Effective index at `wavelength_nm`.
    pub fn n_eff(&self, wavelength_nm: f64) -> Result<f64, DispersionError> {
        self.evaluate(wavelength_nm).map(|v| v.n_eff)
    }

    /// Effective index with the extrapolation flag.
    pub fn evaluate(&self, wavelength_nm: f64) -> Result<IndexValue, DispersionError> {
        if !(wavelength_nm > 0.0 && wavelength_nm.is_finite()) {
            return Err(DispersionError::InvalidWavelength(wavelength_nm));
        }
        let (lo, hi) = self.valid_range_nm;
        if self.covers(wavelength_nm) {
            return Ok(IndexValue {
                n_eff: self.raw_value(wavelength_nm),
                extrapolated: false,
            });
        }
        if !self.extrapolation {
            return Err(DispersionError::OutOfRange {
                band: self.band_label.clone(),
                wavelength_nm,
                min_nm: lo,
                max_nm: hi,
            });
        }
        let edge = if wavelength_nm < lo { lo } else { hi };
        let n_eff = self.raw_value(edge) + self.slope_per_nm(edge) * (wavelength_nm - edge);
        Ok(IndexValue {
            n_eff,
            extrapolated: true,
        })
    }

    /// Propagation constant k = 2π·n_eff/λ in rad/µm.
    pub fn wave_vector(&self, wavelength_nm: f64) -> Result<f64, DispersionError> {
        self.wave_vector_eval(wavelength_nm).map(|w| w.k)
    }

    pub fn wave_vector_eval(&self, wavelength_nm: f64) -> Result<WaveVector, DispersionError> {
        let v = self.evaluate(wavelength_nm)?;
        let k = 2.0 * PI * v.n_eff / nm_to_um(wavelength_nm);
        if !(k > 0.0) {
            return Err(DispersionError::Implausible {
                wavelength_nm,
                n_eff: v.n_eff,
            });
        }
        Ok(WaveVector {
            k,
            extrapolated: v.extrapolated,
        })
    }

    /// Value inside the valid range, no range checks.
    fn raw_value(&self, wavelength_nm: f64) -> f64 {
        match &self.kind {
            DispersionKind::Tabulated(interp) => interp.eval(wavelength_nm),
            DispersionKind::Polynomial(c) => {
                let x = nm_to_um(wavelength_nm);
                c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
            }
        }
    }

    /// dn/dλ at a range boundary, per nm.
    fn slope_per_nm(&self, edge_nm: f64) -> f64 {
        match &self.kind {
            DispersionKind::Tabulated(interp) => {
                let (left, right) = interp.boundary_slopes();
                if edge_nm <= self.valid_range_nm.0 {
                    left
                } else {
                    right
                }
            }
            DispersionKind::Polynomial(c) => {
                let x = nm_to_um(edge_nm);
                let per_um = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (i, &ci)| acc * x + i as f64 * ci);
                nm_to_um(per_um)
            }
        }
    }

    /// Reads a `wavelength_nm,n_eff` CSV table.
    pub fn from_csv_reader<R: Read>(
        band_label: impl Into<String>,
        reader: R,
    ) -> Result<Self, DispersionError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "wavelength_nm" || &headers[1] != "n_eff" {
            return Err(DispersionError::InvalidTable(format!(
                "expected header `wavelength_nm,n_eff`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut samples = Vec::new();
        for row in rdr.deserialize::<DispersionRow>() {
            let row = row?;
            samples.push((row.wavelength_nm, row.n_eff));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].0 <= w[0].0) {
            let what = if w[1].0 == w[0].0 { "duplicate" } else { "unsorted" };
            return Err(DispersionError::InvalidTable(format!(
                "{what} wavelength {} nm after {} nm",
                w[1].0, w[0].0
            )));
        }
        Self::tabulated(band_label, &samples)
    }

    pub fn load_csv(band_label: impl Into<String>, path: &Path) -> Result<Self, DispersionError> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(band_label, file)
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct DispersionRow {
    wavelength_nm: f64,
    n_eff: f64,
}

fn check_plausible(wavelength_nm: f64, n_eff: f64) -> Result<(), DispersionError> {
    let (lo, hi) = N_EFF_BOUNDS;
    if n_eff > lo && n_eff < hi {
        Ok(())
    } else {
        Err(DispersionError::Implausible {
            wavelength_nm,
            n_eff,
        })
    }
}

/// Degenerate first-order QPM period, Λ = λp / (n_p − n_s) with λp = λs/2,
/// in µm.
pub fn degenerate_poling_period_um(
    pump_band: &DispersionModel,
    signal_band: &DispersionModel,
    signal_nm: f64,
) -> Result<f64, DispersionError> {
    let pump_nm = signal_nm / 2.0;
    let dn = pump_band.n_eff(pump_nm)? - signal_band.n_eff(signal_nm)?;
    Ok(nm_to_um(pump_nm) / dn)
}

/// Anchor points `(signal λ in nm, poling period in µm)` of the shipped fit:
/// the chirp's shortest and longest periods and the degenerate signal
/// wavelengths they phase-match.
pub const DEFAULT_ANCHORS: [(f64, f64); 2] = [(1505.0, 4.45), (1610.0, 4.55)];

/// Telecom-band TE00 polynomial, λ in µm.
pub const DEFAULT_TELECOM_COEFFS: [f64; 3] = [2.25, -0.30, 0.014];
pub const DEFAULT_TELECOM_RANGE_NM: (f64, f64) = (1150.0, 2400.0);
pub const DEFAULT_NIR_RANGE_NM: (f64, f64) = (700.0, 850.0);

pub const TELECOM_LABEL: &str = "TE00-telecom";
pub const NIR_LABEL: &str = "TE00-NIR";

/// Pair of models for the shipped thin-film waveguide approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultFit {
    pub telecom: DispersionModel,
    pub nir: DispersionModel,
}

impl DefaultFit {
    /// Telecom band: fixed quadratic. NIR band: linear in λ, with both
    /// coefficients solved so that the degenerate QPM period passes exactly
    /// through [`DEFAULT_ANCHORS`].
    pub fn new() -> Self {
        let telecom = DispersionModel::polynomial(
            TELECOM_LABEL,
            DEFAULT_TELECOM_COEFFS.to_vec(),
            DEFAULT_TELECOM_RANGE_NM,
        )
        .expect("shipped telecom fit is plausible");

        // n_p(λs/2) = n_s(λs) + λs / (2Λ) at each anchor
        let [(s1, p1), (s2, p2)] = DEFAULT_ANCHORS;
        let target = |s: f64, period: f64| {
            telecom.n_eff(s).expect("anchor inside telecom range") + nm_to_um(s) / (2.0 * period)
        };
        let (x1, y1) = (nm_to_um(s1 / 2.0), target(s1, p1));
        let (x2, y2) = (nm_to_um(s2 / 2.0), target(s2, p2));
        let slope = (y2 - y1) / (x2 - x1);
        let intercept = y1 - slope * x1;
        let nir = DispersionModel::polynomial(NIR_LABEL, vec![intercept, slope], DEFAULT_NIR_RANGE_NM)
            .expect("shipped NIR fit is plausible");
        Self { telecom, nir }
    }

    pub fn with_extrapolation(self, enabled: bool) -> Self {
        Self {
            telecom: self.telecom.with_extrapolation(enabled),
            nir: self.nir.with_extrapolation(enabled),
        }
    }
}

impl Default for DefaultFit {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table() -> Vec<(f64, f64)> {
        vec![
            (1480.0, 1.86),
            (1520.0, 1.85),
            (1550.0, 1.8432),
            (1600.0, 1.83),
            (1640.0, 1.821),
        ]
    }

    #[test]
    fn tabulated_reproduces_knots() {
        let m = DispersionModel::tabulated("t", &table()).unwrap();
        assert_eq!(m.n_eff(1550.0).unwrap(), 1.8432);
        for (wl, n) in table() {
            assert!((m.n_eff(wl).unwrap() - n).abs() <= 1e-12 * n);
        }
    }

    #[test]
    fn constant_polynomial() {
        let m = DispersionModel::polynomial("c", vec![2.0], (400.0, 3000.0)).unwrap();
        for wl in [400.0, 777.7, 1550.0, 3000.0] {
            assert_eq!(m.n_eff(wl).unwrap(), 2.0);
        }
    }

    #[test]
    fn wave_vector_direct_formula() {
        let m = DispersionModel::polynomial("c", vec![2.0], (400.0, 3000.0)).unwrap();
        let k = m.wave_vector(1000.0).unwrap();
        assert!((k - 4.0 * PI).abs() < 1e-12);
        assert!((k - 12.566).abs() < 1e-3);

        // n = 2 at λ = 4π µm gives k = 1 rad/µm
        let wide = DispersionModel::polynomial("w", vec![2.0], (1000.0, 20000.0)).unwrap();
        assert!((wide.wave_vector(4.0 * PI * 1000.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_is_error_by_default() {
        let m = DispersionModel::tabulated("t", &table()).unwrap();
        let err = m.n_eff(1700.0).unwrap_err();
        assert!(matches!(err, DispersionError::OutOfRange { .. }), "{err}");
        assert!(matches!(
            m.n_eff(-5.0).unwrap_err(),
            DispersionError::InvalidWavelength(_)
        ));
    }

    #[test]
    fn extrapolation_continues_with_boundary_slope() {
        let m = DispersionModel::tabulated("t", &table()).unwrap().with_extrapolation(true);
        let edge = m.evaluate(1640.0).unwrap();
        assert!(!edge.extrapolated);
        let out = m.evaluate(1660.0).unwrap();
        assert!(out.extrapolated);
        let eps = 1e-6;
        let slope = (m.n_eff(1640.0).unwrap() - m.n_eff(1640.0 - eps).unwrap()) / eps;
        assert!((out.n_eff - (edge.n_eff + slope * 20.0)).abs() < 1e-6);

        let p = DispersionModel::polynomial("p", vec![2.0, -0.1, 0.01], (1000.0, 2000.0))
            .unwrap()
            .with_extrapolation(true);
        let v = p.evaluate(2100.0).unwrap();
        // dn/dλ at 2 µm = -0.1 + 0.04 = -0.06 per µm
        let expected = 2.0 - 0.2 + 0.04 - 0.06 * 0.1;
        assert!(v.extrapolated);
        assert!((v.n_eff - expected).abs() < 1e-12);
    }

    #[test]
    fn degenerate_table_rejected() {
        let err = DispersionModel::tabulated("t", &table()[..3]).unwrap_err();
        assert!(matches!(err, DispersionError::DegenerateTable(3)));
    }

    #[test]
    fn implausible_values_rejected() {
        let mut t = table();
        t[2].1 = 3.2;
        assert!(matches!(
            DispersionModel::tabulated("t", &t).unwrap_err(),
            DispersionError::Implausible { .. }
        ));
        assert!(DispersionModel::polynomial("p", vec![0.5], (1000.0, 2000.0)).is_err());
    }

    #[test]
    fn csv_loader_accepts_sorted_table() {
        let csv = "wavelength_nm,n_eff\n1480,1.86\n1520,1.85\n1550,1.8432\n1600,1.83\n";
        let m = DispersionModel::from_csv_reader("t", csv.as_bytes()).unwrap();
        assert_eq!(m.valid_range_nm(), (1480.0, 1600.0));
        assert_eq!(m.n_eff(1520.0).unwrap(), 1.85);
    }

    #[test]
    fn csv_loader_rejects_unsorted_and_duplicates() {
        let unsorted = "wavelength_nm,n_eff\n1480,1.86\n1550,1.85\n1520,1.8432\n1600,1.83\n";
        let dup = "wavelength_nm,n_eff\n1480,1.86\n1520,1.85\n1520,1.8432\n1600,1.83\n";
        let bad_header = "lambda,n\n1480,1.86\n1520,1.85\n1550,1.8432\n1600,1.83\n";
        for (src, needle) in [(unsorted, "unsorted"), (dup, "duplicate"), (bad_header, "header")] {
            let err = DispersionModel::from_csv_reader("t", src.as_bytes()).unwrap_err();
            assert!(err.to_string().contains(needle), "{err}");
        }
    }

    #[test]
    fn default_fit_hits_anchor_periods() {
        let fit = DefaultFit::new();
        for (signal_nm, period_um) in DEFAULT_ANCHORS {
            // independent re-evaluation of Λ = λp/(n_p − n_s)
            let pump_um = signal_nm / 2.0 / 1000.0;
            let dn = fit.nir.n_eff(signal_nm / 2.0).unwrap() - fit.telecom.n_eff(signal_nm).unwrap();
            let got = pump_um / dn;
            assert!((got - period_um).abs() < 1e-12, "{signal_nm}: {got}");
            let via_helper = degenerate_poling_period_um(&fit.nir, &fit.telecom, signal_nm).unwrap();
            assert!((via_helper - period_um).abs() < 1e-12);
        }
    }

    #[test]
    fn default_fit_period_interpolates_at_1550() {
        let fit = DefaultFit::new();
        let period = degenerate_poling_period_um(&fit.nir, &fit.telecom, 1550.0).unwrap();
        assert!(period > 4.45 && period < 4.55, "{period}");
        // k_SH − 2 k_FH equals the grating vector of that period
        let dk = fit.nir.wave_vector(775.0).unwrap() - 2.0 * fit.telecom.wave_vector(1550.0).unwrap();
        assert!((dk - 2.0 * PI / period).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn wave_vector_positive_and_continuous(wl in 1150.0f64..2399.0) {
            let fit = DefaultFit::new();
            let k1 = fit.telecom.wave_vector(wl).unwrap();
            let k2 = fit.telecom.wave_vector(wl + 1e-6).unwrap();
            prop_assert!(k1 > 0.0);
            prop_assert!((k1 - k2).abs() < 1e-7);
        }
    }
}
