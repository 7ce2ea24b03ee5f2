//! Spontaneous parametric down-conversion: material phase mismatch, relative
//! spectral density and bandwidth extraction.
//!
//! Photons shorter than the degenerate wavelength `2λp` are labelled signal;
//! the idler wavelength always follows from `1/λi = 1/λp − 1/λs`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{DispersionError, DispersionModel};
use crate::grating::{structure_factor, DomainPattern};
use crate::spectrum::{wavelength_grid, PointStatus, Spectrum};
use crate::units::{frequency_thz, idler_wavelength_nm};

pub const DENSITY_UNIT: &str = "relative";

/// Signal grid used when none is configured: 1190–1700 nm in 0.1 nm steps.
pub fn default_signal_grid() -> Vec<f64> {
    wavelength_grid(1190.0, 1700.0, 0.1)
}

#[derive(Debug, Error)]
pub enum SpdcError {
    #[error("signal wavelength {signal_nm} nm must exceed the pump wavelength {pump_nm} nm")]
    InvalidSignal { signal_nm: f64, pump_nm: f64 },
    #[error("no spectral value reaches the threshold {threshold}")]
    NothingAboveThreshold { threshold: f64 },
    #[error("wavelength grid is not strictly increasing")]
    NonMonotonicGrid,
    #[error("noise sample is empty")]
    EmptyNoise,
    #[error("signal grid is empty")]
    EmptyGrid,
    #[error("coincidence table is empty")]
    EmptyTable,
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
}

/// Pump, band models and poling pattern of one SPDC configuration.
#[derive(Debug, Clone, Copy)]
pub struct SpdcConfig<'a> {
    pub pump_nm: f64,
    pub pump_band: &'a DispersionModel,
    pub telecom_band: &'a DispersionModel,
    pub pattern: &'a DomainPattern,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mismatch {
    /// k_p − k_s − k_i, rad/µm
    pub delta_k: f64,
    pub idler_nm: f64,
    pub extrapolated: bool,
}

impl SpdcConfig<'_> {
    /// Material phase mismatch `k_p − k_s − k_i` (grating term excluded).
    pub fn phase_mismatch(&self, signal_nm: f64) -> Result<Mismatch, SpdcError> {
        if !(signal_nm > self.pump_nm && signal_nm.is_finite()) {
            return Err(SpdcError::InvalidSignal {
                signal_nm,
                pump_nm: self.pump_nm,
            });
        }
        let idler_nm = idler_wavelength_nm(self.pump_nm, signal_nm);
        let kp = self.pump_band.wave_vector_eval(self.pump_nm)?;
        let ks = self.telecom_band.wave_vector_eval(signal_nm)?;
        let ki = self.telecom_band.wave_vector_eval(idler_nm)?;
        Ok(Mismatch {
            delta_k: kp.k - ks.k - ki.k,
            idler_nm,
            extrapolated: kp.extrapolated || ks.extrapolated || ki.extrapolated,
        })
    }

    /// Relative pair density `∝ G²(k_p − k_s − k_i)` over `signal_grid_nm`,
    /// normalized to a peak of 1. Failed points are `NaN` with an error status.
    pub fn spectral_density(&self, signal_grid_nm: &[f64]) -> Result<Spectrum, SpdcError> {
        if signal_grid_nm.is_empty() {
            return Err(SpdcError::EmptyGrid);
        }
        let points: Vec<Result<(f64, bool), SpdcError>> = signal_grid_nm
            .par_iter()
            .map(|&wl| {
                let m = self.phase_mismatch(wl)?;
                Ok((structure_factor(self.pattern, m.delta_k).g_squared, m.extrapolated))
            })
            .collect();
        let mut out = Spectrum::new(signal_grid_nm.to_vec(), vec![0.0; points.len()], DENSITY_UNIT);
        for (i, p) in points.into_iter().enumerate() {
            match p {
                Ok((g2, extrapolated)) => {
                    out.values[i] = g2;
                    if extrapolated {
                        out.status[i] = PointStatus::Extrapolated;
                    }
                }
                Err(e) => {
                    out.values[i] = f64::NAN;
                    out.status[i] = PointStatus::Error(e.to_string());
                }
            }
        }
        if let Some(peak) = out.peak_index().map(|i| out.values[i]).filter(|p| *p > 0.0) {
            for v in out.values.iter_mut().filter(|v| v.is_finite()) {
                *v /= peak;
            }
        }
        Ok(out)
    }
}

/// Bandwidths of a measured or simulated signal spectrum and of the pair
/// spectrum implied by energy conservation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub pump_nm: f64,
    pub threshold_counts: f64,
    pub signal_lo_nm: f64,
    pub signal_hi_nm: f64,
    pub signal_full_bw_thz: f64,
    pub signal_3db_lo_nm: f64,
    pub signal_3db_hi_nm: f64,
    pub signal_3db_bw_thz: f64,
    pub idler_hi_nm: f64,
    pub idler_3db_hi_nm: f64,
    pub pair_full_bw_thz: f64,
    pub pair_full_bw_nm: f64,
    pub pair_3db_bw_thz: f64,
    pub pair_3db_bw_nm: f64,
    pub three_db_definition: String,
    pub signal_side: String,
}

/// Population standard deviation.
fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Signal band = grid points at or above `3·σ(noise)`, restricted to the signal
/// side `λ ≤ 2λp`. The 3-dB band is the contiguous `≥ peak/2` run containing the
/// peak. Pair bandwidths double the signal's in frequency; the pair span in nm
/// runs from the lower signal edge to its conjugate idler.
pub fn extract_bandwidth(
    spectrum: &Spectrum,
    noise: &[f64],
    pump_nm: f64,
) -> Result<BandReport, SpdcError> {
    if !spectrum.is_strictly_increasing() {
        return Err(SpdcError::NonMonotonicGrid);
    }
    if noise.is_empty() {
        return Err(SpdcError::EmptyNoise);
    }
    let threshold = 3.0 * std_dev(noise);
    let degenerate_nm = 2.0 * pump_nm;

    let (grid, values): (Vec<f64>, Vec<f64>) = spectrum
        .wavelength_nm
        .iter()
        .zip(&spectrum.values)
        .filter(|(w, _)| **w <= degenerate_nm && **w > pump_nm)
        .unzip();
    let signal_side = Spectrum::new(grid, values, spectrum.unit.clone());

    let above: Vec<usize> = signal_side
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite() && **v >= threshold)
        .map(|(i, _)| i)
        .collect();
    let (Some(&first), Some(&last)) = (above.first(), above.last()) else {
        return Err(SpdcError::NothingAboveThreshold { threshold });
    };
    let lo = signal_side.wavelength_nm[first];
    let hi = signal_side.wavelength_nm[last];

    let peak = signal_side.values[signal_side.peak_index().expect("non-empty")];
    let (a, b) = signal_side
        .span_around_peak(peak / 2.0)
        .expect("peak is above its own half");
    let lo3 = signal_side.wavelength_nm[a];
    let hi3 = signal_side.wavelength_nm[b];

    let signal_full = frequency_thz(lo) - frequency_thz(hi);
    let signal_3db = frequency_thz(lo3) - frequency_thz(hi3);
    let idler_hi = idler_wavelength_nm(pump_nm, lo);
    let idler_3db_hi = idler_wavelength_nm(pump_nm, lo3);

    Ok(BandReport {
        pump_nm,
        threshold_counts: threshold,
        signal_lo_nm: lo,
        signal_hi_nm: hi,
        signal_full_bw_thz: signal_full,
        signal_3db_lo_nm: lo3,
        signal_3db_hi_nm: hi3,
        signal_3db_bw_thz: signal_3db,
        idler_hi_nm: idler_hi,
        idler_3db_hi_nm: idler_3db_hi,
        pair_full_bw_thz: 2.0 * signal_full,
        pair_full_bw_nm: (idler_hi - lo).abs(),
        pair_3db_bw_thz: 2.0 * signal_3db,
        pair_3db_bw_nm: (idler_3db_hi - lo3).abs(),
        three_db_definition: "contiguous span >= peak/2 containing the global peak".into(),
        signal_side: format!("wavelength <= {degenerate_nm} nm (2 x pump)"),
    })
}

/// Noise sample made of the lowest 10 % of finite spectral values (at least two).
pub fn lowest_decile_noise(spectrum: &Spectrum) -> Vec<f64> {
    let mut v: Vec<f64> = spectrum.values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let n = (v.len() / 10).max(2).min(v.len());
    v.truncate(n);
    v
}

/// Integral of `spectrum` over passbands of width `passband_nm` centred on
/// each of `centers_nm` (trapezoid rule on grid points inside the band).
pub fn channelize(spectrum: &Spectrum, centers_nm: &[f64], passband_nm: f64) -> Vec<(f64, f64)> {
    centers_nm
        .iter()
        .map(|&c| {
            let (lo, hi) = (c - passband_nm / 2.0, c + passband_nm / 2.0);
            let pts: Vec<(f64, f64)> = spectrum
                .wavelength_nm
                .iter()
                .zip(&spectrum.values)
                .filter(|(w, v)| **w >= lo && **w <= hi && v.is_finite())
                .map(|(w, v)| (*w, *v))
                .collect();
            let integral = pts
                .windows(2)
                .map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0))
                .sum();
            (c, integral)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRate {
    pub signal_nm: f64,
    pub rate_hz_per_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Rising,
    Falling,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSegment {
    pub start_nm: f64,
    pub end_nm: f64,
    pub trend: Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub channels: Vec<ChannelRate>,
    pub max: ChannelRate,
    pub min: ChannelRate,
    pub segments: Vec<TrendSegment>,
}

impl TrendReport {
    /// Channel wavelengths ordered by decreasing rate.
    pub fn rank_order(&self) -> Vec<f64> {
        let mut c = self.channels.clone();
        c.sort_by(|a, b| b.rate_hz_per_mw.total_cmp(&a.rate_hz_per_mw));
        c.iter().map(|c| c.signal_nm).collect()
    }
}

/// Sorts channelized coincidence rates by wavelength and summarizes extrema and
/// monotonic runs.
pub fn pair_rate_trend(table: &[ChannelRate]) -> Result<TrendReport, SpdcError> {
    if table.is_empty() {
        return Err(SpdcError::EmptyTable);
    }
    let mut channels = table.to_vec();
    channels.sort_by(|a, b| a.signal_nm.total_cmp(&b.signal_nm));
    let max = *channels
        .iter()
        .reduce(|a, b| if b.rate_hz_per_mw > a.rate_hz_per_mw { b } else { a })
        .unwrap();
    let min = *channels
        .iter()
        .reduce(|a, b| if b.rate_hz_per_mw < a.rate_hz_per_mw { b } else { a })
        .unwrap();

    let mut segments: Vec<TrendSegment> = Vec::new();
    for w in channels.windows(2) {
        let trend = match w[1].rate_hz_per_mw.partial_cmp(&w[0].rate_hz_per_mw) {
            Some(std::cmp::Ordering::Greater) => Trend::Rising,
            Some(std::cmp::Ordering::Less) => Trend::Falling,
            _ => Trend::Flat,
        };
        match segments.last_mut() {
            Some(last) if last.trend == trend => last.end_nm = w[1].signal_nm,
            _ => segments.push(TrendSegment {
                start_nm: w[0].signal_nm,
                end_nm: w[1].signal_nm,
                trend,
            }),
        }
    }
    Ok(TrendReport {
        channels,
        max,
        min,
        segments,
    })
}
