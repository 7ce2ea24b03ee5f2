use serde::{Deserialize, Serialize};

use super::{histogram, CoincidenceHistogram, CountingError, HistogramConfig, TimestampStream};

/// Numerator convention of the coincidence-to-accidental ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarConvention {
    /// `(C0 − C∞) / C∞`
    #[default]
    Subtracted,
    /// `C0 / C∞`
    Raw,
}

impl CarConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Subtracted => "subtracted",
            Self::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarOptions {
    /// Full width of the coincidence window centred on the maximum bin.
    pub peak_window_ps: i64,
    /// Bins with `|offset|` beyond this delay form the accidental plateau.
    pub accidental_exclusion_ps: i64,
    pub convention: CarConvention,
}

impl Default for CarOptions {
    fn default() -> Self {
        Self {
            peak_window_ps: 1_000,
            accidental_exclusion_ps: 5_000,
            convention: CarConvention::Subtracted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarResult {
    pub car: f64,
    pub car_std_err: f64,
    pub convention: CarConvention,
    pub peak_offset_ps: i64,
    pub peak_window_bins: usize,
    /// C_si(0): counts summed over the peak window.
    pub peak_counts: u64,
    /// C_si(∞): accidental level scaled to the peak window.
    pub accidental_counts: f64,
    pub accidental_std_err: f64,
    pub accidental_bins: usize,
}

pub fn car_from_counts(
    peak: f64,
    accidental: f64,
    convention: CarConvention,
) -> Result<f64, CountingError> {
    if accidental <= 0.0 {
        return Err(CountingError::ZeroAccidentals);
    }
    Ok(match convention {
        CarConvention::Subtracted => (peak - accidental) / accidental,
        CarConvention::Raw => peak / accidental,
    })
}

pub fn car(h: &CoincidenceHistogram, opts: CarOptions) -> Result<CarResult, CountingError> {
    if opts.peak_window_ps < 0 || opts.accidental_exclusion_ps < 0 {
        return Err(CountingError::InvalidParameter(
            "peak window and accidental exclusion must be non-negative".into(),
        ));
    }
    let plateau: Vec<f64> = h
        .offsets_ps
        .iter()
        .zip(&h.counts)
        .filter(|(o, _)| o.abs() > opts.accidental_exclusion_ps)
        .map(|(_, &c)| c as f64)
        .collect();
    let spans_both_sides = h
        .offsets_ps
        .first()
        .zip(h.offsets_ps.last())
        .is_some_and(|(lo, hi)| -lo > opts.accidental_exclusion_ps && *hi > opts.accidental_exclusion_ps);
    if plateau.is_empty() || !spans_both_sides {
        return Err(CountingError::NoAccidentalBins {
            exclusion_ps: opts.accidental_exclusion_ps,
        });
    }
    let m = plateau.len() as f64;
    let mean = plateau.iter().sum::<f64>() / m;
    let var = if plateau.len() > 1 {
        plateau.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        mean
    };
    let se_mean = (var / m).sqrt();

    let peak_idx = (0..h.counts.len())
        .max_by(|&i, &j| h.counts[i].cmp(&h.counts[j]).then(j.cmp(&i)))
        .expect("non-empty histogram");
    let peak_offset = h.offsets_ps[peak_idx];
    let half = opts.peak_window_ps / 2;
    let (peak_counts, peak_bins) = h
        .offsets_ps
        .iter()
        .zip(&h.counts)
        .filter(|(o, _)| (**o - peak_offset).abs() <= half)
        .fold((0u64, 0usize), |(s, n), (_, &c)| (s + c, n + 1));

    let accidental = mean * peak_bins as f64;
    let accidental_se = se_mean * peak_bins as f64;
    let value = car_from_counts(peak_counts as f64, accidental, opts.convention)?;
    // Poisson peak, independent plateau estimate; both conventions share C0/C∞ up to a shift
    let ratio = peak_counts as f64 / accidental;
    let rel_var = if peak_counts > 0 {
        1.0 / peak_counts as f64
    } else {
        0.0
    } + (accidental_se / accidental).powi(2);
    Ok(CarResult {
        car: value,
        car_std_err: ratio * rel_var.sqrt(),
        convention: opts.convention,
        peak_offset_ps: peak_offset,
        peak_window_bins: peak_bins,
        peak_counts,
        accidental_counts: accidental,
        accidental_std_err: accidental_se,
        accidental_bins: plateau.len(),
    })
}

/// Divisor applied to the coincidence rate: 2 for a 50:50 splitter, 1 for
/// deterministic (e.g. wavelength) separation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SplitterFactor(u8);

impl SplitterFactor {
    pub const ONE: Self = Self(1);
    pub const TWO: Self = Self(2);

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for SplitterFactor {
    type Error = CountingError;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 | 2 => Ok(Self(v)),
            _ => Err(CountingError::InvalidSplitter(v)),
        }
    }
}

impl From<SplitterFactor> for u8 {
    fn from(f: SplitterFactor) -> u8 {
        f.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PgrEstimate {
    pub c_s_hz: f64,
    pub c_i_hz: f64,
    pub c_si_hz: f64,
    pub splitter_factor: SplitterFactor,
    pub pgr_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brightness_hz_per_mw_per_nm: Option<f64>,
}

impl PgrEstimate {
    pub fn with_brightness(mut self, pump_mw: f64, filter_bw_nm: f64) -> Result<Self, CountingError> {
        if !(pump_mw > 0.0 && filter_bw_nm > 0.0) {
            return Err(CountingError::InvalidParameter(
                "pump power and filter bandwidth must be positive".into(),
            ));
        }
        self.brightness_hz_per_mw_per_nm = Some(self.pgr_hz / (pump_mw * filter_bw_nm));
        Ok(self)
    }
}

pub fn pgr(c_s: f64, c_i: f64, c_si: f64, factor: SplitterFactor) -> Result<PgrEstimate, CountingError> {
    if !(c_si > 0.0) {
        return Err(CountingError::ZeroCoincidences(c_si));
    }
    if !(c_s >= 0.0 && c_i >= 0.0) {
        return Err(CountingError::InvalidParameter(format!(
            "singles rates must be non-negative, got {c_s} and {c_i} Hz"
        )));
    }
    Ok(PgrEstimate {
        c_s_hz: c_s,
        c_i_hz: c_i,
        c_si_hz: c_si,
        splitter_factor: factor,
        pgr_hz: c_s * c_i / (f64::from(factor.get()) * c_si),
        brightness_hz_per_mw_per_nm: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrightnessFit {
    pub slope_hz_per_uw: f64,
    pub residual_rms_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brightness_hz_per_mw_per_nm: Option<f64>,
}

/// Least-squares line through the origin of `(pump µW, pgr Hz)` points.
pub fn brightness_fit(points: &[(f64, f64)], filter_bw_nm: Option<f64>) -> Result<BrightnessFit, CountingError> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(CountingError::InvalidParameter("non-finite fit point".into()));
    }
    let distinct = points.iter().any(|(x, _)| *x != points[0].0);
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    if points.len() < 2 || !distinct || sxx == 0.0 {
        return Err(CountingError::DegenerateFit);
    }
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let slope = sxy / sxx;
    let rms = (points.iter().map(|(x, y)| (y - slope * x).powi(2)).sum::<f64>() / points.len() as f64).sqrt();
    let brightness = match filter_bw_nm {
        Some(bw) if bw > 0.0 => Some(slope * 1e3 / bw),
        Some(bw) => {
            return Err(CountingError::InvalidParameter(format!(
                "filter bandwidth must be positive, got {bw} nm"
            )))
        }
        None => None,
    };
    Ok(BrightnessFit {
        slope_hz_per_uw: slope,
        residual_rms_hz: rms,
        brightness_hz_per_mw_per_nm: brightness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    pub histogram: HistogramConfig,
    pub car: CarOptions,
    pub splitter_factor: SplitterFactor,
    /// Known dark-count rates subtracted from the singles.
    pub dark_s_hz: f64,
    pub dark_i_hz: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            histogram: HistogramConfig::default(),
            car: CarOptions::default(),
            splitter_factor: SplitterFactor::ONE,
            dark_s_hz: 0.0,
            dark_i_hz: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountAnalysis {
    pub duration_s: f64,
    pub singles_s: u64,
    pub singles_i: u64,
    pub car: CarResult,
    /// PGR from dark-subtracted singles and accidental-subtracted coincidences.
    pub pgr: PgrEstimate,
    pub pgr_std_err_hz: f64,
}

/// Histogram, CAR and PGR of a signal/idler pair of streams.
///
/// The PGR uncertainty is the first-order Poisson propagation that keeps the
/// correlation between singles and coincidences: with net singles `n_s`, `n_i`
/// and net coincidences `x`,
/// `var(ln R) ≈ N_s/n_s² + N_i/n_i² + var(x)/x² + 2x/(n_s n_i) − 2x/(n_s x) − 2x/(n_i x)`.
pub fn analyze_streams(
    s: &TimestampStream,
    i: &TimestampStream,
    opts: &AnalysisOptions,
) -> Result<(CoincidenceHistogram, CountAnalysis), CountingError> {
    let duration_ps = s.duration_ps().max(i.duration_ps());
    if duration_ps <= 0 {
        return Err(CountingError::InvalidParameter("stream duration must be positive".into()));
    }
    let t = duration_ps as f64 / super::PS_PER_S;
    let h = histogram(s, i, opts.histogram)?;
    let car_result = car(&h, opts.car)?;

    let (big_s, big_i) = (s.len() as f64, i.len() as f64);
    let n_s = big_s - opts.dark_s_hz * t;
    let n_i = big_i - opts.dark_i_hz * t;
    let x = car_result.peak_counts as f64 - car_result.accidental_counts;
    if !(x > 0.0) {
        return Err(CountingError::ZeroCoincidences(x / t));
    }
    if !(n_s > 0.0 && n_i > 0.0) {
        return Err(CountingError::InvalidParameter(
            "dark-subtracted singles must be positive".into(),
        ));
    }
    let estimate = pgr(n_s / t, n_i / t, x / t, opts.splitter_factor)?;
    let var_x = car_result.peak_counts as f64 + car_result.accidental_std_err.powi(2);
    let rel_var = big_s / (n_s * n_s) + big_i / (n_i * n_i) + var_x / (x * x) + 2.0 * x / (n_s * n_i)
        - 2.0 / n_s
        - 2.0 / n_i;
    let std_err = estimate.pgr_hz * rel_var.max(0.0).sqrt();
    Ok((
        h,
        CountAnalysis {
            duration_s: t,
            singles_s: s.len() as u64,
            singles_i: i.len() as u64,
            car: car_result,
            pgr: estimate,
            pgr_std_err_hz: std_err,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat(level: u64) -> CoincidenceHistogram {
        CoincidenceHistogram {
            bin_width_ps: 100,
            offsets_ps: (-500..=500).map(|k| k * 100).collect(),
            counts: vec![level; 1001],
        }
    }

    #[test]
    fn direct_formula() {
        assert_eq!(car_from_counts(1100.0, 100.0, CarConvention::Subtracted).unwrap(), 10.0);
        assert_eq!(car_from_counts(1100.0, 100.0, CarConvention::Raw).unwrap(), 11.0);
        assert!(matches!(
            car_from_counts(5.0, 0.0, CarConvention::Subtracted),
            Err(CountingError::ZeroAccidentals)
        ));
    }

    #[test]
    fn flat_histogram_has_zero_car() {
        let r = car(&flat(7), CarOptions::default()).unwrap();
        assert_eq!(r.car, 0.0);
        assert_eq!(r.accidental_std_err, 0.0);
    }

    #[test]
    fn peak_over_plateau() {
        let mut h = flat(10);
        let c = h.index_of(200).unwrap();
        // 11 bins in a 1 ns window, 1100 counts in total on top of nothing else
        for k in c - 5..=c + 5 {
            h.counts[k] = 0;
        }
        h.counts[c] = 1100;
        let r = car(&h, CarOptions::default()).unwrap();
        assert_eq!(r.peak_offset_ps, 200);
        assert_eq!(r.peak_window_bins, 11);
        assert_eq!(r.peak_counts, 1100);
        assert_eq!(r.accidental_counts, 110.0);
        assert!((r.car - 9.0).abs() < 1e-12);
    }

    #[test]
    fn zero_accidentals_is_an_error() {
        let mut h = flat(0);
        h.counts[500] = 10;
        assert!(matches!(car(&h, CarOptions::default()), Err(CountingError::ZeroAccidentals)));
    }

    #[test]
    fn needs_plateau_on_both_sides() {
        let opts = CarOptions {
            accidental_exclusion_ps: 60_000,
            ..CarOptions::default()
        };
        assert!(matches!(car(&flat(3), opts), Err(CountingError::NoAccidentalBins { .. })));
    }

    #[test]
    fn pgr_examples() {
        let two = pgr(1000.0, 1000.0, 100.0, SplitterFactor::TWO).unwrap();
        assert_eq!(two.pgr_hz, 5000.0);
        let one = pgr(1000.0, 1000.0, 100.0, SplitterFactor::ONE).unwrap();
        assert_eq!(one.pgr_hz, 10000.0);
        assert!(matches!(
            pgr(1.0, 1.0, 0.0, SplitterFactor::ONE),
            Err(CountingError::ZeroCoincidences(_))
        ));
        assert!(SplitterFactor::try_from(3).is_err());
        let b = one.with_brightness(2.0, 5.0).unwrap();
        assert_eq!(b.brightness_hz_per_mw_per_nm, Some(1000.0));
    }

    #[test]
    fn brightness_examples() {
        // 2.57 Hz/nW = 2570 Hz/µW on chip
        let pts: Vec<(f64, f64)> = [10.0, 50.0, 100.0, 250.0].iter().map(|p| (*p, 2570.0 * p)).collect();
        let fit = brightness_fit(&pts, None).unwrap();
        assert_eq!(fit.slope_hz_per_uw, 2570.0);
        assert_eq!(fit.residual_rms_hz, 0.0);
        assert!(matches!(
            brightness_fit(&[(5.0, 1.0), (5.0, 2.0)], None),
            Err(CountingError::DegenerateFit)
        ));
        let fit = brightness_fit(&[(1.0, 0.96e6), (2.0, 1.92e6)], Some(46.0)).unwrap();
        let b = fit.brightness_hz_per_mw_per_nm.unwrap();
        assert!((b - 0.96e9 / 46.0).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn pgr_homogeneous_and_symmetric(
            cs in 1.0f64..1e7, ci in 1.0f64..1e7, csi in 1.0f64..1e5, a in 0.01f64..100.0,
        ) {
            let base = pgr(cs, ci, csi, SplitterFactor::TWO).unwrap().pgr_hz;
            let scaled = pgr(a * cs, a * ci, a * csi, SplitterFactor::TWO).unwrap().pgr_hz;
            prop_assert!((scaled - a * base).abs() <= 1e-12 * scaled.abs());
            let swapped = pgr(ci, cs, csi, SplitterFactor::TWO).unwrap().pgr_hz;
            prop_assert_eq!(swapped, base);
        }

        #[test]
        fn car_increases_with_peak(level in 1u64..50, extra in 0u64..10_000, step in 1u64..100) {
            let mut h = flat(level);
            h.counts[500] += extra;
            let a = car(&h, CarOptions::default()).unwrap().car;
            h.counts[500] += step;
            let b = car(&h, CarOptions::default()).unwrap().car;
            prop_assert!(b > a);
        }
    }
}
