//! Sampled spectra with per-point status.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("invalid spectrum: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("spectrum CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PointStatus {
    Ok,
    /// Evaluated with at least one dispersion value outside its valid range.
    Extrapolated,
    Error(String),
}

impl PointStatus {
    pub fn is_error(&self) -> bool {
        matches!(self, PointStatus::Error(_))
    }
}

impl fmt::Display for PointStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointStatus::Ok => f.write_str("ok"),
            PointStatus::Extrapolated => f.write_str("extrapolated"),
            PointStatus::Error(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl std::str::FromStr for PointStatus {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "" | "ok" => PointStatus::Ok,
            "extrapolated" => PointStatus::Extrapolated,
            other => PointStatus::Error(other.trim_start_matches("error:").trim().to_string()),
        })
    }
}

/// Values on a wavelength grid (nm). Errored points hold `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub wavelength_nm: Vec<f64>,
    pub values: Vec<f64>,
    pub unit: String,
    pub status: Vec<PointStatus>,
}

impl Spectrum {
    pub fn new(wavelength_nm: Vec<f64>, values: Vec<f64>, unit: impl Into<String>) -> Self {
        let status = vec![PointStatus::Ok; values.len()];
        Self {
            wavelength_nm,
            values,
            unit: unit.into(),
            status,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.wavelength_nm.windows(2).all(|w| w[1] > w[0])
    }

    /// Index of the largest finite value.
    pub fn peak_index(&self) -> Option<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((i, v)),
            })
            .map(|(i, _)| i)
    }

    /// Largest contiguous index range around the peak whose values are all
    /// `>= threshold`.
    pub fn span_around_peak(&self, threshold: f64) -> Option<(usize, usize)> {
        let peak = self.peak_index()?;
        if !(self.values[peak] >= threshold) {
            return None;
        }
        let mut lo = peak;
        while lo > 0 && self.values[lo - 1] >= threshold {
            lo -= 1;
        }
        let mut hi = peak;
        while hi + 1 < self.len() && self.values[hi + 1] >= threshold {
            hi += 1;
        }
        Some((lo, hi))
    }

    /// Wavelength width (nm) of the contiguous region around the peak lying at
    /// or above `fraction` of the peak value.
    pub fn width_above_fraction_nm(&self, fraction: f64) -> Option<f64> {
        let peak = self.values[self.peak_index()?];
        self.span_around_peak(fraction * peak)
            .map(|(lo, hi)| self.wavelength_nm[hi] - self.wavelength_nm[lo])
    }

    /// Mean of finite values with wavelength in `[lo, hi]`.
    pub fn mean_over(&self, lo_nm: f64, hi_nm: f64) -> Option<f64> {
        let (sum, n) = self
            .wavelength_nm
            .iter()
            .zip(&self.values)
            .filter(|(w, v)| **w >= lo_nm && **w <= hi_nm && v.is_finite())
            .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "wavelength_nm,value,unit,status")?;
        for ((w, v), s) in self.wavelength_nm.iter().zip(&self.values).zip(&self.status) {
            let status = s.to_string().replace(',', ";");
            writeln!(out, "{w},{v},{},{status}", self.unit)?;
        }
        Ok(())
    }

    /// Reads `wavelength_nm,value[,unit[,status]]`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, SpectrumError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "wavelength_nm" || &headers[1] != "value" {
            return Err(SpectrumError::Invalid(
                "expected header starting with `wavelength_nm,value`".into(),
            ));
        }
        let mut out = Spectrum::new(Vec::new(), Vec::new(), "");
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |j: usize| rec.get(j).unwrap_or("");
            let parse = |j: usize| {
                field(j).parse::<f64>().map_err(|_| {
                    SpectrumError::Invalid(format!("row {}: cannot parse `{}`", i + 1, field(j)))
                })
            };
            out.wavelength_nm.push(parse(0)?);
            out.values.push(parse(1)?);
            if i == 0 {
                out.unit = field(2).to_string();
            }
            out.status.push(field(3).parse().expect("infallible"));
        }
        Ok(out)
    }

    pub fn load_csv(path: &Path) -> Result<Self, SpectrumError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }
}

/// Evenly spaced grid `start, start+step, …` not exceeding `stop`. When the
/// step is the reciprocal of an integer and `start` lies on its lattice, points
/// are formed as `(start·m + i)/m` so that e.g. 0.1 nm grids hit whole
/// nanometres exactly.
pub fn wavelength_grid(start_nm: f64, stop_nm: f64, step_nm: f64) -> Vec<f64> {
    if !(step_nm > 0.0) || stop_nm < start_nm {
        return vec![start_nm];
    }
    let n = ((stop_nm - start_nm) / step_nm + 1e-9).floor() as usize;
    let m = (1.0 / step_nm).round();
    let base = start_nm * m;
    let on_lattice = (m * step_nm - 1.0).abs() < 1e-12 && (base - base.round()).abs() < 1e-9;
    (0..=n)
        .map(|i| {
            if on_lattice {
                (base.round() + i as f64) / m
            } else {
                start_nm + i as f64 * step_nm
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_integer_wavelengths() {
        let g = wavelength_grid(1190.0, 1700.0, 0.1);
        assert_eq!(g.len(), 5101);
        assert_eq!(g[0], 1190.0);
        assert_eq!(g[450], 1235.0);
        assert_eq!(g[3600], 1550.0);
        assert_eq!(*g.last().unwrap(), 1700.0);
        assert_eq!(wavelength_grid(1550.0, 1550.0, 1.0), vec![1550.0]);
    }

    #[test]
    fn span_and_width() {
        let s = Spectrum::new(
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            vec![0.0, 0.5, 1.0, 0.6, 0.05, 0.9],
            "a.u.",
        );
        assert_eq!(s.peak_index(), Some(2));
        assert_eq!(s.span_around_peak(0.5), Some((1, 3)));
        assert_eq!(s.width_above_fraction_nm(0.5), Some(2.0));
        assert_eq!(s.span_around_peak(2.0), None);
        assert_eq!(s.mean_over(2.0, 3.0), Some(0.75));
    }

    #[test]
    fn csv_round_trip() {
        let mut s = Spectrum::new(vec![1500.0, 1500.5], vec![1.25, f64::NAN], "%/W/cm^2");
        s.status[1] = PointStatus::Error("out of range".into());
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "wavelength_nm,value,unit,status\n1500,1.25,%/W/cm^2,ok\n1500.5,NaN,%/W/cm^2,error: out of range\n"
        );
        let back = Spectrum::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back.wavelength_nm, s.wavelength_nm);
        assert_eq!(back.values[0], 1.25);
        assert!(back.values[1].is_nan());
        assert_eq!(back.status, s.status);
        assert_eq!(back.unit, "%/W/cm^2");
    }

    #[test]
    fn two_column_csv_accepted() {
        let s = Spectrum::from_csv_reader("wavelength_nm,value\n1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(s.values, vec![2.0, 4.0]);
        assert!(s.status.iter().all(|st| *st == PointStatus::Ok));
    }
}
