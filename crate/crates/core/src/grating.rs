//! Poling-domain patterns and their structure factor.
//!
//! For a piecewise-constant sign profile the normalized Fourier integral
//!
//! ```text
//! G(Δk) = (1/L) ∫₀ᴸ d(z) e^{−iΔk z} dz
//! ```
//!
//! is a finite sum over domains. Each domain `[z₁, z₂]` contributes
//! `s·(e^{−iΔk z₂} − e^{−iΔk z₁})/(−iΔk)`, which is evaluated in the
//! algebraically identical midpoint form `s·ℓ·sinc(Δk ℓ/2)·e^{−iΔk z_mid}`
//! so that no difference of nearly equal phasors is ever formed. For
//! `|Δk|·ℓ` below [`SMALL_ARGUMENT`] the sinc uses its two-term Taylor series.
//!
//! Phases reach `Δk·L ~ 10⁴` rad, where a rounded product `Δk·z` already
//! costs ~1e-12 rad. The phase is therefore split as `Δk·z₁ + Δk·ℓ/2`: the
//! first product is formed error-free (its rounding residual applied as a
//! first-order rotation) and the half-length rotation is cached per distinct
//! domain length. Domain contributions are accumulated with compensated
//! summation.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::CompensatedComplex;

/// Below this `|Δk|·ℓ` the per-domain sinc factor is taken from its series.
pub const SMALL_ARGUMENT: f64 = 1e-6;

/// Lengths are generated on an integer picometre lattice.
const PM_PER_UM: f64 = 1e6;

#[derive(Debug, Error)]
pub enum GratingError {
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("pattern CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// Step-chirped poling design: `sections` blocks of `periods_per_section`
/// identical periods, the period growing by `step_nm` from block to block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChirpDesign {
    pub base_period_um: f64,
    pub step_nm: f64,
    pub sections: usize,
    pub periods_per_section: usize,
    #[serde(default = "default_duty")]
    pub duty_cycle: f64,
}

fn default_duty() -> f64 {
    0.5
}

impl ChirpDesign {
    /// 101 sections × 15 periods, 4.45 µm → 4.55 µm in 1 nm steps, 50 % duty.
    pub fn reference() -> Self {
        Self {
            base_period_um: 4.45,
            step_nm: 1.0,
            sections: 101,
            periods_per_section: 15,
            duty_cycle: 0.5,
        }
    }

    /// Unchirped grating of `periods` identical periods.
    pub fn uniform(period_um: f64, periods: usize, duty_cycle: f64) -> Self {
        Self {
            base_period_um: period_um,
            step_nm: 0.0,
            sections: 1,
            periods_per_section: periods,
            duty_cycle,
        }
    }

    pub fn validate(&self) -> Result<(), GratingError> {
        let bad = |msg: String| Err(GratingError::InvalidDesign(msg));
        if !(self.base_period_um > 0.0 && self.base_period_um.is_finite()) {
            return bad(format!("base period must be > 0, got {} µm", self.base_period_um));
        }
        if !(self.step_nm >= 0.0 && self.step_nm.is_finite()) {
            return bad(format!("chirp step must be >= 0, got {} nm", self.step_nm));
        }
        if self.sections == 0 {
            return bad("at least one section is required".into());
        }
        if self.periods_per_section == 0 {
            return bad("at least one period per section is required".into());
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle < 1.0) {
            return bad(format!("duty cycle must lie in (0, 1), got {}", self.duty_cycle));
        }
        let base = self.base_period_pm();
        if base <= 0 {
            return bad("base period rounds to zero on the picometre lattice".into());
        }
        let longest = base as i128 + (self.sections as i128 - 1) * self.step_pm() as i128;
        if longest > i64::MAX as i128 / (self.sections as i128 * self.periods_per_section as i128) {
            return bad("design too long to represent".into());
        }
        for section in 0..self.sections {
            let period = self.section_period_pm(section);
            let first = self.first_domain_pm(period);
            if first <= 0 || first >= period {
                return bad(format!(
                    "duty cycle {} leaves an empty domain in a {} µm period",
                    self.duty_cycle,
                    period as f64 / PM_PER_UM
                ));
            }
        }
        Ok(())
    }

    fn base_period_pm(&self) -> i64 {
        (self.base_period_um * PM_PER_UM).round() as i64
    }

    fn step_pm(&self) -> i64 {
        (self.step_nm * 1e3).round() as i64
    }

    fn section_period_pm(&self, section: usize) -> i64 {
        self.base_period_pm() + section as i64 * self.step_pm()
    }

    fn first_domain_pm(&self, period_pm: i64) -> i64 {
        (self.duty_cycle * period_pm as f64).round() as i64
    }

    /// Exact total length in picometres,
    /// `periods_per_section · Σ_{i<sections} (Λ₀ + i·δ)`.
    pub fn total_length_pm(&self) -> Result<i64, GratingError> {
        self.validate()?;
        let n = self.sections as i64;
        let per_section_sum = n * self.base_period_pm() + self.step_pm() * n * (n - 1) / 2;
        Ok(self.periods_per_section as i64 * per_section_sum)
    }

    pub fn total_length_um(&self) -> Result<f64, GratingError> {
        Ok(self.total_length_pm()? as f64 / PM_PER_UM)
    }

    /// Shortest and longest period, µm.
    pub fn period_range_um(&self) -> (f64, f64) {
        (
            self.section_period_pm(0) as f64 / PM_PER_UM,
            self.section_period_pm(self.sections - 1) as f64 / PM_PER_UM,
        )
    }

    /// Emits the domain pattern, section 0 (shortest period) at z = 0. Each
    /// period is a `+1` domain of length `duty·Λ` followed by a `−1` domain.
    pub fn generate_pattern(&self) -> Result<DomainPattern, GratingError> {
        self.validate()?;
        let domains = 2 * self.sections * self.periods_per_section;
        let mut boundaries_pm = Vec::with_capacity(domains + 1);
        let mut signs = Vec::with_capacity(domains);
        let mut z: i64 = 0;
        boundaries_pm.push(z);
        for section in 0..self.sections {
            let period = self.section_period_pm(section);
            let first = self.first_domain_pm(period);
            for _ in 0..self.periods_per_section {
                boundaries_pm.push(z + first);
                signs.push(1);
                z += period;
                boundaries_pm.push(z);
                signs.push(-1);
            }
        }
        debug_assert_eq!(z, self.total_length_pm()?);
        let boundaries = boundaries_pm.iter().map(|&b| b as f64 / PM_PER_UM).collect();
        let mut pattern = DomainPattern::new(boundaries, signs)?;
        pattern.orientation = ChirpOrientation::Ascending;
        Ok(pattern)
    }
}

/// Direction of period growth along z, carried as output metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChirpOrientation {
    Ascending,
    Descending,
    Unspecified,
}

impl ChirpOrientation {
    pub fn as_str(self) -> &'static str {
        match self {
            ChirpOrientation::Ascending => "ascending",
            ChirpOrientation::Descending => "descending",
            ChirpOrientation::Unspecified => "unspecified",
        }
    }
}

/// Piecewise-constant sign profile d(z)/|d_eff| on `[0, L]` (µm).
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPattern {
    boundaries: Vec<f64>,
    signs: Vec<i8>,
    orientation: ChirpOrientation,
    // evaluation cache
    starts: Vec<f64>,
    length_class: Vec<u32>,
    class_lengths: Vec<f64>,
}

impl DomainPattern {
    pub fn new(boundaries: Vec<f64>, signs: Vec<i8>) -> Result<Self, GratingError> {
        let bad = |msg: String| Err(GratingError::InvalidPattern(msg));
        if boundaries.len() < 2 {
            return bad("need at least one domain".into());
        }
        if signs.len() + 1 != boundaries.len() {
            return bad(format!(
                "{} boundaries require {} signs, got {}",
                boundaries.len(),
                boundaries.len() - 1,
                signs.len()
            ));
        }
        if boundaries[0] != 0.0 {
            return bad(format!("first boundary must be 0, got {}", boundaries[0]));
        }
        if boundaries.iter().any(|b| !b.is_finite()) {
            return bad("non-finite boundary".into());
        }
        if let Some(i) = boundaries.windows(2).position(|w| w[1] <= w[0]) {
            return bad(format!("boundaries not strictly increasing at index {}", i + 1));
        }
        if let Some(i) = signs.iter().position(|s| *s != 1 && *s != -1) {
            return bad(format!("sign at domain {i} must be ±1, got {}", signs[i]));
        }

        let starts = boundaries[..boundaries.len() - 1].to_vec();
        let mut class_lengths: Vec<f64> = Vec::new();
        let mut length_class = Vec::with_capacity(signs.len());
        for w in boundaries.windows(2) {
            let len = w[1] - w[0];
            let idx = match class_lengths.iter().rposition(|&c| c.to_bits() == len.to_bits()) {
                Some(i) => i,
                None => {
                    class_lengths.push(len);
                    class_lengths.len() - 1
                }
            };
            length_class.push(idx as u32);
        }
        Ok(Self {
            boundaries,
            signs,
            orientation: ChirpOrientation::Unspecified,
            starts,
            length_class,
            class_lengths,
        })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn domain_count(&self) -> usize {
        self.signs.len()
    }

    pub fn length_um(&self) -> f64 {
        self.boundaries[self.boundaries.len() - 1]
    }

    pub fn orientation(&self) -> ChirpOrientation {
        self.orientation
    }

    /// The same pattern traversed from the other end.
    pub fn mirrored(&self) -> Self {
        let l = self.length_um();
        let boundaries = self.boundaries.iter().rev().map(|b| l - b).collect();
        let signs = self.signs.iter().rev().copied().collect();
        let mut out = Self::new(boundaries, signs).expect("mirror of a valid pattern is valid");
        out.orientation = match self.orientation {
            ChirpOrientation::Ascending => ChirpOrientation::Descending,
            ChirpOrientation::Descending => ChirpOrientation::Ascending,
            ChirpOrientation::Unspecified => ChirpOrientation::Unspecified,
        };
        out
    }

    /// Writes `z_start_um,z_end_um,sign` rows; positions use 16 significant
    /// digits so that they parse back to the identical `f64`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "z_start_um,z_end_um,sign")?;
        for (w, s) in self.boundaries.windows(2).zip(&self.signs) {
            writeln!(out, "{:.15e},{:.15e},{}", w[0], w[1], s)?;
        }
        Ok(())
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, GratingError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["z_start_um", "z_end_um", "sign"] {
            return Err(GratingError::InvalidPattern(
                "expected header `z_start_um,z_end_um,sign`".into(),
            ));
        }
        let mut boundaries = Vec::new();
        let mut signs = Vec::new();
        for (i, row) in rdr.deserialize::<PatternRow>().enumerate() {
            let row = row?;
            match boundaries.last() {
                None => boundaries.push(row.z_start_um),
                Some(&prev) if prev != row.z_start_um => {
                    return Err(GratingError::InvalidPattern(format!(
                        "row {} starts at {} but previous domain ends at {}",
                        i + 1,
                        row.z_start_um,
                        prev
                    )))
                }
                Some(_) => {}
            }
            boundaries.push(row.z_end_um);
            signs.push(row.sign);
        }
        Self::new(boundaries, signs)
    }

    pub fn load_csv(path: &Path) -> Result<Self, GratingError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }
}

#[derive(Debug, Deserialize)]
struct PatternRow {
    z_start_um: f64,
    z_end_um: f64,
    sign: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureFactor {
    /// rad/µm
    pub delta_k: f64,
    pub g: Complex64,
    pub g_squared: f64,
}

#[inline]
fn sinc_half(delta_k: f64, len: f64) -> f64 {
    let arg = delta_k * len;
    if arg.abs() < SMALL_ARGUMENT {
        let x = 0.5 * arg;
        1.0 - x * x / 6.0
    } else {
        let x = 0.5 * arg;
        x.sin() / x
    }
}

/// Normalized structure factor G(Δk) of `pattern`, Δk in rad/µm.
pub fn structure_factor(pattern: &DomainPattern, delta_k: f64) -> StructureFactor {
    // per length class: ℓ·sinc(Δkℓ/2)·e^{−iΔkℓ/2}
    let class_terms: Vec<Complex64> = pattern
        .class_lengths
        .iter()
        .map(|&len| Complex64::from_polar(len * sinc_half(delta_k, len), -0.5 * delta_k * len))
        .collect();
    let mut acc = CompensatedComplex::new();
    for ((&z0, &class), &sign) in pattern
        .starts
        .iter()
        .zip(&pattern.length_class)
        .zip(&pattern.signs)
    {
        let phase = delta_k * z0;
        let residual = delta_k.mul_add(z0, -phase);
        let (s, c) = phase.sin_cos();
        // e^{−i(phase + residual)} to first order in the residual
        let start = Complex64::new(c - residual * s, -(s + residual * c));
        acc.add(start * class_terms[class as usize] * f64::from(sign));
    }
    let g = acc.value() / pattern.length_um();
    // |G| ≤ 1 holds exactly; clamp round-off at the bound
    let g_squared = g.norm_sqr().min(1.0);
    StructureFactor {
        delta_k,
        g,
        g_squared,
    }
}

/// Element-wise [`structure_factor`]. Points are independent, so the output is
/// bit-identical for any rayon pool size.
pub fn structure_factor_sweep(pattern: &DomainPattern, delta_k_grid: &[f64]) -> Vec<StructureFactor> {
    delta_k_grid
        .par_iter()
        .map(|&dk| structure_factor(pattern, dk))
        .collect()
}

/// Grating vector of a first-order QPM period, rad/µm.
pub fn grating_vector(period_um: f64) -> f64 {
    2.0 * PI / period_um
}
