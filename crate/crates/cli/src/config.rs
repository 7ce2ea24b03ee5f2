//! TOML run configuration. Every key is optional; missing keys take the
//! defaults below, and relative paths resolve against the config file.

use std::path::{Path, PathBuf};

use chirpqpm::counting::{CarConvention, SourceParams};
use chirpqpm::grating::ChirpDesign;
use serde::{Deserialize, Serialize};

use crate::error::{input, CliError};

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub design: DesignSection,
    pub dispersion: DispersionSection,
    pub shg: ShgSection,
    pub spdc: SpdcSection,
    pub bandwidth: BandwidthSection,
    pub counts: CountsSection,
    pub brightness: Option<BrightnessSection>,
    pub simulate: SourceParams,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSection {
    pub base_period_um: f64,
    pub step_nm: f64,
    pub sections: usize,
    pub periods_per_section: usize,
    pub duty_cycle: f64,
    /// Use this domain table instead of generating one.
    pub pattern_csv: Option<PathBuf>,
}

impl Default for DesignSection {
    fn default() -> Self {
        let r = ChirpDesign::reference();
        Self {
            base_period_um: r.base_period_um,
            step_nm: r.step_nm,
            sections: r.sections,
            periods_per_section: r.periods_per_section,
            duty_cycle: r.duty_cycle,
            pattern_csv: None,
        }
    }
}

impl DesignSection {
    pub fn chirp(&self) -> ChirpDesign {
        ChirpDesign {
            base_period_um: self.base_period_um,
            step_nm: self.step_nm,
            sections: self.sections,
            periods_per_section: self.periods_per_section,
            duty_cycle: self.duty_cycle,
        }
    }
}

/// Tabulated `wavelength_nm,n_eff` files; the shipped fit is used for any band
/// left unset.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionSection {
    pub telecom_csv: Option<PathBuf>,
    pub nir_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShgSection {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
    pub s_eff_um2: f64,
    /// Mode-field files; when both are given S_eff is computed from them.
    pub fh_mode_csv: Option<PathBuf>,
    pub sh_mode_csv: Option<PathBuf>,
    pub d_eff_pm_per_v: f64,
    /// Rescale S_eff so the mean over the 10 %-of-peak band equals this value.
    pub calibrate_average: Option<f64>,
    pub svg: bool,
}

impl Default for ShgSection {
    fn default() -> Self {
        Self {
            start_nm: 1400.0,
            stop_nm: 1700.0,
            step_nm: 0.1,
            s_eff_um2: 1.0,
            fh_mode_csv: None,
            sh_mode_csv: None,
            d_eff_pm_per_v: chirpqpm::units::D33_LITHIUM_NIOBATE_PM_PER_V,
            calibrate_average: None,
            svg: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpdcSection {
    pub pump_nm: f64,
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
    /// Signal channel centres for the channelized rate report.
    pub channels_nm: Vec<f64>,
    pub passband_nm: f64,
    pub svg: bool,
}

impl Default for SpdcSection {
    fn default() -> Self {
        Self {
            pump_nm: 775.0,
            start_nm: 1190.0,
            stop_nm: 1700.0,
            step_nm: 0.1,
            channels_nm: Vec::new(),
            passband_nm: 13.0,
            svg: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandwidthSection {
    pub spectrum_csv: Option<PathBuf>,
    pub pump_nm: f64,
    /// Off-band noise sample; the lowest decile of the spectrum when unset.
    pub noise: Option<Vec<f64>>,
}

impl Default for BandwidthSection {
    fn default() -> Self {
        Self {
            spectrum_csv: None,
            pump_nm: 775.0,
            noise: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountsSection {
    pub timestamps_csv: Option<PathBuf>,
    pub signal_channel: String,
    pub idler_channel: String,
    /// Acquisition length; the last timestamp when unset.
    pub duration_ps: Option<i64>,
    pub bin_width_ps: i64,
    pub range_ps: i64,
    pub peak_window_ps: i64,
    pub accidental_exclusion_ps: i64,
    pub convention: CarConvention,
    pub splitter_factor: u8,
    pub dark_s_hz: f64,
    pub dark_i_hz: f64,
    pub pump_mw: Option<f64>,
    pub filter_bw_nm: Option<f64>,
}

impl Default for CountsSection {
    fn default() -> Self {
        Self {
            timestamps_csv: None,
            signal_channel: "s".into(),
            idler_channel: "i".into(),
            duration_ps: None,
            bin_width_ps: 100,
            range_ps: 50_000,
            peak_window_ps: 1_000,
            accidental_exclusion_ps: 5_000,
            convention: CarConvention::Subtracted,
            splitter_factor: 1,
            dark_s_hz: 0.0,
            dark_i_hz: 0.0,
            pump_mw: None,
            filter_bw_nm: None,
        }
    }
}

/// `(pump µW, PGR Hz)` points for a through-origin brightness fit.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrightnessSection {
    pub points: Vec<[f64; 2]>,
    pub filter_bw_nm: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| input(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| input(path, e))?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p.as_mut().filter(|p| p.is_relative()) {
                *path = base.join(&*path);
            }
        };
        fix(&mut self.design.pattern_csv);
        fix(&mut self.dispersion.telecom_csv);
        fix(&mut self.dispersion.nir_csv);
        fix(&mut self.shg.fh_mode_csv);
        fix(&mut self.shg.sh_mode_csv);
        fix(&mut self.bandwidth.spectrum_csv);
        fix(&mut self.counts.timestamps_csv);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg.design.chirp(), ChirpDesign::reference());
        assert_eq!(cfg.counts.bin_width_ps, 100);
        assert_eq!(cfg.simulate, SourceParams::default());
    }

    #[test]
    fn partial_sections_and_unknown_keys() {
        let cfg: RunConfig = toml::from_str("[design]\nsections = 1\n[counts]\nconvention = \"raw\"\n").unwrap();
        assert_eq!(cfg.design.sections, 1);
        assert_eq!(cfg.design.periods_per_section, 15);
        assert_eq!(cfg.counts.convention, CarConvention::Raw);
        assert!(toml::from_str::<RunConfig>("[design]\nsection = 1\n").is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut cfg: RunConfig = toml::from_str("[bandwidth]\nspectrum_csv = \"s.csv\"\n").unwrap();
        cfg.resolve_paths(Path::new("/data/run"));
        assert_eq!(cfg.bandwidth.spectrum_csv.unwrap(), Path::new("/data/run/s.csv"));
    }
}
