use std::path::{Path, PathBuf};

use chirpqpm::counting::{
    analyze_streams, brightness_fit, read_timestamp_csv, simulate_streams, write_timestamp_csv, AnalysisOptions,
    CarOptions, HistogramConfig, SplitterFactor, TimestampStream,
};
use chirpqpm::dispersion::{DefaultFit, DispersionModel, NIR_LABEL, TELECOM_LABEL};
use chirpqpm::grating::{DomainPattern, GratingError};
use chirpqpm::shg::{effective_area, ModeField, PhysicalConstants, ShgModel, EFFICIENCY_UNIT};
use chirpqpm::spdc::{
    channelize, extract_bandwidth, lowest_decile_noise, pair_rate_trend, ChannelRate, SpdcConfig,
};
use chirpqpm::spectrum::{wavelength_grid, PointStatus, Spectrum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{domain, input, usage, CliError};
use crate::svg::line_plot;

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub allow_extrapolation: bool,
}

impl Context {
    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out).map_err(|e| input(&self.out, e))?;
        let path = self.out.join(name);
        std::fs::write(&path, bytes).map_err(|e| input(&path, e))?;
        Ok(path)
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(usage)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write_spectrum(&self, name: &str, s: &Spectrum) -> Result<PathBuf, CliError> {
        let mut buf = Vec::new();
        s.write_csv(&mut buf).map_err(usage)?;
        self.write(name, &buf)
    }

    fn bands(&self) -> Result<(DispersionModel, DispersionModel), CliError> {
        let fit = DefaultFit::new();
        let load = |path: &Option<PathBuf>, label: &str, default: DispersionModel| match path {
            Some(p) => DispersionModel::load_csv(label, p).map_err(|e| input(p, e)),
            None => Ok(default),
        };
        let d = &self.cfg.dispersion;
        let telecom = load(&d.telecom_csv, TELECOM_LABEL, fit.telecom)?;
        let nir = load(&d.nir_csv, NIR_LABEL, fit.nir)?;
        Ok((
            telecom.with_extrapolation(self.allow_extrapolation),
            nir.with_extrapolation(self.allow_extrapolation),
        ))
    }

    fn pattern(&self) -> Result<DomainPattern, CliError> {
        match &self.cfg.design.pattern_csv {
            Some(p) => DomainPattern::load_csv(p).map_err(|e| input(p, e)),
            None => self.cfg.design.chirp().generate_pattern().map_err(design_error),
        }
    }
}

fn design_error(e: GratingError) -> CliError {
    match e {
        GratingError::InvalidDesign(_) => domain(e),
        _ => usage(e),
    }
}

fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && stop >= start && start > 0.0) {
        return Err(CliError::Usage(format!(
            "invalid wavelength grid {start}..{stop} nm in steps of {step} nm"
        )));
    }
    Ok(wavelength_grid(start, stop, step))
}

fn status_counts(s: &Spectrum) -> (usize, usize) {
    let ext = s.status.iter().filter(|p| **p == PointStatus::Extrapolated).count();
    let err = s.status.iter().filter(|p| p.is_error()).count();
    (ext, err)
}

pub type Written = Vec<PathBuf>;

pub fn design(ctx: &Context) -> Result<Written, CliError> {
    let pattern = ctx.pattern()?;
    let mut buf = Vec::new();
    pattern.write_csv(&mut buf).map_err(usage)?;
    let csv_path = ctx.write("pattern.csv", &buf)?;

    let summary = match &ctx.cfg.design.pattern_csv {
        Some(_) => json!({
            "source": "pattern_csv",
            "length_um": pattern.length_um(),
            "length_mm": pattern.length_um() / 1e3,
            "domains": pattern.domain_count(),
            "orientation": pattern.orientation().as_str(),
            "config": ctx.cfg.design,
        }),
        None => {
            let d = ctx.cfg.design.chirp();
            let pm = d.total_length_pm().map_err(design_error)?;
            let (lo, hi) = d.period_range_um();
            json!({
                "source": "generated",
                "length_um": pm as f64 / 1e6,
                "length_mm": pm as f64 / 1e9,
                "length_pm": pm,
                "period_min_um": lo,
                "period_max_um": hi,
                "sections": d.sections,
                "periods_per_section": d.periods_per_section,
                "domains": pattern.domain_count(),
                "duty_cycle": d.duty_cycle,
                "orientation": pattern.orientation().as_str(),
                "config": ctx.cfg.design,
            })
        }
    };
    let json_path = ctx.write_json("design.json", &summary)?;
    Ok(vec![csv_path, json_path])
}

pub fn shg_spectrum(ctx: &Context) -> Result<Written, CliError> {
    let c = &ctx.cfg.shg;
    let (telecom, nir) = ctx.bands()?;
    let pattern = ctx.pattern()?;
    let fh_grid = grid(c.start_nm, c.stop_nm, c.step_nm)?;

    let (s_eff, mut source) = match (&c.fh_mode_csv, &c.sh_mode_csv) {
        (Some(f), Some(s)) => {
            let fh = ModeField::load_csv(f).map_err(|e| input(f, e))?;
            let sh = ModeField::load_csv(s).map_err(|e| input(s, e))?;
            (effective_area(&fh, &sh, c.d_eff_pm_per_v).map_err(domain)?, "mode-overlap")
        }
        (None, None) => (c.s_eff_um2, "config"),
        _ => return Err(usage("fh_mode_csv and sh_mode_csv must be given together")),
    };
    let mut model = ShgModel {
        fh_band: &telecom,
        sh_band: &nir,
        pattern: &pattern,
        s_eff_um2: s_eff,
        constants: PhysicalConstants::with_d_eff(c.d_eff_pm_per_v),
    };
    let mut spectrum = model.spectrum(&fh_grid);
    let peak = spectrum
        .peak_index()
        .ok_or_else(|| domain("no SHG efficiency could be evaluated on the grid"))?;
    let peak_value = spectrum.values[peak];
    let (a, b) = spectrum
        .span_around_peak(0.1 * peak_value)
        .expect("peak lies above a tenth of itself");
    let band = (spectrum.wavelength_nm[a], spectrum.wavelength_nm[b]);

    if let Some(target) = c.calibrate_average {
        model.s_eff_um2 = model
            .calibrate_s_eff(&fh_grid, band, target)
            .ok_or_else(|| domain("cannot calibrate S_eff: band mean is not positive"))?;
        source = "calibrated";
        spectrum = model.spectrum(&fh_grid);
    }
    let (extrapolated, errors) = status_counts(&spectrum);
    let mut written = vec![ctx.write_spectrum("shg_spectrum.csv", &spectrum)?];
    let summary = json!({
        "points": spectrum.len(),
        "unit": EFFICIENCY_UNIT,
        "peak_efficiency": spectrum.values[peak],
        "peak_fh_nm": spectrum.wavelength_nm[peak],
        "plateau_threshold_fraction": 0.1,
        "plateau_lo_nm": band.0,
        "plateau_hi_nm": band.1,
        "plateau_width_nm": band.1 - band.0,
        "plateau_mean_efficiency": spectrum.mean_over(band.0, band.1),
        "s_eff_um2": model.s_eff_um2,
        "s_eff_source": source,
        "extrapolated_points": extrapolated,
        "error_points": errors,
        "allow_extrapolation": ctx.allow_extrapolation,
        "pattern_length_um": pattern.length_um(),
        "config": c,
    });
    written.push(ctx.write_json("shg_summary.json", &summary)?);
    if c.svg {
        let svg = line_plot(&spectrum.wavelength_nm, &spectrum.values, "FH wavelength (nm)", EFFICIENCY_UNIT);
        written.push(ctx.write("shg_spectrum.svg", svg.as_bytes())?);
    }
    Ok(written)
}

pub fn spdc_spectrum(ctx: &Context) -> Result<Written, CliError> {
    let c = &ctx.cfg.spdc;
    let (telecom, nir) = ctx.bands()?;
    let pattern = ctx.pattern()?;
    let signal_grid = grid(c.start_nm, c.stop_nm, c.step_nm)?;
    let cfg = SpdcConfig {
        pump_nm: c.pump_nm,
        pump_band: &nir,
        telecom_band: &telecom,
        pattern: &pattern,
    };
    let density = cfg.spectral_density(&signal_grid).map_err(domain)?;
    let mut written = vec![ctx.write_spectrum("spdc_density.csv", &density)?];

    let noise = lowest_decile_noise(&density);
    let band = extract_bandwidth(&density, &noise, c.pump_nm).map_err(domain)?;
    let trend = if c.channels_nm.is_empty() {
        None
    } else {
        let table: Vec<ChannelRate> = channelize(&density, &c.channels_nm, c.passband_nm)
            .into_iter()
            .map(|(signal_nm, rate)| ChannelRate {
                signal_nm,
                rate_hz_per_mw: rate,
            })
            .collect();
        Some(pair_rate_trend(&table).map_err(domain)?)
    };
    let (extrapolated, errors) = status_counts(&density);
    let report = json!({
        "band": band,
        "noise_definition": "lowest decile of the normalized density",
        "channel_trend": trend,
        "extrapolated_points": extrapolated,
        "error_points": errors,
        "allow_extrapolation": ctx.allow_extrapolation,
        "config": c,
    });
    written.push(ctx.write_json("spdc_report.json", &report)?);
    if c.svg {
        let svg = line_plot(&density.wavelength_nm, &density.values, "signal wavelength (nm)", "relative density");
        written.push(ctx.write("spdc_density.svg", svg.as_bytes())?);
    }
    Ok(written)
}

pub fn bandwidth(ctx: &Context) -> Result<Written, CliError> {
    let c = &ctx.cfg.bandwidth;
    let path = c
        .spectrum_csv
        .as_ref()
        .ok_or_else(|| usage("bandwidth needs [bandwidth] spectrum_csv"))?;
    let spectrum = Spectrum::load_csv(path).map_err(|e| input(path, e))?;
    let noise = match &c.noise {
        Some(n) => n.clone(),
        None => lowest_decile_noise(&spectrum),
    };
    let band = extract_bandwidth(&spectrum, &noise, c.pump_nm).map_err(domain)?;
    let report = json!({
        "band": band,
        "noise_definition": if c.noise.is_some() { "configured sample" } else { "lowest decile of the spectrum" },
        "config": c,
    });
    Ok(vec![ctx.write_json("bandwidth.json", &report)?])
}

fn stream(
    map: &std::collections::BTreeMap<String, Vec<i64>>,
    channel: &str,
    duration_ps: i64,
    path: &Path,
) -> Result<TimestampStream, CliError> {
    let times = map
        .get(channel)
        .ok_or_else(|| input(path, format!("no rows for channel `{channel}`")))?;
    TimestampStream::new(channel, times.clone(), duration_ps).map_err(|e| input(path, e))
}

pub fn analyze_counts(ctx: &Context) -> Result<Written, CliError> {
    let c = &ctx.cfg.counts;
    let mut written = Vec::new();
    let mut summary = serde_json::Map::new();
    let mut put = |k: &str, v: Value| {
        summary.insert(k.to_string(), v);
    };

    if c.timestamps_csv.is_none() && ctx.cfg.brightness.is_none() {
        return Err(usage("analyze-counts needs [counts] timestamps_csv or a [brightness] table"));
    }
    if let Some(path) = &c.timestamps_csv {
        let file = std::fs::File::open(path).map_err(|e| input(path, e))?;
        let map = read_timestamp_csv(file).map_err(|e| input(path, e))?;
        let last = map.values().filter_map(|v| v.last()).copied().max().unwrap_or(0);
        let duration_ps = c.duration_ps.unwrap_or(last);
        let s = stream(&map, &c.signal_channel, duration_ps, path)?;
        let i = stream(&map, &c.idler_channel, duration_ps, path)?;
        let opts = AnalysisOptions {
            histogram: HistogramConfig {
                bin_width_ps: c.bin_width_ps,
                range_ps: c.range_ps,
            },
            car: CarOptions {
                peak_window_ps: c.peak_window_ps,
                accidental_exclusion_ps: c.accidental_exclusion_ps,
                convention: c.convention,
            },
            splitter_factor: SplitterFactor::try_from(c.splitter_factor).map_err(usage)?,
            dark_s_hz: c.dark_s_hz,
            dark_i_hz: c.dark_i_hz,
        };
        let (h, a) = analyze_streams(&s, &i, &opts).map_err(domain)?;
        let mut buf = Vec::new();
        h.write_csv(&mut buf).map_err(usage)?;
        written.push(ctx.write("histogram.csv", &buf)?);

        let pgr = match (c.pump_mw, c.filter_bw_nm) {
            (Some(p), Some(bw)) => a.pgr.clone().with_brightness(p, bw).map_err(usage)?,
            _ => a.pgr.clone(),
        };
        put("duration_s", json!(a.duration_s));
        put("singles_s", json!(a.singles_s));
        put("singles_i", json!(a.singles_i));
        put("car", json!(a.car.car));
        put("car_std_err", json!(a.car.car_std_err));
        put("car_convention", json!(a.car.convention.as_str()));
        put("peak_offset_ps", json!(a.car.peak_offset_ps));
        put("peak_window_bins", json!(a.car.peak_window_bins));
        put("peak_counts", json!(a.car.peak_counts));
        put("accidental_counts", json!(a.car.accidental_counts));
        put("accidental_std_err", json!(a.car.accidental_std_err));
        put("accidental_bins", json!(a.car.accidental_bins));
        put("c_s_hz", json!(pgr.c_s_hz));
        put("c_i_hz", json!(pgr.c_i_hz));
        put("c_si_hz", json!(pgr.c_si_hz));
        put("pgr_hz", json!(pgr.pgr_hz));
        put("pgr_std_err_hz", json!(a.pgr_std_err_hz));
        if let Some(b) = pgr.brightness_hz_per_mw_per_nm {
            put("brightness_hz_per_mw_per_nm", json!(b));
        }
    }
    if let Some(b) = &ctx.cfg.brightness {
        let points: Vec<(f64, f64)> = b.points.iter().map(|p| (p[0], p[1])).collect();
        let fit = brightness_fit(&points, b.filter_bw_nm).map_err(domain)?;
        put("fit_slope_hz_per_uw", json!(fit.slope_hz_per_uw));
        put("fit_residual_rms_hz", json!(fit.residual_rms_hz));
        if let Some(v) = fit.brightness_hz_per_mw_per_nm {
            put("fit_brightness_hz_per_mw_per_nm", json!(v));
        }
        put("fit_points", json!(points.len()));
    }
    // settings echo, flattened
    if let Value::Object(cfg) = serde_json::to_value(c).map_err(usage)? {
        for (k, v) in cfg {
            put(&format!("config_{k}"), v);
        }
    }
    written.push(ctx.write_json("counts.json", &summary)?);
    Ok(written)
}

pub fn simulate_counts(ctx: &Context) -> Result<Written, CliError> {
    let mut params = ctx.cfg.simulate;
    if let Some(seed) = ctx.seed.or(ctx.cfg.seed) {
        params.seed = seed;
    }
    let (s, i) = simulate_streams(&params).map_err(domain)?;
    let mut buf = Vec::new();
    write_timestamp_csv(&mut buf, &[&s, &i]).map_err(usage)?;
    let csv_path = ctx.write("timestamps.csv", &buf)?;
    let summary = json!({
        "duration_ps": s.duration_ps(),
        "events_s": s.len(),
        "events_i": i.len(),
        "channels": [s.channel(), i.channel()],
        "params": params,
    });
    Ok(vec![csv_path, ctx.write_json("simulate.json", &summary)?])
}
