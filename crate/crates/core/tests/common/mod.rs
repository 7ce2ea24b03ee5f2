//! Reference computations shared by the integration tests. None of them call
//! the closed forms they are checked against.
#![allow(dead_code)]

use chirpqpm::grating::DomainPattern;
use num_complex::Complex64;

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Adaptive Gauss–Kronrod integral of a complex integrand.
pub fn integrate(f: &impl Fn(f64) -> Complex64, a: f64, b: f64, tol: f64, depth: u32) -> Complex64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return value;
    }
    let m = 0.5 * (a + b);
    integrate(f, a, m, 0.5 * tol, depth - 1) + integrate(f, m, b, 0.5 * tol, depth - 1)
}

/// (1/L) ∫ d(z) e^{-iΔk z} dz by quadrature, one panel per domain since d(z)
/// jumps at every boundary. Each panel is integrated in local coordinates
/// `z = z₁ + t` so that node placement does not suffer from the size of z₁;
/// the start phase is formed error-free.
pub fn structure_factor_by_quadrature(pattern: &DomainPattern, delta_k: f64) -> Complex64 {
    let b = pattern.boundaries();
    let local = |t: f64| Complex64::from_polar(1.0, -delta_k * t);
    let start = |z: f64| {
        let p = delta_k * z;
        let e = delta_k.mul_add(z, -p);
        Complex64::from_polar(1.0, -p) * Complex64::from_polar(1.0, -e)
    };
    let mut parts: Vec<Complex64> = b
        .windows(2)
        .zip(pattern.signs())
        .map(|(w, &s)| {
            let len = w[1] - w[0];
            f64::from(s) * start(w[0]) * integrate(&local, 0.0, len, 1e-13 * len, 12)
        })
        .collect();
    // pairwise summation keeps the oracle's own round-off negligible
    while parts.len() > 1 {
        parts = parts.chunks(2).map(|c| c.iter().sum()).collect();
    }
    parts[0] / pattern.length_um()
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

use chirpqpm::counting::{analyze_streams, simulate_streams, AnalysisOptions, CountAnalysis, SourceParams};

/// Pair rate 10⁵ Hz, 50 % efficiency per arm, 10³ Hz darks, 50 ps jitter, 10 s.
pub fn reference_source(seed: u64) -> SourceParams {
    SourceParams {
        pair_rate_hz: 1e5,
        efficiency_s: 0.5,
        efficiency_i: 0.5,
        dark_s_hz: 1e3,
        dark_i_hz: 1e3,
        jitter_sigma_ps: 50.0,
        duration_s: 10.0,
        seed,
    }
}

pub fn simulate_and_analyze(p: &SourceParams) -> CountAnalysis {
    let (s, i) = simulate_streams(p).unwrap();
    let opts = AnalysisOptions {
        dark_s_hz: p.dark_s_hz,
        dark_i_hz: p.dark_i_hz,
        ..AnalysisOptions::default()
    };
    analyze_streams(&s, &i, &opts).unwrap().1
}

/// Subtracted CAR expected from rate algebra: true coincidences ηₛηᵢR per
/// second, all inside the window when the jitter is small against it, over
/// accidentals SₛSᵢτ with detected singles S = ηR + dark and window length τ.
pub fn expected_car(p: &SourceParams, window_ps: f64) -> f64 {
    let ss = p.efficiency_s * p.pair_rate_hz + p.dark_s_hz;
    let si = p.efficiency_i * p.pair_rate_hz + p.dark_i_hz;
    p.efficiency_s * p.efficiency_i * p.pair_rate_hz / (ss * si * window_ps * 1e-12)
}
