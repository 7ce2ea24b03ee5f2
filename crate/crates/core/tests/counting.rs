mod common;

use chirpqpm::counting::{
    histogram, read_timestamp_csv, simulate_streams, write_timestamp_csv, HistogramConfig, SourceParams,
    TimestampStream,
};

#[test]
fn uncorrelated_poisson_streams_give_flat_accidental_level() {
    let (r, duration_s) = (2e5, 2.0);
    let p = SourceParams {
        pair_rate_hz: 0.0,
        dark_s_hz: r,
        dark_i_hz: r,
        duration_s,
        seed: 17,
        ..SourceParams::default()
    };
    let (s, i) = simulate_streams(&p).unwrap();
    let cfg = HistogramConfig::default();
    let h = histogram(&s, &i, cfg).unwrap();
    // r² · bin width · duration per bin
    let expected = r * r * cfg.bin_width_ps as f64 * 1e-12 * duration_s;
    let n = h.counts.len() as f64;
    let mean = h.total() as f64 / n;
    let sigma = (expected / n).sqrt();
    assert!((mean - expected).abs() <= 5.0 * sigma, "{mean} vs {expected} ± {sigma}");
}

#[test]
fn pair_rate_recovered_over_seeds() {
    let hits = (0..100)
        .filter(|&seed| {
            let a = common::simulate_and_analyze(&common::reference_source(seed));
            (a.pgr.pgr_hz - 1e5).abs() <= 3.0 * a.pgr_std_err_hz
        })
        .count();
    assert!(hits >= 95, "{hits}/100 within 3σ");
}

#[test]
fn car_matches_accidental_model_over_seeds() {
    let hits = (100..200)
        .filter(|&seed| {
            let p = common::reference_source(seed);
            let a = common::simulate_and_analyze(&p);
            let window = a.car.peak_window_bins as f64 * 100.0;
            (a.car.car - common::expected_car(&p, window)).abs() <= 3.0 * a.car.car_std_err
        })
        .count();
    assert!(hits >= 95, "{hits}/100 within 3σ");
}

#[test]
fn car_falls_as_pair_rate_rises() {
    let cars: Vec<f64> = [2e4, 5e4, 1e5, 2e5, 5e5]
        .iter()
        .map(|&rate| {
            let p = SourceParams {
                pair_rate_hz: rate,
                duration_s: 1.0,
                seed: 9,
                ..common::reference_source(0)
            };
            common::simulate_and_analyze(&p).car.car
        })
        .collect();
    assert!(cars.windows(2).all(|w| w[1] <= w[0]), "{cars:?}");
}

#[test]
fn timestamp_csv_round_trip_preserves_analysis() {
    let p = SourceParams {
        duration_s: 0.05,
        seed: 4,
        ..SourceParams::default()
    };
    let (s, i) = simulate_streams(&p).unwrap();
    let mut buf = Vec::new();
    write_timestamp_csv(&mut buf, &[&s, &i]).unwrap();
    let map = read_timestamp_csv(buf.as_slice()).unwrap();
    let s2 = TimestampStream::new("s", map["s"].clone(), s.duration_ps()).unwrap();
    let i2 = TimestampStream::new("i", map["i"].clone(), i.duration_ps()).unwrap();
    assert_eq!((s, i), (s2, i2));
}
