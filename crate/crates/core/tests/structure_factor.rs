mod common;

use std::f64::consts::PI;

use chirpqpm::grating::{grating_vector, structure_factor, structure_factor_sweep, ChirpDesign};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn worst_relative_error(design: &ChirpDesign, seed: u64) -> f64 {
    let pattern = design.generate_pattern().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..200)
        .map(|_| {
            let dk = rng.gen_range(-3.0..3.0);
            let exact = common::structure_factor_by_quadrature(&pattern, dk);
            let got = structure_factor(&pattern, dk).g;
            (got - exact).norm() / exact.norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn matches_quadrature_uniform() {
    let err = worst_relative_error(&ChirpDesign::uniform(4.5, 1515, 0.5), 1);
    eprintln!("worst relative error {err:e}");
    assert!(err <= 1e-9, "worst relative error {err:e}");
}

#[test]
fn matches_quadrature_chirped() {
    let err = worst_relative_error(&ChirpDesign::reference(), 2);
    eprintln!("worst relative error {err:e}");
    assert!(err <= 1e-9, "worst relative error {err:e}");
}

#[test]
fn uniform_first_zeros_at_two_pi_over_length() {
    // a constant d(z) is the limiting uniform grating: G = sinc(ΔkL/2)
    let pattern = chirpqpm::grating::DomainPattern::new(vec![0.0, 1000.0], vec![1]).unwrap();
    let zero = 2.0 * PI / 1000.0;
    for dk in [zero, -zero] {
        assert!(structure_factor(&pattern, dk).g.norm() < 1e-15);
    }
    assert!((structure_factor(&pattern, 0.0).g_squared - 1.0).abs() < 1e-15);

    // square-wave grating: zeros of the main lobe sit at ±2π/L around K
    let p = ChirpDesign::uniform(4.5, 1515, 0.5).generate_pattern().unwrap();
    let k = grating_vector(4.5);
    let l = p.length_um();
    for dk in [k + 2.0 * PI / l, k - 2.0 * PI / l] {
        assert!(structure_factor(&p, dk).g_squared < 1e-20);
    }
}

#[test]
fn sweep_is_identical_across_pool_sizes() {
    let pattern = ChirpDesign::reference().generate_pattern().unwrap();
    let grid: Vec<f64> = (0..2000).map(|i| 1.30 + i as f64 * 1e-4).collect();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| structure_factor_sweep(&pattern, &grid))
    };
    let one = run(1);
    for threads in [2, 3, 8] {
        let other = run(threads);
        assert!(one
            .iter()
            .zip(&other)
            .all(|(a, b)| a.g.re.to_bits() == b.g.re.to_bits() && a.g.im.to_bits() == b.g.im.to_bits()));
    }
}
