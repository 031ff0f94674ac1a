use std::f64::consts::TAU;

use escs_core::bz::{band_limited_random, bz_estimate_check, bz_sweep, estimate_ratio, Grid, ResonancePolicy};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

#[test]
fn plane_wave_ratio_is_a_over_omega() {
    let (l, a) = (1.5, 2.0);
    let w = Grid::from_fn(32, 32, l, a, |x, _| Complex64::new(0.0, TAU * 3.0 * x / l).exp());
    let z = Grid::zeros(32, 32, l, a);
    let e = estimate_ratio(&w, &z, &z, (0.5, 1.0)).unwrap();
    assert!((e.ratio - a / 0.5).abs() < 1e-12, "{}", e.ratio);
}

#[test]
fn random_data_is_stable_under_refinement() {
    // λ² between the torus eigenvalues 4π²·25 and 4π²·26.
    let lambda = TAU * 25.5f64.sqrt();
    let run = |n: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = band_limited_random(n, n, 1.0, 1.0, 20, &mut rng).unwrap();
        let g = Grid::zeros(n, n, 1.0, 1.0);
        bz_estimate_check(lambda, &f, &g, (0.4, 0.6), ResonancePolicy::Error).unwrap().ratio
    };
    let (coarse, fine) = (run(64), run(128));
    assert!(coarse.is_finite() && coarse > 0.0);
    assert!((coarse - fine).abs() / fine < 0.01, "{coarse} vs {fine}");
}

#[test]
fn sweep_gives_finite_constants() {
    let lambdas: Vec<f64> = (0..8).map(|i| 10.0 + 40.0 * i as f64).collect();
    let pts = bz_sweep(1.0, 1.0, 64, &lambdas, (0.4, 0.6), 20, 5, ResonancePolicy::Project).unwrap();
    assert_eq!(pts.len(), 8);
    assert!(pts.iter().all(|p| p.estimate.ratio.is_finite() && p.estimate.ratio > 0.0));
}

#[test]
fn bad_strip_is_rejected() {
    let z = Grid::zeros(8, 8, 1.0, 1.0);
    assert!(estimate_ratio(&z, &z, &z, (0.6, 0.4)).is_err());
    assert!(estimate_ratio(&z, &z, &z, (0.2, 1.4)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ratio_is_scale_invariant(t in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3], seed in 0u64..1000, lam in 5.0f64..60.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = band_limited_random(32, 32, 1.0, 1.0, 8, &mut rng).unwrap();
        let g = band_limited_random(32, 32, 1.0, 1.0, 8, &mut rng).unwrap();
        let w = Grid::from_fn(32, 32, 1.0, 1.0, |x, y| Complex64::new((TAU * x).sin() + (lam * y).cos(), 0.0));
        let a = estimate_ratio(&w, &f, &g, (0.4, 0.6)).unwrap().ratio;
        let b = estimate_ratio(&w.scaled(t), &f.scaled(t), &g.scaled(t), (0.4, 0.6)).unwrap().ratio;
        prop_assert!((a - b).abs() <= 1e-12 * a, "{} vs {}", a, b);
    }
}
