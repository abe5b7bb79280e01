use std::f64::consts::PI;

use snse_core::ou::moment_check;
use snse_core::rng::{domain, stream_id, RngStream};
use snse_core::spectral::SpectralBasis;
use snse_core::stable::{abs_moment_mc, levy_increment, sample_standard_stable, tail_index_estimate, StableParams};
use snse_core::stats::{ks_one_sample, KS_C_1PCT};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

const N: usize = 100_000;

fn stream(i: u64) -> RngStream {
    RngStream::new(42, stream_id(domain::MONTE_CARLO, 50, i))
}

fn draws(beta: f64, i: u64) -> Vec<f64> {
    let mut s = stream(i);
    (0..N).map(|_| sample_standard_stable(beta, &mut s).unwrap()).collect()
}

/// `E|X|^p` for the law with characteristic function `exp(-|t|^beta)`.
fn abs_moment(beta: f64, p: f64) -> f64 {
    2f64.powf(p) * gamma((1.0 + p) / 2.0) * gamma(1.0 - p / beta) / (PI.sqrt() * gamma(1.0 - p / 2.0))
}

fn ks_limit() -> f64 {
    KS_C_1PCT / (N as f64).sqrt()
}

#[test]
fn beta_one_is_standard_cauchy() {
    let x = draws(1.0, 0);
    let d = ks_one_sample(&x, |t| 0.5 + t.atan() / PI);
    assert!(d < ks_limit(), "{d}");
    // Quartiles of the Cauchy law sit at -1 and 1.
    let inside = x.iter().filter(|v| v.abs() <= 1.0).count() as f64 / N as f64;
    assert!((inside - 0.5).abs() < 0.01, "{inside}");
}

#[test]
fn beta_two_is_gaussian_with_variance_two() {
    let normal = Normal::new(0.0, 2f64.sqrt()).unwrap();
    let d = ks_one_sample(&draws(2.0, 1), |t| normal.cdf(t));
    assert!(d < ks_limit(), "{d}");
}

#[test]
fn increments_scale_with_dt() {
    // L(dt) / dt^{1/beta} is standard.
    let mut s = stream(2);
    let x: Vec<f64> = (0..N)
        .map(|_| levy_increment(1.0, 1.0, 0.25, &mut s).unwrap() / 0.25f64.powf(1.0))
        .collect();
    let d = ks_one_sample(&x, |t| 0.5 + t.atan() / PI);
    assert!(d < ks_limit(), "{d}");
}

#[test]
fn abs_moments_match_closed_form() {
    for (i, (beta, p)) in [(1.5, 0.5), (1.8, 0.7), (2.0, 1.0)].into_iter().enumerate() {
        let (m, se) = abs_moment_mc(beta, p, N, &mut stream(10 + i as u64)).unwrap();
        let exact = abs_moment(beta, p);
        assert!((m - exact).abs() < 4.0 * se, "beta={beta} p={p}: {m} vs {exact} (se {se})");
    }
    // Gaussian with variance 2: E|X| = 2/sqrt(pi).
    assert!((abs_moment(2.0, 1.0) - 2.0 / PI.sqrt()).abs() < 1e-12);
}

#[test]
fn hill_estimate_recovers_tail_index() {
    let est = tail_index_estimate(&draws(1.5, 3)).unwrap();
    assert!((est.index - 1.5).abs() < 0.2, "{est:?}");
    assert!(!est.light_tail);
}

#[test]
fn stationary_moments_scale_with_sigma_and_damping() {
    // Modes (sigma, lambda) = (1, 1), (2, 1), (1, 4) with alpha = 0.
    let (beta, p) = (1.8, 1.1);
    let basis = SpectralBasis::new(vec![1.0, 1.0, 4.0], 3).unwrap();
    let params = StableParams::new(beta, vec![1.0, 2.0, 1.0]).unwrap();
    let rep = moment_check(&params, &basis, 0.0, 1.0, p, N, 5).unwrap();
    let e: Vec<f64> = rep.modes.iter().map(|m| m.empirical).collect();
    let sigma_ratio = e[1] / e[0];
    let damping_ratio = e[2] / e[0];
    assert!((sigma_ratio / 2f64.powf(p) - 1.0).abs() < 0.05, "{sigma_ratio}");
    assert!((damping_ratio / 4f64.powf(-p / beta) - 1.0).abs() < 0.05, "{damping_ratio}");
}
