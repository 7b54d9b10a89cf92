use distinct_dp::accounting::{gaussian_mechanism_rho, gaussian_sigma_for_rho};
use distinct_dp::{
    compose_zcdp, dp_to_zcdp_budget, group_privacy, zcdp_to_dp, BinaryTreeNoise, NoiseSource, PrivacyBudget,
};

const N: usize = 200_000;

fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn laplace_mean_and_variance() {
    for b in [0.5f64, 2.0, 48.0] {
        let mut s = NoiseSource::Seeded(91).split(b.to_bits()).sampler();
        let xs: Vec<f64> = (0..N).map(|_| s.laplace(b)).collect();
        let (mean, var) = moments(&xs);
        let expect = 2.0 * b * b;
        let se = (expect / N as f64).sqrt();
        assert!(mean.abs() <= 3.0 * se, "b = {b}: mean {mean}");
        assert!((var - expect).abs() <= 0.05 * expect, "b = {b}: var {var} vs {expect}");
    }
}

#[test]
fn gaussian_tail_respects_concentration() {
    let sigma = 3.0;
    let mut s = NoiseSource::Seeded(17).sampler();
    let xs: Vec<f64> = (0..N).map(|_| s.gaussian(sigma)).collect();
    let (mean, var) = moments(&xs);
    assert!(mean.abs() <= 3.0 * sigma / (N as f64).sqrt());
    assert!((var - sigma * sigma).abs() <= 0.05 * sigma * sigma);
    for k in [0.5, 1.0, 2.0, 3.0] {
        let lambda = k * sigma;
        let frac = xs.iter().filter(|x| x.abs() > lambda).count() as f64 / N as f64;
        let bound = 2.0 * (-lambda * lambda / (2.0 * sigma * sigma)).exp();
        let slack = 4.0 * (bound.min(1.0) / N as f64).sqrt();
        assert!(frac <= bound + slack, "lambda = {lambda}: {frac} > {bound}");
    }
}

#[test]
fn zeroed_source_draws_zero_everywhere() {
    let mut s = NoiseSource::Zeroed.split(3).sampler();
    assert!((0..100).all(|_| s.gaussian(5.0) == 0.0 && s.laplace(5.0) == 0.0));
    let mut tree = BinaryTreeNoise::new(100, 0.01, NoiseSource::Zeroed).unwrap();
    assert!((1..=100).all(|t| tree.evaluate(t).unwrap() == 0.0));
}

#[test]
fn tree_touches_only_needed_nodes() {
    let mut tree = BinaryTreeNoise::new(1 << 20, 1.0, NoiseSource::Seeded(5)).unwrap();
    tree.evaluate((1 << 20) - 1).unwrap();
    assert_eq!(tree.touched(), 20);
    tree.evaluate(1 << 19).unwrap();
    assert_eq!(tree.touched(), 20);
}

#[test]
fn conversions() {
    let (eps, delta) = zcdp_to_dp(0.5, 1e-6).unwrap();
    assert!((eps - (0.5 + 2.0 * (0.5 * 1e6f64.ln()).sqrt())).abs() < 1e-12);
    assert_eq!(delta, 1e-6);
    assert!((dp_to_zcdp_budget(1.0, 1e-6).unwrap() - 1.0 / (16.0 * 1e6f64.ln())).abs() < 1e-15);
    assert_eq!(PrivacyBudget::zcdp(0.5).unwrap().to_zcdp().unwrap(), 0.5);
    assert!(zcdp_to_dp(0.5, 0.0).is_err() && zcdp_to_dp(0.5, 1.0).is_err());
    assert!((compose_zcdp(&[0.1, 0.2, 0.7]).unwrap() - 1.0).abs() < 1e-15);
    assert!(compose_zcdp(&[0.1, -0.2]).is_err());
}

#[test]
fn group_privacy_formula() {
    let (e, d) = group_privacy(0.5, 1e-6, 3).unwrap();
    assert!((e - 1.5).abs() < 1e-15);
    let want = 1e-6 * (1.5f64.exp() - 1.0) / (0.5f64.exp() - 1.0);
    assert!((d - want).abs() < 1e-18);
    let (_, d0) = group_privacy(0.0, 1e-6, 4).unwrap();
    assert!((d0 - 4e-6).abs() < 1e-18);
}

#[test]
fn gaussian_mechanism_calibration() {
    let sigma = gaussian_sigma_for_rho(2.0, 0.25).unwrap();
    assert!((sigma - (4.0f64 / 0.5).sqrt()).abs() < 1e-12);
    assert!((gaussian_mechanism_rho(2.0, sigma).unwrap() - 0.25).abs() < 1e-12);
}
