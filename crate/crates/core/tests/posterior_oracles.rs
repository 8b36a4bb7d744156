use balson_core::experiment::equispaced;
use balson_core::model::{merge_signed, predict, split_signed};
use balson_core::rng::substream;
use balson_core::samplers::{importance_sample, rejection_sample, weighted_moments, WeightedSampleSet};
use balson_core::solver::signed_config;
use balson_core::{solve_signed, BalsonMethod, Dataset, DirichletParams, LeastSquares, ModelSpec, SamplerConfig};
use rand::Rng;
use rand_distr::StandardNormal;

fn noisy(theta: &[f64], n: usize, sigma: f64, seed: u64) -> Dataset {
    let mut rng = substream(seed, 0);
    let xs = equispaced(n);
    let ys = xs
        .iter()
        .map(|&x| predict(theta, x) + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Dataset::new(xs, ys).unwrap()
}

/// Posterior mean and variance of `w` for `omega = (w, 1 - w)` under a flat
/// prior, by the midpoint rule on the unnormalized density.
fn quadrature(data: &Dataset, budget: f64, nodes: usize) -> (f64, f64) {
    let h = 1.0 / nodes as f64;
    let rss = |w: f64| -> f64 {
        let t = [budget * w, budget * (1.0 - w)];
        data.inputs()
            .iter()
            .zip(data.targets())
            .map(|(&x, &y)| (y - predict(&t, x)).powi(2))
            .sum()
    };
    let ws: Vec<f64> = (0..nodes).map(|i| (i as f64 + 0.5) * h).collect();
    let floor = ws.iter().map(|&w| rss(w)).fold(f64::INFINITY, f64::min);
    let dens: Vec<f64> = ws.iter().map(|&w| (-0.5 * (rss(w) - floor)).exp()).collect();
    let z: f64 = dens.iter().sum();
    let mean = ws.iter().zip(&dens).map(|(w, d)| w * d).sum::<f64>() / z;
    let var = ws.iter().zip(&dens).map(|(w, d)| (w - mean).powi(2) * d).sum::<f64>() / z;
    (mean, var)
}

fn check_against_quadrature(set: &WeightedSampleSet, mean: f64, var: f64) {
    let (m, v) = weighted_moments(set).unwrap();
    let n = set.ess;
    let fourth: f64 = set
        .samples
        .iter()
        .zip(&set.weights)
        .map(|(s, w)| w * (s.as_slice()[0] - m[0]).powi(4))
        .sum();
    let se_mean = (var / n).sqrt();
    let se_var = ((fourth - v[0] * v[0]) / n).sqrt();
    assert!((m[0] - mean).abs() < 4.0 * se_mean, "mean {} vs {mean} (se {se_mean})", m[0]);
    assert!((v[0] - var).abs() < 4.0 * se_var, "var {} vs {var} (se {se_var})", v[0]);
}

#[test]
fn two_component_posterior_matches_quadrature() {
    let data = noisy(&[0.6, 0.4], 10, 1.0, 21);
    let (mean, var) = quadrature(&data, 1.0, 10_000);
    let problem = LeastSquares::polynomial(&data, &ModelSpec::new(2, 1.0).unwrap()).unwrap();
    let prior = DirichletParams::uniform(2).unwrap();
    let cfg = SamplerConfig::with_samples(20_000);

    let rs = rejection_sample(&problem, &prior, &cfg, &mut substream(1, 0)).unwrap();
    check_against_quadrature(&rs, mean, var);
    let is = importance_sample(&problem, &prior, &cfg, &mut substream(2, 0)).unwrap();
    check_against_quadrature(&is, mean, var);
}

#[test]
fn signed_fit_recovers_sign_pattern() {
    let generator = [0.3, -0.5, 0.0];
    let mut hits = 0;
    for seed in 0..5 {
        let data = noisy(&generator, 100, 0.01, 100 + seed);
        let sampler = SamplerConfig {
            resample_rounds: 5,
            seed,
            ..SamplerConfig::with_samples(5000)
        };
        let cfg = signed_config(BalsonMethod::Isirs, 3, 1.0, sampler).unwrap();
        let fit = solve_signed(&data, &cfg).unwrap();
        assert!(fit.theta.iter().map(|t| t.abs()).sum::<f64>() <= 1.0 + 1e-9);
        if fit.theta[0] > 0.0 && fit.theta[1] < 0.0 {
            hits += 1;
        }
    }
    assert!(hits >= 4, "{hits} of 5");
}

#[test]
fn split_then_merge_is_identity() {
    let mut rng = substream(3, 0);
    for _ in 0..1000 {
        let k = rng.random_range(1..8);
        let v: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
        let back = merge_signed(&split_signed(&v)).unwrap();
        assert_eq!(back, v);
    }
}
