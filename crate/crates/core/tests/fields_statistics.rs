//! Sampler moments against closed forms, at about five standard errors.

use ldlab::fields::{FieldModel, SiteLaw};
use ldlab::lattice::LatticeBox;
use ldlab::rng::{replica_stream, Purpose};

fn draws(model: &FieldModel, side: usize, replicas: u64, seed: u64) -> Vec<Vec<f64>> {
    let lattice = LatticeBox::cube(model.dim(), side).unwrap();
    (0..replicas)
        .map(|i| {
            model
                .sample(&lattice, &mut replica_stream(seed, Purpose::Sample, i))
                .unwrap()
                .values()
                .to_vec()
        })
        .collect()
}

fn moments(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var, v.len())
}

#[test]
fn iid_site_laws_have_the_right_moments() {
    let laws = [
        (SiteLaw::Bernoulli { p: 0.3 }, 0.3, 0.21),
        (SiteLaw::Spin { p: 0.7 }, 0.4, 0.84),
        (SiteLaw::Gaussian { mean: -1.0, var: 2.5 }, -1.0, 2.5),
        (SiteLaw::Uniform { a: -1.0, b: 3.0 }, 1.0, 16.0 / 12.0),
    ];
    for (law, mean, var) in laws {
        let model = FieldModel::iid(law, 2).unwrap();
        let (m, v, n) = moments(draws(&model, 10, 400, 31).into_iter().flatten());
        let se = (var / n as f64).sqrt();
        assert!((m - mean).abs() < 5.0 * se, "{law:?}: mean {m} vs {mean}");
        assert!((v - var).abs() < 0.05 * var, "{law:?}: variance {v} vs {var}");
    }
}

#[test]
fn ising_chain_nearest_neighbour_correlation() {
    let beta: f64 = 0.6;
    let model = FieldModel::ising1d(beta, 0.0).unwrap();
    let samples = draws(&model, 200, 200, 32);
    let products = samples.iter().flat_map(|s| s.windows(2).map(|w| w[0] * w[1]).collect::<Vec<_>>());
    let (corr, var, n) = moments(products);
    let se = (var / n as f64).sqrt() * 3.0;
    assert!((corr - beta.tanh()).abs() < 5.0 * se, "{corr} vs {}", beta.tanh());
    let (mag, _, _) = moments(samples.into_iter().flatten());
    assert!(mag.abs() < 0.05);
}

#[test]
fn markov_field_visits_states_at_stationary_rates() {
    let model = FieldModel::markov(
        vec![vec![0.9, 0.1], vec![0.3, 0.7]],
        vec![vec![1.0], vec![0.0]],
    )
    .unwrap();
    let (freq, _, n) = moments(draws(&model, 100, 400, 33).into_iter().flatten());
    let stationary = 0.75;
    let se = (stationary * (1.0 - stationary) / n as f64).sqrt() * 3.0;
    assert!((freq - stationary).abs() < 5.0 * se, "{freq}");
}

#[test]
fn glauber_at_infinite_temperature_is_fair_coin_flips() {
    let model = FieldModel::ising2d(0.0, 5, 1).unwrap();
    let samples = draws(&model, 12, 300, 34);
    let (mean, var, n) = moments(samples.iter().flatten().copied());
    assert!(mean.abs() < 5.0 / (n as f64).sqrt());
    assert!((var - 1.0).abs() < 0.02);
    let products = samples.iter().flat_map(|s| (0..11).map(move |c| s[c] * s[c + 1]));
    let (corr, _, m) = moments(products);
    assert!(corr.abs() < 5.0 / (m as f64).sqrt());
}

#[test]
fn glauber_orders_at_low_temperature() {
    let model = FieldModel::ising2d(0.8, 300, 1).unwrap();
    let samples = draws(&model, 16, 20, 35);
    for s in samples {
        let mag = s.iter().sum::<f64>() / s.len() as f64;
        assert!(mag.abs() > 0.5, "magnetisation {mag}");
    }
}
