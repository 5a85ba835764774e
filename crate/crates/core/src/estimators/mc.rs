use super::{sample_means, sites, EmpiricalEstimate, EstimatorError, Flag, Route};
use crate::convex::ConvexBody;
use crate::fields::FieldModel;
use crate::numeric::{compensated_sum, dot};
use crate::rng::Purpose;

/// Share of the total weight above which a pressure estimate is flagged as
/// dominated by a few replicas.
const ESS_WEIGHT_SHARE: f64 = 0.1;

/// One-sigma half-width of the Wilson score interval for `hits / trials`.
pub fn wilson_std_error(hits: u64, trials: u64) -> f64 {
    let n = trials as f64;
    let p = hits as f64 / n;
    (p * (1.0 - p) / n + 0.25 / (n * n)).sqrt() * n / (n + 1.0)
}

fn approximate(model: &FieldModel, e: &mut EmpiricalEstimate) {
    if !model.is_exact_sampler() {
        e.flag(Flag::ApproximateSampler);
    }
}

pub(crate) fn count_hits(means: &[Vec<f64>], event: &ConvexBody) -> Result<u64, EstimatorError> {
    let mut hits = 0;
    for m in means {
        if event.contains(m)? {
            hits += 1;
        }
    }
    Ok(hits)
}

/// `μ_n(event)` where `event` is an absolute set in state space.
pub fn box_probability(
    model: &FieldModel,
    n: usize,
    event: &ConvexBody,
    replicas: usize,
    seed: u64,
    route: Route,
) -> Result<EmpiricalEstimate, EstimatorError> {
    if route == Route::Auto {
        if let Some(lp) = model.log_box_probability(n, event)? {
            return Ok(EmpiricalEstimate::exact(lp.exp()));
        }
    }
    if replicas == 0 {
        return Err(EstimatorError::InvalidInput("replicas must be at least 1".into()));
    }
    let means = sample_means(model, n, replicas, seed, Purpose::Sample)?;
    let hits = count_hits(&means, event)?;
    let mut e = EmpiricalEstimate {
        value: hits as f64 / replicas as f64,
        std_error: Some(wilson_std_error(hits, replicas as u64)),
        samples: replicas as u64,
        hit_count: Some(hits),
        exact: false,
        flags: Vec::new(),
    };
    if hits == 0 {
        e.flag(Flag::ZeroHits);
    }
    approximate(model, &mut e);
    Ok(e)
}

/// `(1/|Λ|)·log(hits/trials)` with the delta-method standard error.
pub fn entropy_from_hits(hits: u64, trials: u64, sites: f64) -> EmpiricalEstimate {
    let p = hits as f64 / trials as f64;
    let mut e = EmpiricalEstimate {
        value: p.ln() / sites,
        std_error: None,
        samples: trials,
        hit_count: Some(hits),
        exact: false,
        flags: Vec::new(),
    };
    if hits == 0 {
        e.value = f64::NEG_INFINITY;
        e.flag(Flag::ZeroHits);
    } else {
        e.std_error = Some(((1.0 - p) / (p * trials as f64)).sqrt() / sites);
    }
    e
}

/// `(1/n^d)·log μ_n(x + eps·ball)`.
pub fn entropy_estimate(
    model: &FieldModel,
    n: usize,
    x: &[f64],
    eps: f64,
    replicas: usize,
    seed: u64,
    route: Route,
) -> Result<EmpiricalEstimate, EstimatorError> {
    if !(eps > 0.0) {
        return Err(EstimatorError::InvalidInput(format!("eps must be > 0, got {eps}")));
    }
    let event = ConvexBody::ball(x.len(), eps)?.centered_at(x)?;
    scaled_log_probability(model, n, &event, replicas, seed, Purpose::Sample, route)
}

/// Entropy estimates at several `(x, eps)` points, all from one sample set.
pub fn entropy_curve(
    model: &FieldModel,
    n: usize,
    points: &[(Vec<f64>, f64)],
    replicas: usize,
    seed: u64,
    route: Route,
) -> Result<Vec<EmpiricalEstimate>, EstimatorError> {
    let mut events = Vec::with_capacity(points.len());
    for (x, eps) in points {
        if !(*eps > 0.0) {
            return Err(EstimatorError::InvalidInput(format!("eps must be > 0, got {eps}")));
        }
        events.push(ConvexBody::ball(x.len(), *eps)?.centered_at(x)?);
    }
    let volume = sites(model, n)?;
    if route == Route::Auto {
        let exact: Option<Vec<f64>> = events
            .iter()
            .map(|e| model.log_box_probability(n, e))
            .collect::<Result<_, _>>()?;
        if let Some(lps) = exact {
            return Ok(lps
                .into_iter()
                .map(|lp| {
                    let mut e = EmpiricalEstimate::exact(lp / volume);
                    if lp == f64::NEG_INFINITY {
                        e.flag(Flag::ZeroHits);
                    }
                    e
                })
                .collect());
        }
    }
    if replicas == 0 {
        return Err(EstimatorError::InvalidInput("replicas must be at least 1".into()));
    }
    let means = sample_means(model, n, replicas, seed, Purpose::Sample)?;
    events
        .iter()
        .map(|ev| {
            let mut e = entropy_from_hits(count_hits(&means, ev)?, replicas as u64, volume);
            approximate(model, &mut e);
            Ok(e)
        })
        .collect()
}

/// `(1/n^d)·log μ_n(event)`, from the oracle when `route` allows it.
pub(crate) fn scaled_log_probability(
    model: &FieldModel,
    n: usize,
    event: &ConvexBody,
    replicas: usize,
    seed: u64,
    purpose: Purpose,
    route: Route,
) -> Result<EmpiricalEstimate, EstimatorError> {
    let volume = sites(model, n)?;
    if route == Route::Auto {
        if let Some(lp) = model.log_box_probability(n, event)? {
            let mut e = EmpiricalEstimate::exact(lp / volume);
            if lp == f64::NEG_INFINITY {
                e.flag(Flag::ZeroHits);
            }
            return Ok(e);
        }
    }
    if replicas == 0 {
        return Err(EstimatorError::InvalidInput("replicas must be at least 1".into()));
    }
    let means = sample_means(model, n, replicas, seed, purpose)?;
    let hits = count_hits(&means, event)?;
    let mut e = entropy_from_hits(hits, replicas as u64, volume);
    approximate(model, &mut e);
    Ok(e)
}

/// Pressure estimate from sampled means: `(1/|Λ|)(logΣ exp(|Λ|⟨λ, mᵢ⟩) − log N)`
/// with a jackknife standard error.
pub fn pressure_from_means(means: &[Vec<f64>], lambda: &[f64], sites: f64) -> EmpiricalEstimate {
    let n = means.len();
    let terms: Vec<f64> = means.iter().map(|m| sites * dot(lambda, m)).collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = terms.iter().map(|t| (t - top).exp()).collect();
    let total = compensated_sum(weights.iter().copied());
    let value = (top + total.ln() - (n as f64).ln()) / sites;

    let (imax, wmax) = weights
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
    let without_max = compensated_sum(weights.iter().enumerate().filter(|(i, _)| *i != imax).map(|(_, w)| *w));
    let log_rest = ((n - 1) as f64).ln();
    let leave_one_out: Vec<f64> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let rest = if i == imax { without_max } else { total - w };
            (top + rest.ln() - log_rest) / sites
        })
        .collect();
    let loo_mean = compensated_sum(leave_one_out.iter().copied()) / n as f64;
    let spread = compensated_sum(leave_one_out.iter().map(|v| (v - loo_mean).powi(2)));
    let std_error = ((n - 1) as f64 / n as f64 * spread).sqrt();

    let mut e = EmpiricalEstimate {
        value,
        std_error: Some(if std_error.is_nan() { f64::INFINITY } else { std_error }),
        samples: n as u64,
        hit_count: None,
        exact: false,
        flags: Vec::new(),
    };
    if wmax / total > ESS_WEIGHT_SHARE {
        e.flag(Flag::LowEffectiveSampleSize);
    }
    e
}

/// `(1/n^d)·log E exp(n^d⟨λ, m_{Λ(n)}⟩)`.
pub fn pressure_estimate(
    model: &FieldModel,
    n: usize,
    lambda: &[f64],
    replicas: usize,
    seed: u64,
    route: Route,
) -> Result<EmpiricalEstimate, EstimatorError> {
    Ok(pressure_curve(model, n, &[lambda.to_vec()], replicas, seed, route)?.remove(0))
}

/// Pressure estimates at several `λ`, all from one sample set.
pub fn pressure_curve(
    model: &FieldModel,
    n: usize,
    lambdas: &[Vec<f64>],
    replicas: usize,
    seed: u64,
    route: Route,
) -> Result<Vec<EmpiricalEstimate>, EstimatorError> {
    if route == Route::Auto {
        let exact: Option<Vec<f64>> = lambdas
            .iter()
            .map(|l| model.pressure_finite(n, l))
            .collect::<Result<_, _>>()?;
        if let Some(values) = exact {
            return Ok(values.into_iter().map(EmpiricalEstimate::exact).collect());
        }
    }
    if replicas < 2 {
        return Err(EstimatorError::InvalidInput("pressure needs at least 2 replicas".into()));
    }
    for l in lambdas {
        if l.len() != model.state_dim() {
            return Err(EstimatorError::InvalidInput(format!(
                "lambda has dimension {}, model state dimension is {}",
                l.len(),
                model.state_dim()
            )));
        }
    }
    let means = sample_means(model, n, replicas, seed, Purpose::Sample)?;
    let volume = sites(model, n)?;
    Ok(lambdas
        .iter()
        .map(|l| {
            let mut e = pressure_from_means(&means, l, volume);
            approximate(model, &mut e);
            e
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::SiteLaw;

    fn bern(p: f64) -> FieldModel {
        FieldModel::iid(SiteLaw::Bernoulli { p }, 1).unwrap()
    }

    #[test]
    fn binomial_box_probability() {
        let event = ConvexBody::ball(1, 0.1).unwrap().centered_at(&[0.5]).unwrap();
        let exact = box_probability(&bern(0.5), 25, &event, 0, 0, Route::Auto).unwrap();
        assert!(exact.exact);
        assert!((exact.value - 19315400.0 / 2f64.powi(25)).abs() < 1e-14);
        let mc = box_probability(&bern(0.5), 25, &event, 20_000, 3, Route::MonteCarlo).unwrap();
        assert!((mc.value - exact.value).abs() < 3.0 * mc.sigma());
        assert_eq!(mc.hit_count.map(|h| h <= mc.samples), Some(true));
    }

    #[test]
    fn sure_event_has_probability_one() {
        let all = ConvexBody::ball(1, f64::INFINITY).unwrap();
        let m = FieldModel::ising1d(0.5, 0.0).unwrap();
        let e = box_probability(&m, 10, &all, 100, 1, Route::MonteCarlo).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn gaussian_box_probability() {
        let g = FieldModel::iid(SiteLaw::Gaussian { mean: 0.0, var: 1.0 }, 1).unwrap();
        let event = ConvexBody::ball(1, 0.1).unwrap();
        let mc = box_probability(&g, 16, &event, 20_000, 8, Route::MonteCarlo).unwrap();
        assert!((mc.value - 0.310_843_483_220_648_4).abs() < 3.0 * mc.sigma());
    }

    #[test]
    fn entropy_zero_hits_is_flagged() {
        let e = entropy_estimate(&bern(0.5), 50, &[0.95], 0.01, 200, 1, Route::MonteCarlo).unwrap();
        assert_eq!(e.value, f64::NEG_INFINITY);
        assert!(e.has_flag(Flag::ZeroHits));
        assert_eq!(e.hit_count, Some(0));
        assert!(entropy_estimate(&bern(0.5), 5, &[0.5], 0.0, 10, 1, Route::Auto).is_err());
    }

    #[test]
    fn entropy_matches_binomial_oracle() {
        let m = bern(0.5);
        let exact = entropy_estimate(&m, 25, &[0.6], 0.05, 0, 0, Route::Auto).unwrap();
        // k ∈ {14, 15, 16} lie strictly inside (0.55, 0.65).
        let mass: f64 = (14..=16).map(|k| ln_choose(25, k).exp()).sum();
        let want = (mass.ln() - 25.0 * 2f64.ln()) / 25.0;
        assert!((exact.value - want).abs() < 1e-13);
        let mc = entropy_estimate(&m, 25, &[0.6], 0.05, 50_000, 4, Route::MonteCarlo).unwrap();
        assert!((mc.value - exact.value).abs() < 3.0 * mc.sigma());
    }

    fn ln_choose(n: u64, k: u64) -> f64 {
        (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
    }

    #[test]
    fn pressure_at_zero_is_exactly_zero() {
        let g = FieldModel::iid(SiteLaw::Gaussian { mean: 0.0, var: 1.0 }, 1).unwrap();
        let e = pressure_estimate(&g, 16, &[0.0], 1000, 2, Route::MonteCarlo).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.std_error, Some(0.0));
    }

    #[test]
    fn pressure_matches_mgf() {
        let b = bern(0.3);
        let mc = pressure_estimate(&b, 4, &[1.0], 50_000, 5, Route::MonteCarlo).unwrap();
        let exact = (0.7 + 0.3 * 1f64.exp()).ln();
        assert!((mc.value - exact).abs() < 3.0 * mc.sigma());
        let g = FieldModel::iid(SiteLaw::Gaussian { mean: 0.0, var: 1.0 }, 1).unwrap();
        let mc = pressure_estimate(&g, 2, &[0.8], 50_000, 6, Route::MonteCarlo).unwrap();
        assert!((mc.value - 0.32).abs() < 3.0 * mc.sigma());
        let auto = pressure_estimate(&g, 64, &[0.8], 0, 0, Route::Auto).unwrap();
        assert!(auto.exact && (auto.value - 0.32).abs() < 1e-15);
    }

    #[test]
    fn jackknife_matches_brute_force() {
        let means: Vec<Vec<f64>> = [0.1, -0.4, 0.7, 0.2, 0.0].iter().map(|v| vec![*v]).collect();
        let e = pressure_from_means(&means, &[1.3], 3.0);
        let est = |ms: &[Vec<f64>]| {
            (ms.iter().map(|m| (3.0 * 1.3 * m[0]).exp()).sum::<f64>() / ms.len() as f64).ln() / 3.0
        };
        assert!((e.value - est(&means)).abs() < 1e-14);
        let loo: Vec<f64> = (0..5)
            .map(|i| {
                let rest: Vec<Vec<f64>> = means.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, m)| m.clone()).collect();
                est(&rest)
            })
            .collect();
        let mean = loo.iter().sum::<f64>() / 5.0;
        let var = 4.0 / 5.0 * loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        assert!((e.std_error.unwrap() - var.sqrt()).abs() < 1e-13);
        assert!(e.has_flag(Flag::LowEffectiveSampleSize));
    }

    #[test]
    fn wilson_error_is_positive_at_the_edges() {
        assert!(wilson_std_error(0, 100) > 0.0);
        assert!(wilson_std_error(100, 100) > 0.0);
        let mid = wilson_std_error(5000, 10_000);
        assert!((mid - 0.005).abs() < 1e-6);
    }
}
