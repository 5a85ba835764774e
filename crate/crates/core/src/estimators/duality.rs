use serde::Serialize;

use super::mc::{count_hits, entropy_from_hits, pressure_from_means};
use super::{opt_float_or_null, sample_means, sites, CheckStatus, EmpiricalEstimate, EstimatorError, Route};
use crate::convex::{legendre_transform, ConvexBody, Grid, GridFunction};
use crate::fields::FieldModel;
use crate::numeric::dot;
use crate::rng::Purpose;

/// Absolute slack on the deterministic side of the Young–Fenchel test.
const IDENTITY_TOL: f64 = 1e-9;
const SIGMAS: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct DualityInput {
    pub x_grid: Grid,
    pub lambda_grid: Grid,
    pub n_ladder: Vec<usize>,
    /// Radius of the ball around each `x` in the entropy surrogate.
    pub eps: f64,
    pub replicas: usize,
    pub route: Route,
}

#[derive(Debug, Clone, Serialize)]
pub struct PressureRow {
    pub n: usize,
    pub lambda: Vec<f64>,
    pub estimate: EmpiricalEstimate,
    #[serde(serialize_with = "opt_float_or_null")]
    pub finite_oracle: Option<f64>,
    #[serde(serialize_with = "opt_float_or_null")]
    pub limit_oracle: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyRow {
    pub n: usize,
    pub x: Vec<f64>,
    pub estimate: EmpiricalEstimate,
    #[serde(serialize_with = "opt_float_or_null")]
    pub finite_oracle: Option<f64>,
    #[serde(serialize_with = "opt_float_or_null")]
    pub limit_oracle: Option<f64>,
}

/// `p̂(λ) − ŝ(x) ≥ ⟨λ, x⟩ − slack − 3σ − 10⁻⁹`.
#[derive(Debug, Clone, Serialize)]
pub struct YoungFenchelRow {
    pub n: usize,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub pressure: f64,
    pub entropy: f64,
    /// `⟨λ, x⟩`
    pub inner: f64,
    /// Support function of the `eps`-ball at `λ`: the finite-`n` slack.
    pub slack: f64,
    pub sigma: f64,
    /// `p̂(λ) − ŝ(x) − ⟨λ, x⟩`, without slack.
    pub literal_margin: f64,
    pub tolerance: f64,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugateRow {
    pub n: usize,
    /// `sup |−p̂*(x) − ŝ(x)|` over nodes with finite `ŝ`.
    pub gap_to_estimate: f64,
    pub nodes_compared: usize,
    /// `sup |−p̂*(x) − s(x)|` over nodes with finite oracle entropy.
    #[serde(serialize_with = "opt_float_or_null")]
    pub gap_to_oracle: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LdpReport {
    pub model: String,
    pub seed: u64,
    pub eps: f64,
    pub replicas: usize,
    pub n_ladder: Vec<usize>,
    pub pressure: Vec<PressureRow>,
    pub entropy: Vec<EntropyRow>,
    pub young_fenchel: Vec<YoungFenchelRow>,
    pub conjugate: Vec<ConjugateRow>,
    /// `sup |−p*(x) − s(x)|` from the limiting pressure oracle, when both
    /// oracles exist.
    #[serde(serialize_with = "opt_float_or_null")]
    pub limit_conjugate_gap: Option<f64>,
}

impl LdpReport {
    pub fn failures(&self) -> usize {
        self.young_fenchel.iter().filter(|r| r.status == CheckStatus::Fail).count()
    }

    /// Smallest slack-free margin over the Young–Fenchel rows.
    pub fn worst_literal_margin(&self) -> f64 {
        self.young_fenchel
            .iter()
            .map(|r| r.literal_margin)
            .fold(f64::INFINITY, f64::min)
    }
}

fn sup_gap(a: &[f64], b: &[f64]) -> (f64, usize) {
    a.iter()
        .zip(b)
        .filter(|(u, v)| u.is_finite() && v.is_finite())
        .fold((0.0, 0), |(g, k), (u, v)| (f64::max(g, (u - v).abs()), k + 1))
}

/// Compare entropy estimates, pressure estimates and their conjugate along an
/// `n` ladder.
pub fn duality_check(model: &FieldModel, input: &DualityInput, seed: u64) -> Result<LdpReport, EstimatorError> {
    let DualityInput {
        x_grid,
        lambda_grid,
        n_ladder,
        eps,
        replicas,
        route,
    } = input;
    let state_dim = model.state_dim();
    if x_grid.dim() != state_dim || lambda_grid.dim() != state_dim {
        return Err(EstimatorError::InvalidInput(format!(
            "grids must have the state dimension {state_dim}"
        )));
    }
    if n_ladder.is_empty() || n_ladder.contains(&0) {
        return Err(EstimatorError::InvalidInput("n ladder must be nonempty with positive entries".into()));
    }
    if !(*eps > 0.0) {
        return Err(EstimatorError::InvalidInput(format!("eps must be > 0, got {eps}")));
    }
    let xs: Vec<Vec<f64>> = x_grid.nodes().collect();
    let lambdas: Vec<Vec<f64>> = lambda_grid.nodes().collect();
    let ball = ConvexBody::ball(state_dim, *eps)?;
    let events: Vec<ConvexBody> = xs.iter().map(|x| ball.centered_at(x)).collect::<Result<_, _>>()?;
    let entropy_limit: Vec<Option<f64>> = xs.iter().map(|x| model.entropy(x)).collect::<Result<_, _>>()?;
    let pressure_limit: Vec<Option<f64>> =
        lambdas.iter().map(|l| model.pressure_limit(l)).collect::<Result<_, _>>()?;

    let mut report = LdpReport {
        model: model.describe(),
        seed,
        eps: *eps,
        replicas: *replicas,
        n_ladder: n_ladder.clone(),
        pressure: Vec::new(),
        entropy: Vec::new(),
        young_fenchel: Vec::new(),
        conjugate: Vec::new(),
        limit_conjugate_gap: None,
    };

    for &n in n_ladder {
        let volume = sites(model, n)?;
        let p_exact: Option<Vec<f64>> =
            lambdas.iter().map(|l| model.pressure_finite(n, l)).collect::<Result<_, _>>()?;
        let lp_exact: Option<Vec<f64>> = events
            .iter()
            .map(|e| model.log_box_probability(n, e))
            .collect::<Result<_, _>>()?;
        let use_p = p_exact.as_ref().filter(|_| *route == Route::Auto);
        let use_s = lp_exact.as_ref().filter(|_| *route == Route::Auto);
        let means = if use_p.is_none() || use_s.is_none() {
            if *replicas < 2 {
                return Err(EstimatorError::InvalidInput("Monte Carlo needs at least 2 replicas".into()));
            }
            sample_means(model, n, *replicas, seed, Purpose::Sample)?
        } else {
            Vec::new()
        };

        let p_hat: Vec<EmpiricalEstimate> = match use_p {
            Some(v) => v.iter().map(|&p| EmpiricalEstimate::exact(p)).collect(),
            None => lambdas.iter().map(|l| pressure_from_means(&means, l, volume)).collect(),
        };
        let s_hat: Vec<EmpiricalEstimate> = match use_s {
            Some(v) => v.iter().map(|&lp| EmpiricalEstimate::exact(lp / volume)).collect(),
            None => events
                .iter()
                .map(|e| Ok(entropy_from_hits(count_hits(&means, e)?, *replicas as u64, volume)))
                .collect::<Result<_, EstimatorError>>()?,
        };

        for (k, l) in lambdas.iter().enumerate() {
            report.pressure.push(PressureRow {
                n,
                lambda: l.clone(),
                estimate: p_hat[k].clone(),
                finite_oracle: p_exact.as_ref().map(|v| v[k]),
                limit_oracle: pressure_limit[k],
            });
        }
        for (k, x) in xs.iter().enumerate() {
            report.entropy.push(EntropyRow {
                n,
                x: x.clone(),
                estimate: s_hat[k].clone(),
                finite_oracle: lp_exact.as_ref().map(|v| v[k] / volume),
                limit_oracle: entropy_limit[k],
            });
        }

        for (i, x) in xs.iter().enumerate() {
            for (k, l) in lambdas.iter().enumerate() {
                let (p, s) = (&p_hat[k], &s_hat[i]);
                let inner = dot(l, x);
                let slack = ball.support(l)?;
                let sigma = p.sigma().hypot(s.sigma());
                let lhs = p.value - s.value;
                let tolerance = slack + SIGMAS * sigma + IDENTITY_TOL;
                report.young_fenchel.push(YoungFenchelRow {
                    n,
                    x: x.clone(),
                    lambda: l.clone(),
                    pressure: p.value,
                    entropy: s.value,
                    inner,
                    slack,
                    sigma,
                    literal_margin: lhs - inner,
                    tolerance,
                    status: CheckStatus::from_bool(lhs >= inner - tolerance),
                });
            }
        }

        let p_fn = GridFunction::new(lambda_grid.clone(), p_hat.iter().map(|e| e.value).collect())?;
        let neg_conj: Vec<f64> = legendre_transform(&p_fn, x_grid)?.values().iter().map(|v| -v).collect();
        let s_vals: Vec<f64> = s_hat.iter().map(|e| e.value).collect();
        let (gap_to_estimate, nodes_compared) = sup_gap(&neg_conj, &s_vals);
        let oracle: Option<Vec<f64>> = entropy_limit.iter().copied().collect();
        report.conjugate.push(ConjugateRow {
            n,
            gap_to_estimate,
            nodes_compared,
            gap_to_oracle: oracle.map(|o| sup_gap(&neg_conj, &o).0),
        });
    }

    let p_lim: Option<Vec<f64>> = pressure_limit.iter().copied().collect();
    let s_lim: Option<Vec<f64>> = entropy_limit.iter().copied().collect();
    if let (Some(p), Some(s)) = (p_lim, s_lim) {
        let conj = legendre_transform(&GridFunction::new(lambda_grid.clone(), p)?, x_grid)?;
        let neg: Vec<f64> = conj.values().iter().map(|v| -v).collect();
        report.limit_conjugate_gap = Some(sup_gap(&neg, &s).0);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::SiteLaw;

    #[test]
    fn bernoulli_limit_conjugate_matches_relative_entropy() {
        let model = FieldModel::iid(SiteLaw::Bernoulli { p: 0.3 }, 1).unwrap();
        let input = DualityInput {
            x_grid: Grid::uniform_1d(0.05, 0.95, 19).unwrap(),
            lambda_grid: Grid::uniform_1d(-6.0, 6.0, 1201).unwrap(),
            n_ladder: vec![20],
            eps: 0.05,
            replicas: 0,
            route: Route::Auto,
        };
        let r = duality_check(&model, &input, 1).unwrap();
        assert!(r.limit_conjugate_gap.unwrap() < 1e-3);
        assert!(r.pressure.iter().all(|p| p.estimate.exact));
        assert_eq!(r.young_fenchel.len(), 19 * 1201);
        assert_eq!(r.failures(), 0);
    }

    #[test]
    fn zero_lambda_row_reduces_to_log_probability_bound() {
        let model = FieldModel::iid(SiteLaw::Gaussian { mean: 0.0, var: 1.0 }, 1).unwrap();
        let input = DualityInput {
            x_grid: Grid::uniform_1d(-0.5, 0.5, 5).unwrap(),
            lambda_grid: Grid::uniform_1d(-1.0, 1.0, 5).unwrap(),
            n_ladder: vec![4, 16],
            eps: 0.1,
            replicas: 4000,
            route: Route::MonteCarlo,
        };
        let r = duality_check(&model, &input, 3).unwrap();
        for row in r.young_fenchel.iter().filter(|r| r.lambda[0] == 0.0) {
            assert_eq!(row.pressure, 0.0);
            assert!(row.entropy <= 0.0);
            assert_eq!(row.status, CheckStatus::Pass);
        }
        assert_eq!(r.conjugate.len(), 2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let model = FieldModel::iid(SiteLaw::Bernoulli { p: 0.3 }, 1).unwrap();
        let mut input = DualityInput {
            x_grid: Grid::uniform_1d(0.1, 0.9, 3).unwrap(),
            lambda_grid: Grid::uniform_1d(-1.0, 1.0, 3).unwrap(),
            n_ladder: vec![0],
            eps: 0.05,
            replicas: 10,
            route: Route::Auto,
        };
        assert!(duality_check(&model, &input, 0).is_err());
        input.n_ladder = vec![5];
        input.eps = 0.0;
        assert!(duality_check(&model, &input, 0).is_err());
    }
}
