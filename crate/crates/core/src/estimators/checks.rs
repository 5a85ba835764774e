use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::mc::scaled_log_probability;
use super::{
    mean_over, replicate, sites, CheckStatus, Comparison, EmpiricalEstimate, EstimatorError, Flag, Route,
};
use crate::convex::ConvexBody;
use crate::fields::{Decoupling, DecouplingStatus, FieldModel, GlauberChain, LocalControl, ModelKind, SiteLaw};
use crate::lattice::{box_distance, marginal_fraction, LatticeBox};
use crate::numeric::compensated_sum;
use crate::rng::{replica_stream, Purpose};

const SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct DecouplingReport {
    pub m: usize,
    pub gap: usize,
    /// Lattice distance between the two boxes actually used.
    pub separation: u64,
    pub cost: f64,
    pub cost_status: DecouplingStatus,
    pub p_a: EmpiricalEstimate,
    pub p_b: EmpiricalEstimate,
    pub p_ab: EmpiricalEstimate,
    /// `log P(A∩B) − log P(A) − log P(B)`.
    pub delta: f64,
    pub sigma: f64,
    /// `Δ̂ ≥ −c(m) − 3σ`.
    pub comparison: Comparison,
    pub flags: Vec<Flag>,
}

fn frequency(hits: u64, trials: u64) -> EmpiricalEstimate {
    EmpiricalEstimate {
        value: hits as f64 / trials as f64,
        std_error: Some(super::wilson_std_error(hits, trials)),
        samples: trials,
        hit_count: Some(hits),
        exact: false,
        flags: if hits == 0 { vec![Flag::ZeroHits] } else { Vec::new() },
    }
}

/// Estimate the decoupling defect for `A = {m_{Λ₁} ∈ first}` and
/// `B = {m_{Λ₂} ∈ second}` on two side-`m` boxes that are more than `gap`
/// apart along the first axis.
pub fn decoupling_check(
    model: &FieldModel,
    m: usize,
    gap: usize,
    first: &ConvexBody,
    second: &ConvexBody,
    replicas: usize,
    seed: u64,
) -> Result<DecouplingReport, EstimatorError> {
    if replicas < 2 {
        return Err(EstimatorError::InvalidInput("decoupling needs at least 2 replicas".into()));
    }
    let d = model.dim();
    let outer = LatticeBox::cube(d, 2 * m + gap)?;
    let left = LatticeBox::cube(d, m)?;
    let mut shift = vec![0i64; d];
    shift[0] = (m + gap) as i64;
    let right = left.translate(&shift)?;
    let separation = box_distance(&left, &right)?;
    let idx_left = left.indices_in(&outer).expect("inside");
    let idx_right = right.indices_in(&outer).expect("inside");

    let outcomes = replicate(replicas, seed, Purpose::Sample, |rng| {
        let config = model.sample(&outer, rng)?;
        let a = first.contains(&mean_over(&config, idx_left.iter().copied()))?;
        let b = second.contains(&mean_over(&config, idx_right.iter().copied()))?;
        Ok((a, b))
    })?;
    let n = replicas as u64;
    let ha = outcomes.iter().filter(|o| o.0).count() as u64;
    let hb = outcomes.iter().filter(|o| o.1).count() as u64;
    let hab = outcomes.iter().filter(|o| o.0 && o.1).count() as u64;
    let (p_a, p_b, p_ab) = (frequency(ha, n), frequency(hb, n), frequency(hab, n));
    let declared = model.decoupling(m);

    let mut flags = Vec::new();
    if !model.is_exact_sampler() {
        flags.push(Flag::ApproximateSampler);
    }
    let (delta, sigma, comparison) = if ha == 0 || hb == 0 || hab == 0 {
        flags.push(Flag::ZeroHits);
        let c = Comparison::at_least("decoupling", f64::NAN, -declared.cost, f64::NAN, f64::NAN)
            .demote(CheckStatus::Skipped);
        (f64::NAN, f64::NAN, c)
    } else {
        let (a, b, ab) = (p_a.value, p_b.value, p_ab.value);
        let delta = ab.ln() - a.ln() - b.ln();
        // Influence function of the log-ratio functional.
        let psi: Vec<f64> = outcomes
            .iter()
            .map(|&(x, y)| {
                let ind = |h: bool| if h { 1.0 } else { 0.0 };
                ind(x && y) / ab - ind(x) / a - ind(y) / b
            })
            .collect();
        let mean = compensated_sum(psi.iter().copied()) / replicas as f64;
        let var = compensated_sum(psi.iter().map(|v| (v - mean).powi(2))) / (replicas - 1) as f64;
        let sigma = (var / replicas as f64).sqrt();
        let c = Comparison::at_least("decoupling", delta, -declared.cost, sigma, SIGMAS * sigma);
        (delta, sigma, c)
    };
    Ok(DecouplingReport {
        m,
        gap,
        separation,
        cost: declared.cost,
        cost_status: declared.status,
        p_a,
        p_b,
        p_ab,
        delta,
        sigma,
        comparison,
        flags,
    })
}

/// Sampling plan for [`local_control_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalControlPlan {
    pub observations: usize,
    /// Torus side for Glauber-sampled models.
    pub side: usize,
    /// Independent Glauber chains sharing the observations.
    pub chains: usize,
}

impl Default for LocalControlPlan {
    fn default() -> Self {
        Self {
            observations: 10_000,
            side: 32,
            chains: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalControlBin {
    pub key: i64,
    pub label: String,
    pub count: u64,
    pub hits: u64,
    pub frequency: f64,
    /// `√(α(1−α)/count)`.
    pub sigma: f64,
    /// Exact conditional mass of `t·C` in this bin, where known.
    pub exact: Option<f64>,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalControlReport {
    pub t: f64,
    pub alpha: f64,
    pub observations: u64,
    pub bins: Vec<LocalControlBin>,
    /// Smallest frequency over nonempty bins.
    pub min_frequency: f64,
    pub worst_bin: Option<String>,
    pub status: CheckStatus,
    pub flags: Vec<Flag>,
}

struct Observation {
    key: i64,
    hit: bool,
}

/// Conditional frequencies of `σ(0) ∈ t(C)·C`, binned by the neighbour
/// statistic, against the declared `α(C)`.
pub fn local_control_check(
    model: &FieldModel,
    body: &ConvexBody,
    plan: LocalControlPlan,
    seed: u64,
) -> Result<LocalControlReport, EstimatorError> {
    let LocalControl { t, alpha } = model
        .local_control(body)?
        .ok_or_else(|| EstimatorError::InvalidInput("model declares no local-control pair for this body".into()))?;
    if plan.observations == 0 {
        return Err(EstimatorError::InvalidInput("observations must be at least 1".into()));
    }
    let inside = |v: &[f64]| body.scaled_contains(t, v);

    // Expected bins: key, label, exact conditional.
    let mut expected: Vec<(i64, String, Option<f64>)> = Vec::new();
    let observations: Vec<Observation> = match model.kind() {
        ModelKind::Ising2d(ising) => {
            if plan.chains == 0 || plan.side < 2 {
                return Err(EstimatorError::InvalidInput("need at least one chain on a torus of side ≥ 2".into()));
            }
            for s in [-4i64, -2, 0, 2, 4] {
                expected.push((s, format!("s={s}"), model.exact_conditional(body, t, s as f64)?));
            }
            let (plus, minus) = (inside(&[1.0])?, inside(&[-1.0])?);
            let chunks: Vec<Vec<Observation>> = (0..plan.chains)
                .into_par_iter()
                .map(|k| {
                    let share = plan.observations / plan.chains + usize::from(k < plan.observations % plan.chains);
                    let mut rng = replica_stream(seed, Purpose::LocalControl, k as u64);
                    let mut chain = GlauberChain::new(plan.side, ising.beta, &mut rng);
                    for _ in 0..ising.burn_in {
                        chain.sweep(&mut rng);
                    }
                    (0..share)
                        .map(|_| {
                            for _ in 0..ising.thinning {
                                chain.sweep(&mut rng);
                            }
                            let (r, c) = (rng.random_range(0..plan.side), rng.random_range(0..plan.side));
                            let hit = if chain.spin(r, c) > 0 { plus } else { minus };
                            Observation {
                                key: chain.neighbor_sum(r, c) as i64,
                                hit,
                            }
                        })
                        .collect()
                })
                .collect();
            chunks.into_iter().flatten().collect()
        }
        ModelKind::Markov(_) | ModelKind::Ising1d(_) => {
            let chain = match model.kind() {
                ModelKind::Markov(c) => c,
                ModelKind::Ising1d(i) => i.chain(),
                _ => unreachable!(),
            };
            let k = chain.states();
            let is_ising = matches!(model.kind(), ModelKind::Ising1d(_));
            let state_inside: Vec<bool> = chain.observable().iter().map(|f| inside(f)).collect::<Result<_, _>>()?;
            let key_of = |i: usize, l: usize| -> i64 {
                if is_ising {
                    (chain.observable()[i][0] + chain.observable()[l][0]) as i64
                } else {
                    (i * k + l) as i64
                }
            };
            if is_ising {
                for s in [-2i64, 0, 2] {
                    expected.push((s, format!("s={s}"), model.exact_conditional(body, t, s as f64)?));
                }
            } else {
                for i in 0..k {
                    for l in 0..k {
                        if chain.bridge_conditional(i, 0, l).is_some() {
                            let exact = (0..k)
                                .filter(|&j| state_inside[j])
                                .map(|j| chain.bridge_conditional(i, j, l).unwrap())
                                .sum();
                            expected.push((key_of(i, l), format!("{i}->*->{l}"), Some(exact)));
                        }
                    }
                }
            }
            replicate(plan.observations, seed, Purpose::LocalControl, |rng| {
                let path = chain.sample_path(3, rng);
                Ok(Observation {
                    key: key_of(path[0], path[2]),
                    hit: state_inside[path[1]],
                })
            })?
        }
        ModelKind::Iid(law) => {
            let d = model.dim();
            let lattice = LatticeBox::cube(d, 3)?;
            let centre = lattice.index_of(&vec![1; d]).expect("centre");
            let neighbours: Vec<usize> = (0..d)
                .flat_map(|a| {
                    [0i64, 2].map(|v| {
                        let mut s = vec![1i64; d];
                        s[a] = v;
                        lattice.index_of(&s).expect("neighbour")
                    })
                })
                .collect();
            match law.atoms() {
                Some(atoms) => {
                    let (lo, hi) = (atoms[0].0 as i64, atoms[1].0 as i64);
                    let step = (hi - lo) as usize;
                    let exact = model.exact_conditional(body, t, 0.0)?;
                    for s in (lo * 2 * d as i64..=hi * 2 * d as i64).step_by(step) {
                        expected.push((s, format!("s={s}"), exact));
                    }
                }
                None => {
                    let exact = match (law, body.dim()) {
                        (SiteLaw::Gaussian { .. } | SiteLaw::Uniform { .. }, 1) => {
                            let (lo, hi) = body.interval_bounds()?;
                            let centre_shift = match body {
                                ConvexBody::Translate { offset, .. } => offset[0] * (1.0 - t),
                                _ => 0.0,
                            };
                            Some(law.interval_probability(lo * t + centre_shift, hi * t + centre_shift))
                        }
                        _ => None,
                    };
                    expected.push((0, "all".into(), exact));
                }
            }
            let discrete = law.atoms().is_some();
            replicate(plan.observations, seed, Purpose::LocalControl, |rng| {
                let config = model.sample(&lattice, rng)?;
                let key = if discrete {
                    neighbours.iter().map(|&i| config.value(i)[0]).sum::<f64>().round() as i64
                } else {
                    0
                };
                Ok(Observation {
                    key,
                    hit: inside(config.value(centre))?,
                })
            })?
        }
    };

    let mut tallies: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
    for o in &observations {
        let e = tallies.entry(o.key).or_default();
        e.0 += 1;
        e.1 += u64::from(o.hit);
    }
    let mut flags = Vec::new();
    if !model.is_exact_sampler() {
        flags.push(Flag::ApproximateSampler);
    }
    let mut bins = Vec::new();
    for (key, label, exact) in expected {
        let (count, hits) = tallies.remove(&key).unwrap_or((0, 0));
        let (frequency, sigma, status) = if count == 0 {
            if !flags.contains(&Flag::EmptyBin) {
                flags.push(Flag::EmptyBin);
            }
            (f64::NAN, f64::NAN, CheckStatus::Skipped)
        } else {
            let f = hits as f64 / count as f64;
            let s = (alpha * (1.0 - alpha) / count as f64).sqrt();
            (f, s, CheckStatus::from_bool(f >= alpha - SIGMAS * s))
        };
        bins.push(LocalControlBin {
            key,
            label,
            count,
            hits,
            frequency,
            sigma,
            exact,
            status,
        });
    }
    debug_assert!(tallies.is_empty(), "unexpected conditioning key");
    let worst = bins
        .iter()
        .filter(|b| b.count > 0)
        .min_by(|a, b| a.frequency.total_cmp(&b.frequency));
    let status = CheckStatus::from_bool(bins.iter().all(|b| b.status != CheckStatus::Fail));
    Ok(LocalControlReport {
        t,
        alpha,
        observations: observations.len() as u64,
        min_frequency: worst.map_or(f64::NAN, |b| b.frequency),
        worst_bin: worst.map(|b| b.label.clone()),
        bins,
        status,
        flags,
    })
}

/// Inputs of one subadditive-lemma check.
#[derive(Debug, Clone)]
pub struct SubadditivityInput {
    pub x: Vec<f64>,
    /// Convex body `C` containing the origin.
    pub body: ConvexBody,
    /// Internal body `B ⊆ C`; defaults to `C`.
    pub internal: Option<ConvexBody>,
    pub eps: f64,
    pub m: usize,
    pub n: usize,
    /// Overrides the model's `(g(m), c(m))`.
    pub decoupling: Option<Decoupling>,
    /// Overrides the model's `(t(B), α(B))` for the field shifted by `x`.
    pub local_control: Option<LocalControl>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubadditivityReport {
    pub m: usize,
    pub n: usize,
    pub eps: f64,
    pub gap: usize,
    pub cost: f64,
    pub rho: f64,
    pub rho_exact: String,
    pub t: Option<f64>,
    pub alpha: Option<f64>,
    /// `ε/ρ ≥ t(B)` (with `ε/0 = ∞`).
    pub threshold_met: bool,
    /// `(1/|Λ(n)|)·log μ_n(x + (1+ε)C)`.
    pub lhs: EmpiricalEstimate,
    /// `(1/|Λ(m)|)·log μ_m(x + C)`.
    pub small_box: EmpiricalEstimate,
    /// `small_box − c(m)/|Λ(m)| + ρ·log α(B)`.
    pub rhs: f64,
    pub comparison: Comparison,
}

pub fn subadditivity_check(
    model: &FieldModel,
    input: &SubadditivityInput,
    replicas: usize,
    seed: u64,
    route: Route,
) -> Result<SubadditivityReport, EstimatorError> {
    let SubadditivityInput { x, body, eps, m, n, .. } = input;
    let (m, n, eps) = (*m, *n, *eps);
    if m == 0 || n < m {
        return Err(EstimatorError::InvalidInput(format!("need n ≥ m ≥ 1, got m={m}, n={n}")));
    }
    if !(eps > 0.0) {
        return Err(EstimatorError::InvalidInput(format!("eps must be > 0, got {eps}")));
    }
    let decl = input.decoupling.unwrap_or_else(|| model.decoupling(m));
    let rho = marginal_fraction(n, m, decl.gap, model.dim())?;
    let internal = input.internal.as_ref().unwrap_or(body);
    let lc = match input.local_control {
        Some(lc) => Some(lc),
        None => model.local_control(&internal.centered_at(x)?)?,
    };
    let threshold_met = match lc {
        Some(lc) => rho.value == 0.0 || eps / rho.value >= lc.t,
        None => false,
    };

    let big_event = body.scaled(1.0 + eps)?.centered_at(x)?;
    let small_event = body.centered_at(x)?;
    let lhs = scaled_log_probability(model, n, &big_event, replicas, seed, Purpose::Numerator, route)?;
    let small_box = scaled_log_probability(model, m, &small_event, replicas, seed, Purpose::Denominator, route)?;

    let marginal_term = match lc {
        _ if rho.value == 0.0 => 0.0,
        Some(lc) => rho.value * lc.alpha.ln(),
        None => f64::NAN,
    };
    let rhs = small_box.value - decl.cost / sites(model, m)? + marginal_term;
    let sigma = small_box.sigma().hypot(lhs.sigma());
    let mut comparison = Comparison::at_least("subadditive lemma", lhs.value, rhs, sigma, SIGMAS * sigma);
    if small_box.has_flag(Flag::ZeroHits) {
        comparison = comparison.demote(CheckStatus::Skipped);
    } else if lc.is_none() || !threshold_met {
        comparison = comparison.demote(CheckStatus::Informational);
    }
    Ok(SubadditivityReport {
        m,
        n,
        eps,
        gap: decl.gap,
        cost: decl.cost,
        rho: rho.value,
        rho_exact: rho.exact.to_string(),
        t: lc.map(|l| l.t),
        alpha: lc.map(|l| l.alpha),
        threshold_met,
        lhs,
        small_box,
        rhs,
        comparison,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(centre: f64, radius: f64) -> ConvexBody {
        ConvexBody::ball(1, radius).unwrap().centered_at(&[centre]).unwrap()
    }

    #[test]
    fn iid_decoupling_defect_is_zero() {
        let model = FieldModel::iid(SiteLaw::Bernoulli { p: 0.5 }, 1).unwrap();
        let ev = interval(0.5, 0.15);
        let r = decoupling_check(&model, 8, 4, &ev, &ev, 20_000, 9).unwrap();
        assert_eq!(r.separation, 5);
        assert!(r.delta.abs() < 3.0 * r.sigma, "{} ± {}", r.delta, r.sigma);
        assert_eq!(r.comparison.status, CheckStatus::Pass);
    }

    #[test]
    fn ising_decoupling_passes_declared_cost() {
        let model = FieldModel::ising1d(0.5, 0.0).unwrap();
        let ev = interval(0.0, 0.2);
        let r = decoupling_check(&model, 8, 8, &ev, &ev, 20_000, 10).unwrap();
        assert_eq!(r.comparison.status, CheckStatus::Pass);
        assert!(r.cost > 0.0);
    }

    #[test]
    fn degenerate_events_are_skipped() {
        let model = FieldModel::iid(SiteLaw::Bernoulli { p: 0.5 }, 1).unwrap();
        let never = interval(5.0, 0.1);
        let r = decoupling_check(&model, 4, 1, &never, &never, 100, 1).unwrap();
        assert_eq!(r.comparison.status, CheckStatus::Skipped);
        assert!(r.flags.contains(&Flag::ZeroHits));
    }

    #[test]
    fn ising1d_local_control_bins_match_closed_form() {
        let model = FieldModel::ising1d(0.5, 0.0).unwrap();
        let plus = ConvexBody::interval(-0.5, 1.5).unwrap();
        let plan = LocalControlPlan {
            observations: 30_000,
            ..Default::default()
        };
        let r = local_control_check(&model, &plus, plan, 4).unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        assert_eq!(r.bins.len(), 3);
        for b in &r.bins {
            let exact = b.exact.unwrap();
            let sd = (exact * (1.0 - exact) / b.count as f64).sqrt();
            assert!((b.frequency - exact).abs() < 3.0 * sd, "{b:?}");
        }
    }

    #[test]
    fn iid_local_control_is_unconditional() {
        let model = FieldModel::iid(SiteLaw::Spin { p: 0.4 }, 2).unwrap();
        let plus = ConvexBody::interval(-0.5, 1.5).unwrap();
        let r = local_control_check(&model, &plus, LocalControlPlan::default(), 2).unwrap();
        assert_eq!(r.alpha, 0.4);
        assert_eq!(r.bins.len(), 5);
        for b in r.bins.iter().filter(|b| b.count > 50) {
            let sd = (0.24 / b.count as f64).sqrt();
            assert!((b.frequency - 0.4).abs() < 3.0 * sd, "{b:?}");
        }
    }

    #[test]
    fn markov_bins_cover_every_bridge() {
        let model =
            FieldModel::markov(vec![vec![0.8, 0.2], vec![0.3, 0.7]], vec![vec![-1.0], vec![1.0]]).unwrap();
        let r = local_control_check(&model, &ConvexBody::interval(-0.5, 1.5).unwrap(), LocalControlPlan::default(), 1)
            .unwrap();
        assert_eq!(r.bins.len(), 4);
        assert_eq!(r.status, CheckStatus::Pass);
    }

    #[test]
    fn subadditive_instance_holds_exactly() {
        let model = FieldModel::iid(SiteLaw::Bernoulli { p: 0.5 }, 1).unwrap();
        let input = SubadditivityInput {
            x: vec![0.5],
            body: ConvexBody::ball(1, 0.1).unwrap(),
            internal: None,
            eps: 0.5,
            m: 10,
            n: 40,
            decoupling: None,
            local_control: Some(LocalControl { t: 1.0, alpha: 0.5 }),
        };
        let r = subadditivity_check(&model, &input, 0, 0, Route::Auto).unwrap();
        assert!(r.lhs.exact && r.small_box.exact);
        assert_eq!(r.rho, 0.0);
        assert!(r.threshold_met);
        assert_eq!(r.comparison.status, CheckStatus::Pass);
        assert!(r.comparison.margin() > 0.0);
    }

    #[test]
    fn subadditive_threshold_is_reported() {
        let model = FieldModel::iid(SiteLaw::Bernoulli { p: 0.5 }, 1).unwrap();
        let input = SubadditivityInput {
            x: vec![0.5],
            body: ConvexBody::ball(1, 0.1).unwrap(),
            internal: None,
            eps: 0.01,
            m: 7,
            n: 30,
            decoupling: None,
            local_control: None,
        };
        let r = subadditivity_check(&model, &input, 0, 0, Route::Auto).unwrap();
        // ρ = 2/30 and t = 8, so ε/ρ = 0.15 < 8.
        assert!(!r.threshold_met);
        assert_eq!(r.t, Some(8.0));
        assert_eq!(r.comparison.status, CheckStatus::Informational);
    }
}
