//! Translation-invariant lattice fields with values in R^D.
//!
//! Each [`FieldModel`] pairs a sampler with the metadata the inequality checks
//! need: a declared decoupling pair `(g(m), c(m))`, local-control pairs
//! `(t(C), α(C))`, truncation sets `K(γ)` for bounded state spaces, and
//! whatever exact oracles are available (limit pressure, finite-volume
//! pressure, entropy, box probabilities).
//!
//! Local-control convention: `t(C)` is the smallest power of two `2^k`,
//! `k ≥ 0`, for which `t·C` catches mass. For discrete states, "catches mass"
//! means `t·C` holds at least one state and `α(C)` is the exact minimum over
//! conditions of the conditional mass of `t·C`. For continuous i.i.d. states it
//! means `P(X ∈ t·C) ≥ 1/2` and `α(C) = 1/2`.

mod chain;
mod iid;
mod ising2d;

pub use chain::{ising_lambda_max, Ising1d, MarkovChain};
pub use iid::{normal_interval, normal_sf, relative_entropy, SiteLaw};
pub use ising2d::{heat_bath, GlauberChain, Ising2d, DEFAULT_BURN_IN, DEFAULT_THINNING};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::convex::{ConvexBody, ConvexError};
use crate::lattice::{LatticeBox, LatticeError};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {what} expects {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("configuration: {0}")]
    InvalidConfiguration(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
}

/// A field realisation on a box: `values[i·D..(i+1)·D]` is `σ` at the `i`-th
/// site in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    lattice: LatticeBox,
    state_dim: usize,
    values: Vec<f64>,
}

impl Configuration {
    pub fn new(lattice: LatticeBox, state_dim: usize, values: Vec<f64>) -> Result<Self, FieldError> {
        if state_dim == 0 {
            return Err(FieldError::InvalidConfiguration("state dimension must be at least 1".into()));
        }
        if values.len() != lattice.len() * state_dim {
            return Err(FieldError::InvalidConfiguration(format!(
                "{} values for {} sites of dimension {state_dim}",
                values.len(),
                lattice.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FieldError::InvalidConfiguration("non-finite field value".into()));
        }
        Ok(Self {
            lattice,
            state_dim,
            values,
        })
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `σ` at row-major site index `idx`.
    pub fn value(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.state_dim..(idx + 1) * self.state_dim]
    }

    /// `σ` at a site given by coordinates.
    pub fn at(&self, site: &[i64]) -> Option<&[f64]> {
        self.lattice.index_of(site).map(|i| self.value(i))
    }

    /// The configuration seen through a sub-box.
    pub fn restrict(&self, sub: &LatticeBox) -> Result<Configuration, FieldError> {
        let idx = sub
            .indices_in(&self.lattice)
            .ok_or_else(|| FieldError::InvalidConfiguration("restriction box is not contained".into()))?;
        let values = idx.iter().flat_map(|&i| self.value(i).iter().copied()).collect();
        Configuration::new(sub.clone(), self.state_dim, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecouplingStatus {
    /// Holds with `c = 0` (independent sites).
    Exact,
    /// Engineering declaration; compared against estimates, not proven.
    Declared,
}

/// `(g(m), c(m))`: events on side-`m` boxes farther apart than `g(m)` satisfy
/// `P(A ∩ B) ≥ e^{−c(m)} P(A) P(B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decoupling {
    pub gap: usize,
    pub cost: f64,
    pub status: DecouplingStatus,
}

/// `P(σ(0) ∈ t·C | everything else) ≥ α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalControl {
    pub t: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub body: ConvexBody,
    /// `false` when the set is a heuristic choice (unbounded state spaces).
    pub canonical: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Iid(SiteLaw),
    Ising1d(Ising1d),
    Ising2d(Ising2d),
    Markov(MarkovChain),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    kind: ModelKind,
    dim: usize,
}

const MAX_SCALE_EXPONENT: i32 = 60;

impl FieldModel {
    pub fn iid(law: SiteLaw, dim: usize) -> Result<Self, FieldError> {
        law.validate()?;
        if dim == 0 {
            return Err(FieldError::InvalidParameter("lattice dimension must be at least 1".into()));
        }
        Ok(Self {
            kind: ModelKind::Iid(law),
            dim,
        })
    }

    pub fn ising1d(beta: f64, h: f64) -> Result<Self, FieldError> {
        Ok(Self {
            kind: ModelKind::Ising1d(Ising1d::new(beta, h)?),
            dim: 1,
        })
    }

    pub fn ising2d(beta: f64, burn_in: usize, thinning: usize) -> Result<Self, FieldError> {
        Ok(Self {
            kind: ModelKind::Ising2d(Ising2d::new(beta, burn_in, thinning)?),
            dim: 2,
        })
    }

    /// Torus padding for the 2D Ising sampler (no effect on other models).
    pub fn with_padding(mut self, padding: usize) -> Self {
        if let ModelKind::Ising2d(ref mut m) = self.kind {
            m.padding = padding;
        }
        self
    }

    pub fn markov(transition: Vec<Vec<f64>>, observable: Vec<Vec<f64>>) -> Result<Self, FieldError> {
        Ok(Self {
            kind: ModelKind::Markov(MarkovChain::new(transition, observable)?),
            dim: 1,
        })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Lattice dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// State dimension `D`.
    pub fn state_dim(&self) -> usize {
        match &self.kind {
            ModelKind::Markov(c) => c.state_dim(),
            _ => 1,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ModelKind::Iid(law) => format!("iid {} on Z^{}", law.describe(), self.dim),
            ModelKind::Ising1d(m) => format!("ising1d(beta={}, h={})", m.beta(), m.field()),
            ModelKind::Ising2d(m) => format!(
                "ising2d(beta={}, burn_in={}, thinning={}, padding={})",
                m.beta, m.burn_in, m.thinning, m.padding
            ),
            ModelKind::Markov(c) => format!("markov({} states, D={})", c.states(), c.state_dim()),
        }
    }

    /// Whether samples are exact draws from the model law.
    pub fn is_exact_sampler(&self) -> bool {
        !matches!(self.kind, ModelKind::Ising2d(_))
    }

    /// Expected value of `σ(0)`, when known in closed form.
    pub fn mean(&self) -> Option<Vec<f64>> {
        match &self.kind {
            ModelKind::Iid(law) => Some(vec![law.mean()]),
            ModelKind::Ising1d(m) => Some(m.chain().mean()),
            ModelKind::Ising2d(_) => Some(vec![0.0]),
            ModelKind::Markov(c) => Some(c.mean()),
        }
    }

    fn check_box(&self, lattice: &LatticeBox) -> Result<(), FieldError> {
        if lattice.dim() != self.dim {
            return Err(FieldError::DimensionMismatch {
                what: "box",
                expected: self.dim,
                got: lattice.dim(),
            });
        }
        Ok(())
    }

    fn check_state(&self, what: &'static str, got: usize) -> Result<(), FieldError> {
        if got != self.state_dim() {
            return Err(FieldError::DimensionMismatch {
                what,
                expected: self.state_dim(),
                got,
            });
        }
        Ok(())
    }

    /// One configuration on `lattice`; a pure function of the model and the
    /// stream state.
    pub fn sample<R: Rng + ?Sized>(&self, lattice: &LatticeBox, rng: &mut R) -> Result<Configuration, FieldError> {
        self.check_box(lattice)?;
        let values: Vec<f64> = match &self.kind {
            ModelKind::Iid(law) => (0..lattice.len()).map(|_| law.draw(rng)).collect(),
            ModelKind::Ising1d(m) => chain_values(m.chain(), lattice.len(), rng),
            ModelKind::Markov(c) => chain_values(c, lattice.len(), rng),
            ModelKind::Ising2d(m) => {
                let n = lattice.side();
                let mut chain = GlauberChain::new(n + m.padding, m.beta, rng);
                for _ in 0..m.burn_in {
                    chain.sweep(rng);
                }
                (0..n)
                    .flat_map(|r| (0..n).map(move |c| (r, c)))
                    .map(|(r, c)| chain.spin(r, c) as f64)
                    .collect()
            }
        };
        Configuration::new(lattice.clone(), self.state_dim(), values)
    }

    /// Declared `(g(m), c(m))`.
    pub fn decoupling(&self, m: usize) -> Decoupling {
        match &self.kind {
            ModelKind::Iid(_) => Decoupling {
                gap: 0,
                cost: 0.0,
                status: DecouplingStatus::Exact,
            },
            ModelKind::Ising1d(i) => Decoupling {
                gap: 0,
                cost: i.chain().doeblin_cost(),
                status: DecouplingStatus::Declared,
            },
            ModelKind::Markov(c) => Decoupling {
                gap: 0,
                cost: c.doeblin_cost(),
                status: DecouplingStatus::Declared,
            },
            ModelKind::Ising2d(i) => Decoupling {
                gap: 0,
                // 2β per broken bond across the 2d·m^{d−1} boundary bonds of
                // each of the two boxes.
                cost: 2.0 * 2.0 * i.beta * (2 * self.dim) as f64 * (m as f64).powi(self.dim as i32 - 1),
                status: DecouplingStatus::Declared,
            },
        }
    }

    /// Local-control pair `(t(C), α(C))` for a body containing the origin,
    /// or `None` when unavailable.
    pub fn local_control(&self, body: &ConvexBody) -> Result<Option<LocalControl>, FieldError> {
        self.check_state("local-control body", body.dim())?;
        let scales = (0..=MAX_SCALE_EXPONENT).map(|k| 2f64.powi(k));
        match &self.kind {
            ModelKind::Iid(law) => match law.atoms() {
                Some(atoms) => {
                    for t in scales {
                        let mass: f64 = atoms
                            .iter()
                            .map(|(v, w)| Ok(if body.scaled_contains(t, &[*v])? { *w } else { 0.0 }))
                            .sum::<Result<f64, FieldError>>()?;
                        if mass > 0.0 {
                            return Ok(Some(LocalControl { t, alpha: mass }));
                        }
                    }
                    Ok(None)
                }
                None => {
                    let (lo, hi) = body.interval_bounds()?;
                    for t in scales {
                        let shrink = 1.0 - crate::convex::BOUNDARY_TOL;
                        if law.interval_probability(t * lo * shrink, t * hi * shrink) >= 0.5 {
                            return Ok(Some(LocalControl { t, alpha: 0.5 }));
                        }
                    }
                    Ok(None)
                }
            },
            ModelKind::Ising1d(m) => spin_local_control(body, scales, [-2.0, 0.0, 2.0], |s| m.conditional_plus(s)),
            ModelKind::Ising2d(m) => {
                spin_local_control(body, scales, [-4.0, -2.0, 0.0, 2.0, 4.0], |s| m.conditional_plus(s))
            }
            ModelKind::Markov(c) => {
                let k = c.states();
                for t in scales {
                    let inside: Vec<bool> = c
                        .observable()
                        .iter()
                        .map(|f| body.scaled_contains(t, f))
                        .collect::<Result<_, _>>()?;
                    if !inside.iter().any(|&b| b) {
                        continue;
                    }
                    let mut alpha = f64::INFINITY;
                    for i in 0..k {
                        for l in 0..k {
                            if c.bridge_conditional(i, 0, l).is_none() {
                                continue;
                            }
                            let mass: f64 = (0..k)
                                .filter(|&j| inside[j])
                                .map(|j| c.bridge_conditional(i, j, l).unwrap())
                                .sum();
                            alpha = alpha.min(mass);
                        }
                    }
                    if alpha > 0.0 {
                        return Ok(Some(LocalControl { t, alpha }));
                    }
                }
                Ok(None)
            }
        }
    }

    /// Convex truncation set `K(γ)` carrying conditional mass `≥ 1 − γ`.
    pub fn truncation(&self, gamma: f64) -> Result<Option<Truncation>, FieldError> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(FieldError::InvalidParameter(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        let hull = |ranges: Vec<(f64, f64)>| -> Result<Option<Truncation>, FieldError> {
            let center: Vec<f64> = ranges.iter().map(|(a, b)| 0.5 * (a + b)).collect();
            let half: Vec<f64> = ranges.iter().map(|(a, b)| (0.5 * (b - a) * 1.01).max(0.01)).collect();
            Ok(Some(Truncation {
                body: ConvexBody::translate(center, ConvexBody::cuboid(half)?)?,
                canonical: true,
            }))
        };
        match &self.kind {
            ModelKind::Iid(SiteLaw::Gaussian { mean, var }) => {
                // Two-sided normal quantile by bisection on the tail.
                let (mut lo, mut hi) = (0.0, 40.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if 2.0 * normal_sf(mid) > gamma {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(Some(Truncation {
                    body: ConvexBody::translate(vec![*mean], ConvexBody::ball(1, hi * var.sqrt() * 1.01)?)?,
                    canonical: false,
                }))
            }
            ModelKind::Iid(law) => hull(vec![law.support_range().expect("bounded law")]),
            ModelKind::Ising1d(_) | ModelKind::Ising2d(_) => hull(vec![(-1.0, 1.0)]),
            ModelKind::Markov(c) => {
                let d = c.state_dim();
                let ranges = (0..d)
                    .map(|a| {
                        let vals = c.observable().iter().map(|f| f[a]);
                        let lo = vals.clone().fold(f64::INFINITY, f64::min);
                        let hi = vals.fold(f64::NEG_INFINITY, f64::max);
                        (lo, hi)
                    })
                    .collect();
                hull(ranges)
            }
        }
    }

    /// Limiting pressure `p(λ)`, where a closed form exists.
    pub fn pressure_limit(&self, lambda: &[f64]) -> Result<Option<f64>, FieldError> {
        self.check_state("lambda", lambda.len())?;
        Ok(match &self.kind {
            ModelKind::Iid(law) => Some(law.log_mgf(lambda[0])),
            ModelKind::Ising1d(m) => Some(m.pressure(lambda[0])),
            ModelKind::Markov(c) => Some(c.log_perron_root(lambda)),
            ModelKind::Ising2d(_) => None,
        })
    }

    /// Exact finite-volume pressure `(1/n^d) log E exp(⟨λ, Σ_{Λ(n)} σ⟩)`.
    pub fn pressure_finite(&self, n: usize, lambda: &[f64]) -> Result<Option<f64>, FieldError> {
        self.check_state("lambda", lambda.len())?;
        Ok(match &self.kind {
            ModelKind::Iid(law) => Some(law.log_mgf(lambda[0])),
            ModelKind::Ising1d(m) => Some(m.chain().finite_pressure(n, lambda)),
            ModelKind::Markov(c) => Some(c.finite_pressure(n, lambda)),
            ModelKind::Ising2d(_) => None,
        })
    }

    /// Entropy (negated rate function) `s(x)`, where closed-form.
    pub fn entropy(&self, x: &[f64]) -> Result<Option<f64>, FieldError> {
        self.check_state("x", x.len())?;
        Ok(match &self.kind {
            ModelKind::Iid(law) => law.entropy(x[0]),
            _ => None,
        })
    }

    /// Exact `log μ_n(event) = log P(m_{Λ(n)} ∈ event)`, where computable.
    pub fn log_box_probability(&self, n: usize, event: &ConvexBody) -> Result<Option<f64>, FieldError> {
        self.check_state("event", event.dim())?;
        let sites = LatticeBox::cube(self.dim, n)?.len();
        match &self.kind {
            ModelKind::Iid(law) => law.log_mean_probability(sites, event).transpose(),
            ModelKind::Ising1d(m) => m
                .log_mean_probability(n, |mean| event.contains(&[mean]).map_err(FieldError::from))
                .map(Some),
            _ => Ok(None),
        }
    }

    /// Exact `P(σ(0) ∈ set | neighbour statistic)` for spin models and the
    /// unconditional mass for discrete i.i.d. laws; `None` otherwise.
    pub fn exact_conditional(
        &self,
        body: &ConvexBody,
        t: f64,
        neighbor_sum: f64,
    ) -> Result<Option<f64>, FieldError> {
        let inside = |v: f64| body.scaled_contains(t, &[v]);
        Ok(match &self.kind {
            ModelKind::Iid(law) => match law.atoms() {
                Some(atoms) => {
                    let mut mass = 0.0;
                    for (v, w) in atoms {
                        if inside(v)? {
                            mass += w;
                        }
                    }
                    Some(mass)
                }
                None => None,
            },
            ModelKind::Ising1d(m) => Some(spin_mass(inside(1.0)?, inside(-1.0)?, m.conditional_plus(neighbor_sum))),
            ModelKind::Ising2d(m) => Some(spin_mass(inside(1.0)?, inside(-1.0)?, m.conditional_plus(neighbor_sum))),
            ModelKind::Markov(_) => None,
        })
    }
}

fn spin_mass(plus: bool, minus: bool, p_plus: f64) -> f64 {
    (if plus { p_plus } else { 0.0 }) + (if minus { 1.0 - p_plus } else { 0.0 })
}

fn spin_local_control(
    body: &ConvexBody,
    scales: impl Iterator<Item = f64>,
    neighbor_sums: impl IntoIterator<Item = f64> + Clone,
    conditional_plus: impl Fn(f64) -> f64,
) -> Result<Option<LocalControl>, FieldError> {
    for t in scales {
        let plus = body.scaled_contains(t, &[1.0])?;
        let minus = body.scaled_contains(t, &[-1.0])?;
        if plus || minus {
            let alpha = neighbor_sums
                .clone()
                .into_iter()
                .map(|s| spin_mass(plus, minus, conditional_plus(s)))
                .fold(f64::INFINITY, f64::min);
            return Ok(Some(LocalControl { t, alpha }));
        }
    }
    Ok(None)
}

fn chain_values<R: Rng + ?Sized>(chain: &MarkovChain, len: usize, rng: &mut R) -> Vec<f64> {
    chain
        .sample_path(len, rng)
        .into_iter()
        .flat_map(|s| chain.observable()[s].iter().copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{replica_stream, Purpose};

    #[test]
    fn configuration_validation_and_restriction() {
        let b = LatticeBox::cube(2, 3).unwrap();
        assert!(Configuration::new(b.clone(), 1, vec![0.0; 8]).is_err());
        assert!(Configuration::new(b.clone(), 1, vec![f64::NAN; 9]).is_err());
        let c = Configuration::new(b.clone(), 1, (0..9).map(f64::from).collect()).unwrap();
        let sub = LatticeBox::new(2, 2, &[1, 1]).unwrap();
        let r = c.restrict(&sub).unwrap();
        assert_eq!(r.values(), &[4.0, 5.0, 7.0, 8.0]);
        assert_eq!(c.at(&[2, 0]), Some(&[6.0][..]));
    }

    #[test]
    fn sampling_is_deterministic() {
        let lattice = LatticeBox::cube(1, 50).unwrap();
        for model in [
            FieldModel::iid(SiteLaw::Gaussian { mean: 0.0, var: 1.0 }, 1).unwrap(),
            FieldModel::ising1d(0.5, 0.0).unwrap(),
        ] {
            let a = model.sample(&lattice, &mut replica_stream(9, Purpose::Sample, 2)).unwrap();
            let b = model.sample(&lattice, &mut replica_stream(9, Purpose::Sample, 2)).unwrap();
            assert_eq!(a, b);
        }
        let m2 = FieldModel::ising2d(0.3, 5, 1).unwrap();
        let l2 = LatticeBox::cube(2, 8).unwrap();
        let a = m2.sample(&l2, &mut replica_stream(9, Purpose::Sample, 0)).unwrap();
        let b = m2.sample(&l2, &mut replica_stream(9, Purpose::Sample, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_rejects_wrong_dimension() {
        let m = FieldModel::ising1d(0.5, 0.0).unwrap();
        let l = LatticeBox::cube(2, 4).unwrap();
        assert!(m.sample(&l, &mut replica_stream(0, Purpose::Sample, 0)).is_err());
    }

    #[test]
    fn pressure_oracles() {
        let b = FieldModel::iid(SiteLaw::Bernoulli { p: 0.3 }, 1).unwrap();
        let want = (0.7 + 0.3 * f64::exp(1.0)).ln();
        assert!((b.pressure_limit(&[1.0]).unwrap().unwrap() - want).abs() < 1e-15);
        let g = FieldModel::iid(SiteLaw::Gaussian { mean: 0.0, var: 1.0 }, 1).unwrap();
        assert_eq!(g.pressure_finite(64, &[0.8]).unwrap(), Some(0.32000000000000006));
        let i = FieldModel::ising1d(0.0, 0.0).unwrap();
        assert!((i.pressure_limit(&[0.7]).unwrap().unwrap() - f64::cosh(0.7).ln()).abs() < 1e-14);
        assert!(FieldModel::ising2d(0.2, 1, 1).unwrap().pressure_limit(&[0.1]).unwrap().is_none());
    }

    #[test]
    fn ising_finite_pressure_tends_to_limit() {
        let m = FieldModel::ising1d(0.5, 0.0).unwrap();
        let limit = m.pressure_limit(&[0.3]).unwrap().unwrap();
        let gaps: Vec<f64> = [8, 64, 512]
            .iter()
            .map(|&n| (m.pressure_finite(n, &[0.3]).unwrap().unwrap() - limit).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 1e-3);
    }

    #[test]
    fn local_control_pairs() {
        let half_interval = ConvexBody::ball(1, 0.1).unwrap();
        let b = FieldModel::iid(SiteLaw::Bernoulli { p: 0.5 }, 1).unwrap();
        assert_eq!(
            b.local_control(&half_interval).unwrap(),
            Some(LocalControl { t: 1.0, alpha: 0.5 })
        );

        let plus_side = ConvexBody::interval(-0.5, 1.5).unwrap();
        let m = FieldModel::ising2d(0.4, 1, 1).unwrap();
        let lc = m.local_control(&plus_side).unwrap().unwrap();
        assert_eq!(lc.t, 1.0);
        assert!((lc.alpha - 1.0 / (1.0 + f64::exp(3.2))).abs() < 1e-15);

        // A symmetric body eventually holds both spins: α = 1.
        let lc = m.local_control(&half_interval).unwrap().unwrap();
        assert_eq!((lc.t, lc.alpha), (16.0, 1.0));

        let g = FieldModel::iid(SiteLaw::Gaussian { mean: 0.0, var: 1.0 }, 1).unwrap();
        let lc = g.local_control(&ConvexBody::ball(1, 0.1).unwrap()).unwrap().unwrap();
        // P(|X| < 0.1 t) ≥ 1/2 first at t = 8 (0.8 > 0.674).
        assert_eq!((lc.t, lc.alpha), (8.0, 0.5));

        let i1 = FieldModel::ising1d(0.5, 0.0).unwrap();
        let lc = i1.local_control(&plus_side).unwrap().unwrap();
        assert!((lc.alpha - 1.0 / (1.0 + f64::exp(2.0))).abs() < 1e-15);

        let mk = FieldModel::markov(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![vec![-1.0], vec![1.0]]).unwrap();
        let lc = mk.local_control(&plus_side).unwrap().unwrap();
        // Worst condition: both neighbours −1, P = 0.01 / (0.81 + 0.01).
        assert!((lc.alpha - 0.01 / 0.82).abs() < 1e-15);
    }

    #[test]
    fn decoupling_declarations() {
        let b = FieldModel::iid(SiteLaw::Bernoulli { p: 0.5 }, 2).unwrap();
        assert_eq!(b.decoupling(8).cost, 0.0);
        let i = FieldModel::ising1d(0.5, 0.0).unwrap();
        let d = i.decoupling(8);
        assert_eq!(d.gap, 0);
        assert!((d.cost - ((1.0 + f64::exp(1.0)) / 2.0).ln()).abs() < 1e-12);
        let i2 = FieldModel::ising2d(0.2, 1, 1).unwrap();
        let c = |m: usize| i2.decoupling(m).cost / (m * m) as f64;
        assert!(c(64) < c(8));
    }

    #[test]
    fn truncation_sets() {
        let b = FieldModel::iid(SiteLaw::Bernoulli { p: 0.3 }, 1).unwrap();
        let k = b.truncation(0.1).unwrap().unwrap();
        assert!(k.canonical);
        assert!(k.body.contains(&[0.0]).unwrap() && k.body.contains(&[1.0]).unwrap());
        let g = FieldModel::iid(SiteLaw::Gaussian { mean: 1.0, var: 4.0 }, 1).unwrap();
        let k = g.truncation(0.05).unwrap().unwrap();
        assert!(!k.canonical);
        let (lo, hi) = k.body.interval_bounds().unwrap();
        assert!(normal_interval(lo, hi, 1.0, 2.0) >= 0.95);
        assert!(b.truncation(1.5).is_err());
    }

    #[test]
    fn box_probability_oracles() {
        let b = FieldModel::iid(SiteLaw::Bernoulli { p: 0.5 }, 1).unwrap();
        let everything = ConvexBody::ball(1, f64::INFINITY).unwrap();
        assert!(b.log_box_probability(25, &everything).unwrap().unwrap().abs() < 1e-15);
        let i = FieldModel::ising1d(0.0, 0.0).unwrap();
        let s = FieldModel::iid(SiteLaw::Spin { p: 0.5 }, 1).unwrap();
        let event = ConvexBody::ball(1, 0.3).unwrap().centered_at(&[0.2]).unwrap();
        let a = i.log_box_probability(30, &event).unwrap().unwrap();
        let c = s.log_box_probability(30, &event).unwrap().unwrap();
        assert!((a - c).abs() < 1e-12);
    }
}
