//! Monte Carlo estimators for finite-volume entropy and pressure, and
//! empirical checks of the decoupling, local-control, subadditive and
//! duality inequalities.
//!
//! Every replica `i` draws from its own stream `(seed, purpose, i)`, replicas
//! are evaluated in parallel, and all reductions run sequentially in replica
//! order. Results are therefore identical for any worker count.

mod checks;
mod duality;
mod mc;

pub use checks::{
    decoupling_check, local_control_check, subadditivity_check, DecouplingReport, LocalControlBin, LocalControlPlan,
    LocalControlReport, SubadditivityInput, SubadditivityReport,
};
pub use duality::{duality_check, ConjugateRow, DualityInput, EntropyRow, LdpReport, PressureRow, YoungFenchelRow};
pub use mc::{
    box_probability, entropy_curve, entropy_estimate, entropy_from_hits, pressure_curve, pressure_estimate, pressure_from_means,
    wilson_std_error,
};

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::convex::ConvexError;
use crate::fields::{Configuration, FieldError, FieldModel};
use crate::lattice::{LatticeBox, LatticeError};
use crate::numeric::CompensatedSum;
use crate::rng::{replica_stream, Purpose};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Where a number comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Exact oracle when the model has one, Monte Carlo otherwise.
    #[default]
    Auto,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    ZeroHits,
    LowEffectiveSampleSize,
    ApproximateSampler,
    EmptyBin,
}

impl Flag {
    pub fn name(self) -> &'static str {
        match self {
            Flag::ZeroHits => "zero_hits",
            Flag::LowEffectiveSampleSize => "low_effective_sample_size",
            Flag::ApproximateSampler => "approximate_sampler",
            Flag::EmptyBin => "empty_bin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalEstimate {
    #[serde(serialize_with = "float")]
    pub value: f64,
    #[serde(serialize_with = "opt_float")]
    pub std_error: Option<f64>,
    pub samples: u64,
    pub hit_count: Option<u64>,
    pub exact: bool,
    pub flags: Vec<Flag>,
}

impl EmpiricalEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: Some(0.0),
            samples: 0,
            hit_count: None,
            exact: true,
            flags: Vec::new(),
        }
    }

    /// Standard error, with `n/a` read as zero.
    pub fn sigma(&self) -> f64 {
        self.std_error.unwrap_or(0.0)
    }

    pub fn has_flag(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    pub(crate) fn flag(&mut self, flag: Flag) {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
            self.flags.sort();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Preconditions unmet or no declared constants: shown, not judged.
    Informational,
    Skipped,
}

impl CheckStatus {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Informational => "info",
            Self::Skipped => "skipped",
        }
    }
}

/// `lhs ≥ rhs − tolerance`, with both sides and the tolerance on record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub label: String,
    #[serde(serialize_with = "float")]
    pub lhs: f64,
    #[serde(serialize_with = "float")]
    pub rhs: f64,
    #[serde(serialize_with = "float")]
    pub sigma: f64,
    #[serde(serialize_with = "float")]
    pub tolerance: f64,
    pub status: CheckStatus,
}

impl Comparison {
    pub fn at_least(label: impl Into<String>, lhs: f64, rhs: f64, sigma: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            lhs,
            rhs,
            sigma,
            tolerance,
            status: CheckStatus::from_bool(lhs >= rhs - tolerance),
        }
    }

    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn demote(mut self, status: CheckStatus) -> Self {
        self.status = status;
        self
    }
}

/// Mean of `config` over the sites of `region`, with compensated summation.
pub fn empirical_mean(config: &Configuration, region: &LatticeBox) -> Result<Vec<f64>, EstimatorError> {
    let idx = region
        .indices_in(config.lattice())
        .ok_or_else(|| EstimatorError::InvalidInput("box is not contained in the configuration".into()))?;
    Ok(mean_over(config, idx.into_iter()))
}

pub(crate) fn mean_over(config: &Configuration, idx: impl Iterator<Item = usize> + Clone) -> Vec<f64> {
    let count = idx.clone().count() as f64;
    (0..config.state_dim())
        .map(|a| {
            let mut s = CompensatedSum::default();
            for i in idx.clone() {
                s.add(config.value(i)[a]);
            }
            s.value() / count
        })
        .collect()
}

/// Run `f` on replicas `0..replicas`, each with its own stream, in parallel;
/// the output keeps replica order.
pub(crate) fn replicate<T, F>(replicas: usize, seed: u64, purpose: Purpose, f: F) -> Result<Vec<T>, EstimatorError>
where
    T: Send,
    F: Fn(&mut crate::rng::Stream) -> Result<T, EstimatorError> + Sync,
{
    (0..replicas)
        .into_par_iter()
        .map(|i| f(&mut replica_stream(seed, purpose, i as u64)))
        .collect()
}

/// Empirical means `m_{Λ(n)}` of `replicas` independent configurations.
pub fn sample_means(
    model: &FieldModel,
    n: usize,
    replicas: usize,
    seed: u64,
    purpose: Purpose,
) -> Result<Vec<Vec<f64>>, EstimatorError> {
    let lattice = LatticeBox::cube(model.dim(), n)?;
    replicate(replicas, seed, purpose, |rng| {
        let config = model.sample(&lattice, rng)?;
        Ok(mean_over(&config, 0..config.lattice().len()))
    })
}

pub(crate) fn sites(model: &FieldModel, n: usize) -> Result<f64, EstimatorError> {
    Ok(LatticeBox::cube(model.dim(), n)?.len() as f64)
}

pub(crate) fn float<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn opt_float<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => float(x, s),
        None => s.serialize_str("n/a"),
    }
}

pub(crate) fn opt_float_or_null<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => float(x, s),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::SiteLaw;
    use crate::lattice::BoxPartition;

    #[test]
    fn empirical_mean_basics() {
        let b = LatticeBox::cube(1, 3).unwrap();
        let c = Configuration::new(b.clone(), 1, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(empirical_mean(&c, &b).unwrap(), vec![2.0]);
        let k = Configuration::new(LatticeBox::cube(2, 4).unwrap(), 1, vec![0.7; 16]).unwrap();
        assert!((empirical_mean(&k, k.lattice()).unwrap()[0] - 0.7).abs() < 1e-15);
        let outside = LatticeBox::new(1, 2, &[2]).unwrap();
        assert!(empirical_mean(&c, &outside).is_err());
    }

    #[test]
    fn mean_decomposes_over_partition() {
        let model = FieldModel::iid(SiteLaw::Gaussian { mean: 0.3, var: 2.0 }, 2).unwrap();
        let outer = LatticeBox::cube(2, 23).unwrap();
        let config = model
            .sample(&outer, &mut replica_stream(5, Purpose::Demo, 0))
            .unwrap();
        let part = BoxPartition::of_box(&outer, 5, 2).unwrap();
        let n_sites = outer.len() as f64;
        let mut total = 0.0;
        for sub in part.sub_boxes() {
            total += empirical_mean(&config, sub).unwrap()[0] * sub.len() as f64 / n_sites;
        }
        for &i in part.marginal_indices() {
            total += config.value(i)[0] / n_sites;
        }
        let direct = empirical_mean(&config, &outer).unwrap()[0];
        assert!((total - direct).abs() < 1e-12);
    }

    #[test]
    fn sampled_means_do_not_depend_on_thread_count() {
        let model = FieldModel::ising1d(0.5, 0.1).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_means(&model, 20, 500, 77, Purpose::Sample).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn infinities_serialize_as_strings() {
        let e = EmpiricalEstimate {
            value: f64::NEG_INFINITY,
            std_error: None,
            samples: 10,
            hit_count: Some(0),
            exact: false,
            flags: vec![Flag::ZeroHits],
        };
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"value\":\"-inf\""));
        assert!(json.contains("\"std_error\":\"n/a\""));
        assert!(json.contains("zero_hits"));
    }
}
