//! Stationary finite-state Markov chains on Z, including the exact
//! infinite-volume 1D Ising marginal.

use rand::Rng;

use super::FieldError;
use crate::numeric::{dot, log_sum_exp};

const POWER_ITERATIONS: usize = 1_000_000;

/// A primitive row-stochastic chain with a vector observable per state.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    transition: Vec<Vec<f64>>,
    observable: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl MarkovChain {
    pub fn new(transition: Vec<Vec<f64>>, observable: Vec<Vec<f64>>) -> Result<Self, FieldError> {
        let k = transition.len();
        if k == 0 || transition.iter().any(|row| row.len() != k) {
            return Err(FieldError::InvalidParameter("transition matrix must be square and nonempty".into()));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(FieldError::InvalidParameter(format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-10 {
                return Err(FieldError::InvalidParameter(format!("row {i} sums to {s}, not 1")));
            }
        }
        if observable.len() != k {
            return Err(FieldError::InvalidParameter(format!(
                "observable has {} entries for {k} states",
                observable.len()
            )));
        }
        let dim = observable[0].len();
        if dim == 0 || observable.iter().any(|f| f.len() != dim || f.iter().any(|c| !c.is_finite())) {
            return Err(FieldError::InvalidParameter("observable vectors must share a nonzero dimension".into()));
        }
        if !is_primitive(&transition) {
            return Err(FieldError::InvalidParameter(
                "transition matrix must be irreducible and aperiodic".into(),
            ));
        }
        let stationary = left_perron(&transition);
        Ok(Self {
            transition,
            observable,
            stationary,
        })
    }

    pub fn states(&self) -> usize {
        self.transition.len()
    }

    pub fn state_dim(&self) -> usize {
        self.observable[0].len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn observable(&self) -> &[Vec<f64>] {
        &self.observable
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// `E_π f`.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.state_dim()];
        for (pi, f) in self.stationary.iter().zip(&self.observable) {
            for (acc, c) in m.iter_mut().zip(f) {
                *acc += pi * c;
            }
        }
        m
    }

    /// Stationary path of `len` states.
    pub fn sample_path<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<usize> {
        let mut path = Vec::with_capacity(len);
        if len == 0 {
            return path;
        }
        let mut s = pick(&self.stationary, rng.random());
        path.push(s);
        for _ in 1..len {
            s = pick(&self.transition[s], rng.random());
            path.push(s);
        }
        path
    }

    fn tilt(&self, lambda: &[f64]) -> Vec<f64> {
        self.observable.iter().map(|f| dot(lambda, f)).collect()
    }

    /// `log ρ(T_λ)` with `[T_λ]_{ij} = T_ij e^{⟨λ, f(j)⟩}`: the limiting pressure.
    pub fn log_perron_root(&self, lambda: &[f64]) -> f64 {
        let tilt = self.tilt(lambda);
        let shift = tilt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let k = self.states();
        let weights: Vec<f64> = tilt.iter().map(|t| (t - shift).exp()).collect();
        let mut v = vec![1.0 / k as f64; k];
        let mut root = 0.0;
        for it in 0..POWER_ITERATIONS {
            // v ← T_λ v
            let next: Vec<f64> = (0..k)
                .map(|i| (0..k).map(|j| self.transition[i][j] * weights[j] * v[j]).sum())
                .collect();
            let norm: f64 = next.iter().sum();
            let change: f64 = next.iter().zip(&v).map(|(a, b)| (a / norm - b).abs()).sum();
            v = next.into_iter().map(|x| x / norm).collect();
            let converged = (norm - root).abs() <= 1e-15 * norm && change < 1e-14;
            root = norm;
            if converged && it > 2 {
                break;
            }
        }
        root.ln() + shift
    }

    /// Exact `(1/n) log E exp(⟨λ, Σ_{z<n} f(X_z)⟩)` for the stationary chain.
    pub fn finite_pressure(&self, n: usize, lambda: &[f64]) -> f64 {
        let tilt = self.tilt(lambda);
        let k = self.states();
        let mut log_scale = 0.0;
        let mut v: Vec<f64> = (0..k).map(|j| self.stationary[j].ln() + tilt[j]).collect();
        let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        log_scale += m;
        let mut v: Vec<f64> = v.iter_mut().map(|x| (*x - m).exp()).collect();
        for _ in 1..n {
            let mut next = vec![0.0; k];
            for (i, vi) in v.iter().enumerate() {
                if *vi == 0.0 {
                    continue;
                }
                for (nj, t) in next.iter_mut().zip(&self.transition[i]) {
                    *nj += vi * t;
                }
            }
            let logs: Vec<f64> = next.iter().zip(&tilt).map(|(x, t)| x.ln() + t).collect();
            let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            log_scale += m;
            v = logs.iter().map(|x| (x - m).exp()).collect();
        }
        (log_scale + v.iter().sum::<f64>().ln()) / n as f64
    }

    /// `P(X₀ = j | X₋₁ = i, X₁ = k)`, `None` when the condition has zero mass.
    pub fn bridge_conditional(&self, i: usize, j: usize, k: usize) -> Option<f64> {
        let t = &self.transition;
        let norm: f64 = (0..self.states()).map(|l| t[i][l] * t[l][k]).sum();
        (norm > 0.0).then(|| t[i][j] * t[j][k] / norm)
    }

    /// Doeblin-type constant `−log min_{T_ij > 0} T_ij / π_j`.
    pub fn doeblin_cost(&self) -> f64 {
        let mut worst = f64::INFINITY;
        for row in &self.transition {
            for (j, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    worst = worst.min(p / self.stationary[j]);
                }
            }
        }
        -worst.ln()
    }
}

fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Primitive iff some power `T^k`, `k ≤ (s−1)² + 1`, is entrywise positive.
fn is_primitive(t: &[Vec<f64>]) -> bool {
    let s = t.len();
    let adj: Vec<Vec<bool>> = t.iter().map(|r| r.iter().map(|&p| p > 0.0).collect()).collect();
    let mut power = adj.clone();
    for _ in 0..((s - 1) * (s - 1) + 1) {
        if power.iter().flatten().all(|&b| b) {
            return true;
        }
        power = (0..s)
            .map(|i| (0..s).map(|j| (0..s).any(|l| power[i][l] && adj[l][j])).collect())
            .collect();
    }
    power.iter().flatten().all(|&b| b)
}

fn left_perron(t: &[Vec<f64>]) -> Vec<f64> {
    let k = t.len();
    let mut pi = vec![1.0 / k as f64; k];
    for _ in 0..POWER_ITERATIONS {
        let next: Vec<f64> = (0..k).map(|j| (0..k).map(|i| pi[i] * t[i][j]).sum()).collect();
        let s: f64 = next.iter().sum();
        let next: Vec<f64> = next.iter().map(|x| x / s).collect();
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if change < 1e-16 {
            break;
        }
    }
    pi
}

/// Largest eigenvalue of the 1D Ising transfer matrix,
/// `e^β cosh h + sqrt(e^{2β} sinh² h + e^{−2β})`.
pub fn ising_lambda_max(beta: f64, h: f64) -> f64 {
    (beta).exp() * h.cosh() + ((2.0 * beta).exp() * h.sinh().powi(2) + (-2.0 * beta).exp()).sqrt()
}

/// Infinite-volume 1D Ising field, realised as the stationary Markov chain
/// induced by the transfer matrix. States are indexed 0 ↦ −1, 1 ↦ +1.
#[derive(Debug, Clone, PartialEq)]
pub struct Ising1d {
    beta: f64,
    h: f64,
    chain: MarkovChain,
}

impl Ising1d {
    pub fn new(beta: f64, h: f64) -> Result<Self, FieldError> {
        if !(beta >= 0.0) || !beta.is_finite() || !h.is_finite() {
            return Err(FieldError::InvalidParameter(format!("ising1d needs beta >= 0, finite h (got {beta}, {h})")));
        }
        let spins = [-1.0, 1.0];
        let transfer = |a: f64, b: f64| (beta * a * b + 0.5 * h * (a + b)).exp();
        let lmax = ising_lambda_max(beta, h);
        // Perron eigenvector of the symmetric transfer matrix: (T − λ) v = 0.
        let (t00, t01) = (transfer(-1.0, -1.0), transfer(-1.0, 1.0));
        let v = {
            let (a, b) = (t01, lmax - t00);
            let n = (a * a + b * b).sqrt();
            [a / n, b / n]
        };
        let transition: Vec<Vec<f64>> = (0..2)
            .map(|i| {
                let row: Vec<f64> = (0..2).map(|j| transfer(spins[i], spins[j]) * v[j] / (lmax * v[i])).collect();
                let s: f64 = row.iter().sum();
                row.iter().map(|p| p / s).collect()
            })
            .collect();
        let chain = MarkovChain::new(transition, vec![vec![-1.0], vec![1.0]])?;
        Ok(Self { beta, h, chain })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn field(&self) -> f64 {
        self.h
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    /// `log λ_max(β, h + λ) − log λ_max(β, h)`.
    pub fn pressure(&self, lambda: f64) -> f64 {
        ising_lambda_max(self.beta, self.h + lambda).ln() - ising_lambda_max(self.beta, self.h).ln()
    }

    /// `P(σ(0) = +1 | σ(−1) + σ(1) = s)`.
    pub fn conditional_plus(&self, neighbor_sum: f64) -> f64 {
        1.0 / (1.0 + (-2.0 * (self.beta * neighbor_sum + self.h)).exp())
    }

    /// `⟨σ(0)σ(1)⟩` for the infinite-volume measure.
    pub fn nearest_correlation(&self) -> f64 {
        let t = self.chain.transition();
        let pi = self.chain.stationary();
        pi[0] * (t[0][0] - t[0][1]) + pi[1] * (t[1][1] - t[1][0])
    }

    /// Exact `log P(m_{Λ(n)} ∈ event)` by dynamic programming over the
    /// number of `+1` spins.
    pub fn log_mean_probability(
        &self,
        n: usize,
        contains: impl Fn(f64) -> Result<bool, FieldError>,
    ) -> Result<f64, FieldError> {
        let t = self.chain.transition();
        let pi = self.chain.stationary();
        // weights[k][s]: P(k plus spins so far, current spin s), scaled by e^{log_scale}.
        let mut weights = vec![[0.0f64; 2]; n + 1];
        weights[0][0] = pi[0];
        weights[1][1] = pi[1];
        let mut log_scale = 0.0;
        for len in 1..n {
            let mut next = vec![[0.0f64; 2]; n + 1];
            for k in 0..=len {
                for s in 0..2 {
                    let w = weights[k][s];
                    if w == 0.0 {
                        continue;
                    }
                    next[k][0] += w * t[s][0];
                    next[k + 1][1] += w * t[s][1];
                }
            }
            let m = next.iter().flatten().copied().fold(0.0, f64::max);
            log_scale += m.ln();
            weights = next.iter().map(|r| [r[0] / m, r[1] / m]).collect();
        }
        let mut terms = Vec::new();
        for (k, w) in weights.iter().enumerate() {
            let mass = w[0] + w[1];
            if mass > 0.0 && contains((2.0 * k as f64 - n as f64) / n as f64)? {
                terms.push(mass.ln() + log_scale);
            }
        }
        Ok(log_sum_exp(&terms))
    }
}
