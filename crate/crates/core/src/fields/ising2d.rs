//! Heat-bath Glauber dynamics for the zero-field 2D Ising model on a torus.
//!
//! This is the only approximate sampler in the crate: a returned configuration
//! is the chain state after `burn_in` sweeps from an i.i.d. fair start, so it
//! carries MCMC bias that shrinks with burn-in (and grows near the critical
//! coupling β_c ≈ 0.4407).

use rand::Rng;

use super::FieldError;

pub const DEFAULT_BURN_IN: usize = 200;
pub const DEFAULT_THINNING: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ising2d {
    pub beta: f64,
    pub burn_in: usize,
    pub thinning: usize,
    /// Extra torus width beyond the sampled box.
    pub padding: usize,
}

impl Ising2d {
    pub fn new(beta: f64, burn_in: usize, thinning: usize) -> Result<Self, FieldError> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(FieldError::InvalidParameter(format!("ising2d needs beta >= 0, got {beta}")));
        }
        if burn_in == 0 || thinning == 0 {
            return Err(FieldError::InvalidParameter("burn_in and thinning must be at least 1".into()));
        }
        Ok(Self {
            beta,
            burn_in,
            thinning,
            padding: 0,
        })
    }

    /// Heat-bath probability `P(σ(0) = +1 | neighbour sum s) = 1/(1 + e^{−2βs})`.
    pub fn conditional_plus(&self, neighbor_sum: f64) -> f64 {
        heat_bath(self.beta, neighbor_sum)
    }

    /// Worst-case single-site probability of `+1`, `1/(1 + e^{8β})`.
    pub fn min_conditional(&self) -> f64 {
        1.0 / (1.0 + (8.0 * self.beta).exp())
    }
}

pub fn heat_bath(beta: f64, neighbor_sum: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * beta * neighbor_sum).exp())
}

/// Spin configuration on an `L × L` torus evolving under heat-bath sweeps.
#[derive(Debug, Clone)]
pub struct GlauberChain {
    side: usize,
    spins: Vec<i8>,
    /// `P(+1 | s)` indexed by `(s + 4) / 2`.
    table: [f64; 5],
}

impl GlauberChain {
    /// Fresh chain with i.i.d. fair initial spins.
    pub fn new<R: Rng + ?Sized>(side: usize, beta: f64, rng: &mut R) -> Self {
        let spins = (0..side * side)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        let mut table = [0.0; 5];
        for (k, p) in table.iter_mut().enumerate() {
            *p = heat_bath(beta, 2.0 * k as f64 - 4.0);
        }
        Self { side, spins, table }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn spin(&self, row: usize, col: usize) -> i8 {
        self.spins[row * self.side + col]
    }

    pub fn neighbor_sum(&self, row: usize, col: usize) -> i32 {
        let l = self.side;
        let up = (row + l - 1) % l;
        let down = (row + 1) % l;
        let left = (col + l - 1) % l;
        let right = (col + 1) % l;
        [self.spin(up, col), self.spin(down, col), self.spin(row, left), self.spin(row, right)]
            .iter()
            .map(|&s| s as i32)
            .sum()
    }

    /// One sweep: every site updated once, in row-major order.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for row in 0..self.side {
            for col in 0..self.side {
                let s = self.neighbor_sum(row, col);
                let p = self.table[((s + 4) / 2) as usize];
                self.spins[row * self.side + col] = if rng.random::<f64>() < p { 1 } else { -1 };
            }
        }
    }

    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&s| s as f64).sum::<f64>() / self.spins.len() as f64
    }
}
