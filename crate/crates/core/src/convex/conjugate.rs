//! Discrete Legendre–Fenchel conjugation on grids.
//!
//! The supremum defining `f*(λ) = sup_x (⟨λ, x⟩ − f(x))` is restricted to the
//! grid nodes of `f`. For a `K`-Lipschitz convex `f` on a grid of step `h`, the
//! restriction under-estimates the continuum conjugate by at most about
//! `(|λ| + K)·h` inside the grid's box; outside the box the continuum
//! conjugate is not represented at all.

use rayon::prelude::*;

use super::grid::{Axis, Grid, GridFunction};
use super::ConvexError;
use crate::numeric::dot;

/// Discrete conjugate of `f` evaluated on `dual`.
///
/// Nodes with `f = +∞` drop out of the supremum. Any `f = −∞` makes the
/// conjugate identically `+∞`. One-dimensional inputs use a linear-time
/// sweep over the lower convex hull; higher dimensions use the direct
/// `O(N·M)` maximisation.
pub fn legendre_transform(f: &GridFunction, dual: &Grid) -> Result<GridFunction, ConvexError> {
    prepare(f, dual)?;
    if f.values().contains(&f64::NEG_INFINITY) {
        return GridFunction::new(dual.clone(), vec![f64::INFINITY; dual.len()]);
    }
    if f.dim() == 1 {
        let lambdas = dual.axes()[0].nodes();
        let values = transform_1d(f.grid().axes()[0].nodes(), f.values(), lambdas);
        GridFunction::new(dual.clone(), values)
    } else {
        legendre_transform_direct(f, dual)
    }
}

/// Direct `O(N·M)` evaluation of the discrete conjugate.
pub fn legendre_transform_direct(f: &GridFunction, dual: &Grid) -> Result<GridFunction, ConvexError> {
    prepare(f, dual)?;
    if f.values().contains(&f64::NEG_INFINITY) {
        return GridFunction::new(dual.clone(), vec![f64::INFINITY; dual.len()]);
    }
    let primal: Vec<(Vec<f64>, f64)> = f
        .grid()
        .nodes()
        .zip(f.values())
        .filter(|(_, v)| v.is_finite())
        .map(|(x, &v)| (x, v))
        .collect();
    let values: Vec<f64> = (0..dual.len())
        .into_par_iter()
        .map(|j| {
            let lambda = dual.node(j);
            primal
                .iter()
                .map(|(x, v)| dot(&lambda, x) - v)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    GridFunction::new(dual.clone(), values)
}

fn prepare(f: &GridFunction, dual: &Grid) -> Result<(), ConvexError> {
    if dual.dim() != f.dim() {
        return Err(ConvexError::DimensionMismatch {
            expected: f.dim(),
            got: dual.dim(),
        });
    }
    if f.values().iter().all(|&v| v == f64::INFINITY) {
        return Err(ConvexError::AllInfinite);
    }
    Ok(())
}

/// Lower convex hull of finite points (x ascending), collinear points kept.
fn lower_hull(xs: &[f64], fs: &[f64]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for (&x, &v) in xs.iter().zip(fs) {
        if !v.is_finite() {
            continue;
        }
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (v - o.1) - (a.1 - o.1) * (x - o.0);
            if cross < 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, v));
    }
    hull
}

fn transform_1d(xs: &[f64], fs: &[f64], lambdas: &[f64]) -> Vec<f64> {
    let hull = lower_hull(xs, fs);
    // Maximisers move right as λ grows, so one pointer sweeps the hull once.
    let mut j = 0;
    lambdas
        .iter()
        .map(|&l| {
            let val = |k: usize| l * hull[k].0 - hull[k].1;
            while j + 1 < hull.len() && val(j + 1) >= val(j) {
                j += 1;
            }
            // Lambdas are ascending, but rounding on near-flat stretches can
            // leave the pointer one node late; look back one step.
            let mut best = val(j);
            if j > 0 {
                best = best.max(val(j - 1));
            }
            best
        })
        .collect()
}

/// Dual grid covering the discrete slope range of `f` on every axis, padded
/// by 10% of the slope span on each side. The node count is chosen so that the
/// extreme slopes land on grid nodes.
pub fn auto_dual_grid(f: &GridFunction) -> Result<Grid, ConvexError> {
    let grid = f.grid();
    let strides = grid.strides();
    let mut axes = Vec::with_capacity(grid.dim());
    for (a, axis) in grid.axes().iter().enumerate() {
        let h = axis.step();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for idx in 0..grid.len() {
            let pos = (idx / strides[a]) % axis.points();
            if pos + 1 == axis.points() {
                continue;
            }
            let (u, v) = (f.values()[idx], f.values()[idx + strides[a]]);
            if u.is_finite() && v.is_finite() {
                let s = (v - u) / h;
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        if !lo.is_finite() {
            lo = -1.0;
            hi = 1.0;
        }
        let mut span = hi - lo;
        if span <= 0.0 {
            span = lo.abs().max(1.0);
        }
        let k = axis.points().div_ceil(10).max(1);
        axes.push(Axis::new(lo - 0.1 * span, hi + 0.1 * span, 12 * k + 1)?);
    }
    Grid::new(axes)
}

/// `f*` on an automatic dual grid and `f**` back on the grid of `f`.
#[derive(Debug, Clone)]
pub struct Biconjugate {
    pub conjugate: GridFunction,
    pub biconjugate: GridFunction,
}

impl Biconjugate {
    /// `sup |f** − f|` over nodes where `f` is finite.
    pub fn gap(&self, f: &GridFunction) -> f64 {
        f.values()
            .iter()
            .zip(self.biconjugate.values())
            .filter(|(v, _)| v.is_finite())
            .map(|(v, w)| (v - w).abs())
            .fold(0.0, f64::max)
    }

    /// Bound on `sup |f** − f|` for convex `f`: half the dual step times the
    /// primal width, summed over axes.
    pub fn tolerance(&self) -> f64 {
        self.conjugate
            .grid()
            .axes()
            .iter()
            .zip(self.biconjugate.grid().axes())
            .map(|(dual, primal)| 0.5 * dual.step() * (primal.max() - primal.min()))
            .sum()
    }
}

pub fn biconjugate(f: &GridFunction) -> Result<Biconjugate, ConvexError> {
    let dual = auto_dual_grid(f)?;
    let conjugate = legendre_transform(f, &dual)?;
    let biconjugate = legendre_transform(&conjugate, f.grid())?;
    Ok(Biconjugate { conjugate, biconjugate })
}
