use std::io::{Read, Write};

use super::ConvexError;
use crate::numeric::linspace;

/// Uniform axis `min = x₀ < x₁ < … < x_{points−1} = max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    min: f64,
    max: f64,
    nodes: Vec<f64>,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self, ConvexError> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(ConvexError::InvalidGrid(format!("axis needs finite min < max, got [{min}, {max}]")));
        }
        if points < 2 {
            return Err(ConvexError::InvalidGrid(format!("axis needs at least 2 points, got {points}")));
        }
        Ok(Self {
            min,
            max,
            nodes: linspace(min, max, points),
        })
    }

    pub fn min(&self) -> f64 {
        self.min
    }
    pub fn max(&self) -> f64 {
        self.max
    }
    pub fn points(&self) -> usize {
        self.nodes.len()
    }
    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.nodes.len() - 1) as f64
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// Rectangular product grid; nodes are enumerated row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self, ConvexError> {
        if axes.is_empty() {
            return Err(ConvexError::ZeroDimension);
        }
        Ok(Self { axes })
    }

    pub fn uniform_1d(min: f64, max: f64, points: usize) -> Result<Self, ConvexError> {
        Self::new(vec![Axis::new(min, max, points)?])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::points).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, mut idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for (axis, a) in self.axes.iter().enumerate().rev() {
            x[axis] = a.nodes[idx % a.points()];
            idx /= a.points();
        }
        x
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Row-major stride of each axis.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for a in (0..self.dim().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.axes[a + 1].points();
        }
        strides
    }
}

/// Real function tabulated on a grid, values in `[−∞, +∞]` (no NaN).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, ConvexError> {
        if values.len() != grid.len() {
            return Err(ConvexError::InvalidGrid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(ConvexError::InvalidGrid("NaN value in grid function".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self, ConvexError> {
        let values = grid.nodes().map(|x| f(&x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// `max |f − g|` over nodes, ignoring nodes where both are the same infinity.
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max)
    }

    /// CSV with header `x0,…,x{D−1},value`; infinities written as `inf`/`-inf`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ConvexError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.dim()).map(|a| format!("x{a}")).collect();
        header.push("value".into());
        w.write_record(&header)?;
        for (x, v) in self.grid.nodes().zip(&self.values) {
            let mut row: Vec<String> = x.iter().map(|c| c.to_string()).collect();
            row.push(v.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| ConvexError::Csv(e.to_string()))?;
        Ok(())
    }

    /// Read a grid function written by [`write_csv`](Self::write_csv) (or any
    /// CSV whose last column is the value and whose rows enumerate a uniform
    /// rectangular grid in row-major order).
    pub fn read_csv<R: Read>(input: R) -> Result<Self, ConvexError> {
        let mut r = csv::Reader::from_reader(input);
        let width = r.headers()?.len();
        if width < 2 {
            return Err(ConvexError::InvalidGrid("CSV needs coordinate and value columns".into()));
        }
        let dim = width - 1;
        let mut coords: Vec<Vec<f64>> = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parsed: Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
            let parsed = parsed.map_err(|e| ConvexError::InvalidGrid(format!("bad number: {e}")))?;
            coords.push(parsed[..dim].to_vec());
            values.push(parsed[dim]);
        }
        let mut axes = Vec::with_capacity(dim);
        for a in 0..dim {
            let mut u: Vec<f64> = coords.iter().map(|c| c[a]).collect();
            u.sort_by(f64::total_cmp);
            u.dedup();
            let (lo, hi) = (u[0], *u.last().unwrap());
            axes.push(Axis::new(lo, hi, u.len())?);
        }
        let grid = Grid::new(axes)?;
        for (i, c) in coords.iter().enumerate() {
            let node = grid.node(i);
            let scale = grid.axes().iter().map(|a| a.step()).fold(f64::INFINITY, f64::min);
            if c.iter().zip(&node).any(|(p, q)| (p - q).abs() > 1e-6 * scale) {
                return Err(ConvexError::InvalidGrid(format!(
                    "row {i} is not the row-major node {node:?} of a uniform grid"
                )));
            }
        }
        Self::new(grid, values)
    }
}
