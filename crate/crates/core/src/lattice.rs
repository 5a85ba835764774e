//! Integer geometry of cubic boxes in Z^d and the gapped partition of a box
//! into sub-boxes plus marginal sites.
//!
//! A box of side `n` with origin `o` is the site set `o + [0, n)^d`. Sites are
//! enumerated in lexicographic order (first coordinate slowest), so a site's
//! index in that enumeration is its row-major offset. Configurations store
//! their values in the same order.

use num_rational::Ratio;
use thiserror::Error;

/// Exact rational used for marginal fractions.
pub type Rational = Ratio<i128>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("dimension must be at least 1 (got {0})")]
    ZeroDimension(usize),
    #[error("box side must be at least 1 (got {0})")]
    ZeroSide(usize),
    #[error("origin has {got} coordinates, expected {expected}")]
    OriginLength { expected: usize, got: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("inner side m={m} must satisfy 1 <= m <= n={n}")]
    InnerSide { m: usize, n: usize },
    #[error("box with {0} sites is too large to enumerate")]
    TooLarge(u128),
}

/// A cubic region `origin + [0, side)^d` of Z^d.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeBox {
    origin: Vec<i64>,
    side: usize,
}

impl LatticeBox {
    pub fn new(dim: usize, side: usize, origin: &[i64]) -> Result<Self, LatticeError> {
        if dim == 0 {
            return Err(LatticeError::ZeroDimension(dim));
        }
        if side == 0 {
            return Err(LatticeError::ZeroSide(side));
        }
        if origin.len() != dim {
            return Err(LatticeError::OriginLength {
                expected: dim,
                got: origin.len(),
            });
        }
        let volume = (side as u128).checked_pow(dim as u32);
        match volume {
            Some(v) if v <= usize::MAX as u128 / 4 => {}
            Some(v) => return Err(LatticeError::TooLarge(v)),
            None => return Err(LatticeError::TooLarge(u128::MAX)),
        }
        Ok(Self {
            origin: origin.to_vec(),
            side,
        })
    }

    /// `Λ(n)`: the box of side `n` anchored at the origin.
    pub fn cube(dim: usize, side: usize) -> Result<Self, LatticeError> {
        Self::new(dim, side, &vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    /// Number of sites, `n^d`.
    pub fn len(&self) -> usize {
        self.side.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lexicographically largest site.
    pub fn max_corner(&self) -> Vec<i64> {
        self.origin
            .iter()
            .map(|&o| o + self.side as i64 - 1)
            .collect()
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.dim()
            && site
                .iter()
                .zip(&self.origin)
                .all(|(&s, &o)| s >= o && s < o + self.side as i64)
    }

    /// Row-major index of `site` within the box, if it belongs to it.
    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let mut idx = 0usize;
        for (&s, &o) in site.iter().zip(&self.origin) {
            idx = idx * self.side + (s - o) as usize;
        }
        Some(idx)
    }

    /// Site at row-major index `idx`.
    pub fn site_at(&self, mut idx: usize) -> Vec<i64> {
        debug_assert!(idx < self.len());
        let mut site = vec![0i64; self.dim()];
        for axis in (0..self.dim()).rev() {
            site[axis] = self.origin[axis] + (idx % self.side) as i64;
            idx /= self.side;
        }
        site
    }

    /// Sites in lexicographic order.
    pub fn sites(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(move |i| self.site_at(i))
    }

    pub fn translate(&self, by: &[i64]) -> Result<Self, LatticeError> {
        if by.len() != self.dim() {
            return Err(LatticeError::DimensionMismatch(self.dim(), by.len()));
        }
        let origin: Vec<i64> = self.origin.iter().zip(by).map(|(a, b)| a + b).collect();
        Ok(Self {
            origin,
            side: self.side,
        })
    }

    pub fn is_subset_of(&self, other: &LatticeBox) -> bool {
        self.dim() == other.dim() && other.contains(&self.origin) && other.contains(&self.max_corner())
    }

    /// Row-major indices, within `outer`, of this box's sites (in this box's
    /// own enumeration order). `None` when the box is not contained in `outer`.
    pub fn indices_in(&self, outer: &LatticeBox) -> Option<Vec<usize>> {
        if !self.is_subset_of(outer) {
            return None;
        }
        Some(self.sites().map(|s| outer.index_of(&s).unwrap()).collect())
    }
}

/// Sup-norm distance between the site sets of two boxes; 0 when they meet.
pub fn box_distance(a: &LatticeBox, b: &LatticeBox) -> Result<u64, LatticeError> {
    if a.dim() != b.dim() {
        return Err(LatticeError::DimensionMismatch(a.dim(), b.dim()));
    }
    // The minimum over site pairs of a max over axes separates into a max over
    // axes of per-axis interval gaps.
    let gap = a
        .origin
        .iter()
        .zip(&b.origin)
        .map(|(&ao, &bo)| {
            let (ahi, bhi) = (ao + a.side as i64 - 1, bo + b.side as i64 - 1);
            (bo - ahi).max(ao - bhi).max(0) as u64
        })
        .max()
        .unwrap_or(0);
    Ok(gap)
}

/// The gapped decomposition of a box of side `n` into `q^d` sub-boxes of side
/// `m` and the leftover marginal sites.
#[derive(Debug, Clone)]
pub struct BoxPartition {
    outer: LatticeBox,
    m: usize,
    gap: usize,
    q: usize,
    r: usize,
    sub_boxes: Vec<LatticeBox>,
    marginal: Vec<usize>,
    rho: Rational,
}

impl BoxPartition {
    /// Partition an arbitrary box. Tiles of side `m + gap` are laid from the
    /// lexicographic-minimum corner; the leftover strip of width `r` sits on
    /// the max side of every axis. Sub-box `k` is the side-`m` box sharing the
    /// minimum corner of tile `k`, tiles indexed row-major.
    pub fn of_box(outer: &LatticeBox, m: usize, gap: usize) -> Result<Self, LatticeError> {
        let n = outer.side();
        if m == 0 || m > n {
            return Err(LatticeError::InnerSide { m, n });
        }
        let d = outer.dim();
        let period = m + gap;
        let (q, r) = (n / period, n % period);

        let tiles = q.pow(d as u32);
        let mut sub_boxes = Vec::with_capacity(tiles);
        let mut covered = vec![false; outer.len()];
        for k in 0..tiles {
            let mut rem = k;
            let mut corner = vec![0i64; d];
            for axis in (0..d).rev() {
                corner[axis] = outer.origin()[axis] + ((rem % q) * period) as i64;
                rem /= q;
            }
            let sub = LatticeBox::new(d, m, &corner)?;
            for idx in sub.indices_in(outer).expect("sub-box inside outer box") {
                covered[idx] = true;
            }
            sub_boxes.push(sub);
        }
        let marginal: Vec<usize> = covered
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| (!c).then_some(i))
            .collect();
        let rho = Rational::new(marginal.len() as i128, outer.len() as i128);
        Ok(Self {
            outer: outer.clone(),
            m,
            gap,
            q,
            r,
            sub_boxes,
            marginal,
            rho,
        })
    }

    pub fn outer(&self) -> &LatticeBox {
        &self.outer
    }
    pub fn inner_side(&self) -> usize {
        self.m
    }
    pub fn gap(&self) -> usize {
        self.gap
    }
    pub fn quotient(&self) -> usize {
        self.q
    }
    pub fn remainder(&self) -> usize {
        self.r
    }
    /// Sub-boxes in row-major tile order.
    pub fn sub_boxes(&self) -> &[LatticeBox] {
        &self.sub_boxes
    }
    /// Row-major indices (within the outer box) of the marginal sites.
    pub fn marginal_indices(&self) -> &[usize] {
        &self.marginal
    }
    pub fn marginal_sites(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        self.marginal.iter().map(|&i| self.outer.site_at(i))
    }
    /// `|S₀| / n^d`, counted.
    pub fn rho(&self) -> Rational {
        self.rho
    }
}

/// Partition of `Λ(n)` in dimension `d` with gap `g(m)`.
pub fn adapted_partition(n: usize, m: usize, gap: usize, d: usize) -> Result<BoxPartition, LatticeError> {
    let outer = LatticeBox::cube(d, n)?;
    BoxPartition::of_box(&outer, m, gap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalFraction {
    pub exact: Rational,
    pub value: f64,
}

/// `ρ = 1 − (1 − r/n)^d (1 − g/(m+g))^d` from the Euclidean division
/// `n = q(m+g) + r`, in exact arithmetic.
pub fn marginal_fraction(n: usize, m: usize, gap: usize, d: usize) -> Result<MarginalFraction, LatticeError> {
    if d == 0 {
        return Err(LatticeError::ZeroDimension(d));
    }
    if m == 0 || m > n {
        return Err(LatticeError::InnerSide { m, n });
    }
    let period = (m + gap) as i128;
    let r = n as i128 % period;
    let one = Rational::from_integer(1);
    let strip = one - Rational::new(r, n as i128);
    let spacing = one - Rational::new(gap as i128, period);
    let exact = one - pow(strip * spacing, d);
    let value = *exact.numer() as f64 / *exact.denom() as f64;
    Ok(MarginalFraction { exact, value })
}

fn pow(base: Rational, d: usize) -> Rational {
    (0..d).fold(Rational::from_integer(1), |acc, _| acc * base)
}

/// Upper envelope `d·(m/n + g/(m+g))` on the marginal fraction.
pub fn marginal_fraction_bound(n: usize, m: usize, gap: usize, d: usize) -> f64 {
    d as f64 * (m as f64 / n as f64 + gap as f64 / (m + gap) as f64)
}
