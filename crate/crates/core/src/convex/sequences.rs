//! Deterministic checks for subadditive sequences and the largest-term
//! principle.

use serde::Serialize;

use super::ConvexError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubadditivityViolation {
    pub i: usize,
    pub j: usize,
    /// `u(i + j)`
    pub lhs: f64,
    /// `u(i) + u(j)`
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeketeReport {
    pub n_max: usize,
    /// `min_{n ≤ n_max} u(n)/n`.
    pub inf_ratio: f64,
    pub argmin: usize,
    /// `u(n_max)/n_max`.
    pub tail_ratio: f64,
    /// Smallest `N` with `u(n) < ∞` for every `N ≤ n ≤ n_max`.
    pub control_index: Option<usize>,
    /// First pair `(i, j)` (ordered by `i + j`, then `i`) breaking
    /// `u(i + j) ≤ u(i) + u(j)`.
    pub violation: Option<SubadditivityViolation>,
}

impl FeketeReport {
    pub fn is_subadditive(&self) -> bool {
        self.violation.is_none()
    }

    pub fn is_controlled(&self) -> bool {
        self.control_index.is_some()
    }
}

/// Tabulate `u` on `1..=n_max`, check subadditivity exhaustively and report
/// the infimum and tail of `u(n)/n`.
pub fn fekete_limit(u: impl Fn(usize) -> f64, n_max: usize) -> Result<FeketeReport, ConvexError> {
    if n_max == 0 {
        return Err(ConvexError::InvalidSequence("n_max must be at least 1".into()));
    }
    let values: Vec<f64> = (1..=n_max).map(&u).collect();
    if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
        return Err(ConvexError::InvalidSequence(format!(
            "u({}) = {v} is outside [0, +inf]",
            k + 1
        )));
    }
    let at = |n: usize| values[n - 1];

    let mut violation = None;
    'outer: for s in 2..=n_max {
        for i in 1..=s / 2 {
            let j = s - i;
            let (lhs, rhs) = (at(s), at(i) + at(j));
            if lhs > rhs + 1e-12 * rhs.abs().max(1.0) {
                violation = Some(SubadditivityViolation { i, j, lhs, rhs });
                break 'outer;
            }
        }
    }

    let (argmin, inf_ratio) = values
        .iter()
        .enumerate()
        .map(|(k, v)| (k + 1, v / (k + 1) as f64))
        .fold((1, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let control_index = match values.iter().rposition(|v| v.is_infinite()) {
        None => Some(1),
        Some(k) if k + 1 < n_max => Some(k + 2),
        Some(_) => None,
    };
    Ok(FeketeReport {
        n_max,
        inf_ratio,
        argmin,
        tail_ratio: at(n_max) / n_max as f64,
        control_index,
        violation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargestTermRow {
    pub n: usize,
    /// `(1/n)·log Σᵢ exp(n·aᵢ(n))`
    pub combined: f64,
    /// `maxᵢ aᵢ(n)`
    pub max_term: f64,
    /// `log(r)/n`, the width of the sandwich `max ≤ combined ≤ max + log(r)/n`.
    pub gap_bound: f64,
}

impl LargestTermRow {
    pub fn within_bounds(&self, tol: f64) -> bool {
        if self.max_term == f64::NEG_INFINITY {
            return self.combined == f64::NEG_INFINITY;
        }
        self.combined >= self.max_term - tol && self.combined <= self.max_term + self.gap_bound + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargestTermReport {
    pub rows: Vec<LargestTermRow>,
    /// Tail supremum of each sequence over `n ∈ [⌈n_max/2⌉, n_max]`.
    pub per_sequence_limsup: Vec<f64>,
    /// Same tail supremum for the combined sequence.
    pub combined_limsup: f64,
}

/// `terms[i][n − 1]` holds `aᵢ(n)` for `n = 1..=n_max`; all sequences must
/// have the same length.
pub fn largest_term(terms: &[Vec<f64>]) -> Result<LargestTermReport, ConvexError> {
    let n_max = terms
        .first()
        .map(Vec::len)
        .ok_or_else(|| ConvexError::InvalidSequence("empty list of sequences".into()))?;
    if n_max == 0 || terms.iter().any(|t| t.len() != n_max) {
        return Err(ConvexError::InvalidSequence("sequences must share a nonzero length".into()));
    }
    if terms.iter().flatten().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(ConvexError::InvalidSequence("terms must lie in [-inf, inf)".into()));
    }
    let r = terms.len() as f64;
    let rows: Vec<LargestTermRow> = (1..=n_max)
        .map(|n| {
            let max_term = terms.iter().map(|t| t[n - 1]).fold(f64::NEG_INFINITY, f64::max);
            // max ≤ combined ≤ max + log(r)/n holds exactly in floating point.
            let combined = if max_term == f64::NEG_INFINITY {
                max_term
            } else {
                let rest: f64 = terms.iter().map(|t| (n as f64 * (t[n - 1] - max_term)).exp()).sum();
                max_term + rest.ln() / n as f64
            };
            LargestTermRow {
                n,
                combined,
                max_term,
                gap_bound: r.ln() / n as f64,
            }
        })
        .collect();
    let tail_start = n_max.div_ceil(2).max(1);
    let tail_sup = |seq: &dyn Fn(usize) -> f64| (tail_start..=n_max).map(seq).fold(f64::NEG_INFINITY, f64::max);
    let per_sequence_limsup = terms.iter().map(|t| tail_sup(&|n| t[n - 1])).collect();
    let combined_limsup = tail_sup(&|n| rows[n - 1].combined);
    Ok(LargestTermReport {
        rows,
        per_sequence_limsup,
        combined_limsup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_sequence() {
        let r = fekete_limit(|n| 2.0 * n as f64, 100).unwrap();
        assert_eq!(r.inf_ratio, 2.0);
        assert_eq!(r.tail_ratio, 2.0);
        assert!(r.is_subadditive() && r.is_controlled());
    }

    #[test]
    fn logarithmic_correction() {
        let n_max = 10_000;
        let r = fekete_limit(|n| n as f64 + (1.0 + n as f64).ln(), n_max).unwrap();
        assert!(r.is_subadditive());
        assert_eq!(r.argmin, n_max);
        assert!((r.inf_ratio - (1.0 + 10_001f64.ln() / 1e4)).abs() < 1e-12);
        assert!((r.tail_ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ceiling_sequence() {
        let r = fekete_limit(|n| (1.5 * n as f64).ceil(), 10_000).unwrap();
        assert!(r.is_subadditive());
        assert_eq!(r.inf_ratio, 1.5);
        assert!((r.tail_ratio - 1.5).abs() <= 1e-4);
    }

    #[test]
    fn violation_is_reported() {
        let r = fekete_limit(|n| (n * n) as f64, 10).unwrap();
        let v = r.violation.unwrap();
        assert_eq!((v.i, v.j), (1, 1));
        assert_eq!((v.lhs, v.rhs), (4.0, 2.0));
        assert!(fekete_limit(|_| -1.0, 3).is_err());
    }

    #[test]
    fn control_index_tracks_infinite_prefix() {
        let r = fekete_limit(|n| if n < 4 { f64::INFINITY } else { n as f64 }, 20).unwrap();
        assert_eq!(r.control_index, Some(4));
        let r = fekete_limit(|n| if n == 20 { f64::INFINITY } else { n as f64 }, 20).unwrap();
        assert_eq!(r.control_index, None);
    }

    #[test]
    fn two_constants() {
        let terms = vec![vec![-1.0; 50], vec![-2.0; 50]];
        let r = largest_term(&terms).unwrap();
        for row in &r.rows {
            let want = -1.0 + (1.0 + (-(row.n as f64)).exp()).ln() / row.n as f64;
            assert!((row.combined - want).abs() < 1e-12);
            assert_eq!(row.gap_bound, 2f64.ln() / row.n as f64);
            assert!(row.within_bounds(1e-12));
        }
    }

    #[test]
    fn dominant_term() {
        let n_max = 1000;
        let terms = vec![(1..=n_max).map(|n| -1.0 / n as f64).collect(), vec![-5.0; n_max]];
        let r = largest_term(&terms).unwrap();
        assert!(r.combined_limsup.abs() < 1e-2);
        assert!(largest_term(&[]).is_err());
    }
}
