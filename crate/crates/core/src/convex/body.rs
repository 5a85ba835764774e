use super::ConvexError;
use crate::numeric::{dot, norm2};

/// Tolerance used when deciding strict membership `M_C(x) < 1`: points whose
/// gauge is within this distance of 1 are treated as boundary points and
/// excluded, so that boundary lattice means (e.g. `k/n` exactly at `x ± r`)
/// are classified the same way regardless of rounding.
pub const BOUNDARY_TOL: f64 = 1e-12;

const BISECTION_STEPS: usize = 200;

/// An open convex set described by its Minkowski gauge.
///
/// `Ball`, `Box` and `Polytope` contain the origin in their interior. A
/// `Translate` is `offset + body`; its "gauge" is the body gauge evaluated at
/// `x − offset`, which is the membership functional of the translated set
/// (not positively homogeneous).
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    Ball { dim: usize, radius: f64 },
    Box { halfwidths: Vec<f64> },
    Polytope(Polytope),
    Translate { offset: Vec<f64>, body: Box<ConvexBody> },
}

/// Convex hull of finitely many vertices with the origin in its interior,
/// stored with its facet inequalities `a·x ≤ b` (`b > 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    vertices: Vec<Vec<f64>>,
    facets: Vec<(Vec<f64>, f64)>,
}

impl Polytope {
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[(Vec<f64>, f64)] {
        &self.facets
    }

    /// Closed-set membership of `x` in `t·P`.
    fn in_scaled(&self, x: &[f64], t: f64) -> bool {
        self.facets.iter().all(|(a, b)| dot(a, x) <= t * b)
    }
}

impl ConvexBody {
    /// Euclidean ball of radius `radius` (may be `+inf`, the whole space).
    pub fn ball(dim: usize, radius: f64) -> Result<Self, ConvexError> {
        if dim == 0 {
            return Err(ConvexError::ZeroDimension);
        }
        if !(radius > 0.0) {
            return Err(ConvexError::InvalidBody(format!("ball radius must be > 0, got {radius}")));
        }
        Ok(Self::Ball { dim, radius })
    }

    pub fn cuboid(halfwidths: Vec<f64>) -> Result<Self, ConvexError> {
        if halfwidths.is_empty() {
            return Err(ConvexError::ZeroDimension);
        }
        if halfwidths.iter().any(|w| !(*w > 0.0)) {
            return Err(ConvexError::InvalidBody(format!(
                "box halfwidths must be > 0, got {halfwidths:?}"
            )));
        }
        Ok(Self::Box { halfwidths })
    }

    /// One-dimensional open interval `(lo, hi)` with `lo < 0 < hi`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self, ConvexError> {
        Self::polytope(vec![vec![lo], vec![hi]])
    }

    /// Convex hull of `vertices` (dimension 1 to 3); the origin must be an
    /// interior point.
    pub fn polytope(vertices: Vec<Vec<f64>>) -> Result<Self, ConvexError> {
        let dim = vertices.first().map(Vec::len).ok_or(ConvexError::ZeroDimension)?;
        if dim == 0 {
            return Err(ConvexError::ZeroDimension);
        }
        if vertices.iter().any(|v| v.len() != dim) {
            return Err(ConvexError::InvalidBody("vertices of mixed dimension".into()));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(ConvexError::InvalidBody("non-finite vertex coordinate".into()));
        }
        let facets = match dim {
            1 => {
                let lo = vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
                let hi = vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
                vec![(vec![1.0], hi), (vec![-1.0], -lo)]
            }
            2 | 3 => facets_by_enumeration(&vertices, dim)?,
            _ => {
                return Err(ConvexError::InvalidBody(format!(
                    "polytopes are supported up to dimension 3, got {dim}"
                )))
            }
        };
        if facets.is_empty() || facets.iter().any(|(_, b)| !(*b > 1e-12)) {
            return Err(ConvexError::InvalidBody(
                "polytope must contain the origin in its interior".into(),
            ));
        }
        Ok(Self::Polytope(Polytope { vertices, facets }))
    }

    pub fn translate(offset: Vec<f64>, body: ConvexBody) -> Result<Self, ConvexError> {
        if offset.len() != body.dim() {
            return Err(ConvexError::DimensionMismatch {
                expected: body.dim(),
                got: offset.len(),
            });
        }
        Ok(Self::Translate {
            offset,
            body: Box::new(body),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { dim, .. } => *dim,
            Self::Box { halfwidths } => halfwidths.len(),
            Self::Polytope(p) => p.vertices[0].len(),
            Self::Translate { offset, .. } => offset.len(),
        }
    }

    /// The set `t·C` (for a translate, `t·offset + t·body`).
    pub fn scaled(&self, t: f64) -> Result<Self, ConvexError> {
        if !(t > 0.0) {
            return Err(ConvexError::InvalidBody(format!("scale must be > 0, got {t}")));
        }
        Ok(match self {
            Self::Ball { dim, radius } => Self::Ball {
                dim: *dim,
                radius: radius * t,
            },
            Self::Box { halfwidths } => Self::Box {
                halfwidths: halfwidths.iter().map(|w| w * t).collect(),
            },
            Self::Polytope(p) => Self::Polytope(Polytope {
                vertices: p.vertices.iter().map(|v| v.iter().map(|c| c * t).collect()).collect(),
                facets: p.facets.iter().map(|(a, b)| (a.clone(), b * t)).collect(),
            }),
            Self::Translate { offset, body } => Self::Translate {
                offset: offset.iter().map(|c| c * t).collect(),
                body: Box::new(body.scaled(t)?),
            },
        })
    }

    /// `x + C`.
    pub fn centered_at(&self, x: &[f64]) -> Result<Self, ConvexError> {
        Self::translate(x.to_vec(), self.clone())
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ConvexError> {
        if x.len() != self.dim() {
            return Err(ConvexError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Minkowski gauge `inf { t ≥ 0 : x ∈ tC }`.
    pub fn gauge(&self, x: &[f64]) -> Result<f64, ConvexError> {
        self.check_dim(x)?;
        Ok(self.gauge_unchecked(x))
    }

    pub(crate) fn gauge_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            Self::Ball { radius, .. } => {
                let r = norm2(x);
                if r == 0.0 {
                    0.0
                } else {
                    r / radius
                }
            }
            Self::Box { halfwidths } => x
                .iter()
                .zip(halfwidths)
                .map(|(c, w)| c.abs() / w)
                .fold(0.0, f64::max),
            Self::Polytope(p) => polytope_gauge(p, x),
            Self::Translate { offset, body } => {
                let shifted: Vec<f64> = x.iter().zip(offset).map(|(a, b)| a - b).collect();
                body.gauge_unchecked(&shifted)
            }
        }
    }

    /// Open-set membership `M_C(x) < 1`, with boundary points excluded.
    pub fn contains(&self, x: &[f64]) -> Result<bool, ConvexError> {
        Ok(self.gauge(x)? < 1.0 - BOUNDARY_TOL)
    }

    /// Membership in `t·C` for a body containing the origin.
    pub fn scaled_contains(&self, t: f64, x: &[f64]) -> Result<bool, ConvexError> {
        Ok(self.gauge(x)? < t * (1.0 - BOUNDARY_TOL))
    }

    /// Support function `sup_{c ∈ C} ⟨λ, c⟩`.
    pub fn support(&self, lambda: &[f64]) -> Result<f64, ConvexError> {
        self.check_dim(lambda)?;
        Ok(match self {
            Self::Ball { radius, .. } => {
                let l = norm2(lambda);
                if l == 0.0 {
                    0.0
                } else {
                    radius * l
                }
            }
            Self::Box { halfwidths } => lambda.iter().zip(halfwidths).map(|(l, w)| l.abs() * w).sum(),
            Self::Polytope(p) => p
                .vertices
                .iter()
                .map(|v| dot(lambda, v))
                .fold(f64::NEG_INFINITY, f64::max),
            Self::Translate { offset, body } => dot(lambda, offset) + body.support(lambda)?,
        })
    }

    /// Open interval `{y : M_C(y) < 1}` of a one-dimensional body.
    pub fn interval_bounds(&self) -> Result<(f64, f64), ConvexError> {
        if self.dim() != 1 {
            return Err(ConvexError::DimensionMismatch {
                expected: 1,
                got: self.dim(),
            });
        }
        Ok(match self {
            Self::Translate { offset, body } => {
                let (lo, hi) = body.interval_bounds()?;
                (offset[0] + lo, offset[0] + hi)
            }
            _ => (-self.support(&[-1.0])?, self.support(&[1.0])?),
        })
    }
}

fn polytope_gauge(p: &Polytope, x: &[f64]) -> f64 {
    if x.iter().all(|&c| c == 0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    while !p.in_scaled(x, hi) {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p.in_scaled(x, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Supporting hyperplanes through every `dim`-subset of vertices that leave
/// all vertices on one side.
fn facets_by_enumeration(vertices: &[Vec<f64>], dim: usize) -> Result<Vec<(Vec<f64>, f64)>, ConvexError> {
    let scale = vertices
        .iter()
        .flatten()
        .fold(0.0f64, |m, c| m.max(c.abs()))
        .max(1.0);
    let tol = 1e-12 * scale * scale;
    let k = vertices.len();
    let mut facets = Vec::new();
    let mut full_dimensional = false;
    let mut consider = |normal: Vec<f64>, anchor: &[f64]| {
        let len = norm2(&normal);
        if len <= tol {
            return;
        }
        let a: Vec<f64> = normal.iter().map(|c| c / len).collect();
        let b = dot(&a, anchor);
        let side: Vec<f64> = vertices.iter().map(|v| dot(&a, v) - b).collect();
        let above = side.iter().any(|&s| s > 1e-12 * scale);
        let below = side.iter().any(|&s| s < -1e-12 * scale);
        if above || below {
            full_dimensional = true;
        }
        match (above, below) {
            (false, true) => facets.push((a, b)),
            (true, false) => facets.push((a.iter().map(|c| -c).collect(), -b)),
            _ => {}
        }
    };
    match dim {
        2 => {
            for i in 0..k {
                for j in i + 1..k {
                    let (p, q) = (&vertices[i], &vertices[j]);
                    consider(vec![q[1] - p[1], p[0] - q[0]], p);
                }
            }
        }
        3 => {
            for i in 0..k {
                for j in i + 1..k {
                    for l in j + 1..k {
                        let (p, q, r) = (&vertices[i], &vertices[j], &vertices[l]);
                        let u: Vec<f64> = (0..3).map(|c| q[c] - p[c]).collect();
                        let v: Vec<f64> = (0..3).map(|c| r[c] - p[c]).collect();
                        let n = vec![
                            u[1] * v[2] - u[2] * v[1],
                            u[2] * v[0] - u[0] * v[2],
                            u[0] * v[1] - u[1] * v[0],
                        ];
                        consider(n, p);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    if !full_dimensional {
        return Err(ConvexError::InvalidBody("polytope is not full-dimensional".into()));
    }
    Ok(facets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_and_box_gauges() {
        let b = ConvexBody::ball(2, 2.0).unwrap();
        let x = [0.6, 0.8];
        assert!((b.gauge(&x).unwrap() - 0.5).abs() < 1e-15);
        let c = ConvexBody::cuboid(vec![1.0, 3.0]).unwrap();
        assert_eq!(c.gauge(&[2.0, 3.0]).unwrap(), 2.0);
        assert!(c.gauge(&[1.0]).is_err());
    }

    #[test]
    fn infinite_ball_contains_everything() {
        let b = ConvexBody::ball(1, f64::INFINITY).unwrap();
        assert!(b.contains(&[1e300]).unwrap());
    }

    /// Barycentric membership in the closed triangle (independent of facets).
    fn in_triangle(t: &[[f64; 2]; 3], p: [f64; 2]) -> bool {
        let [a, b, c] = *t;
        let det = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
        let l1 = ((b[1] - c[1]) * (p[0] - c[0]) + (c[0] - b[0]) * (p[1] - c[1])) / det;
        let l2 = ((c[1] - a[1]) * (p[0] - c[0]) + (a[0] - c[0]) * (p[1] - c[1])) / det;
        let l3 = 1.0 - l1 - l2;
        l1 >= -1e-15 && l2 >= -1e-15 && l3 >= -1e-15
    }

    /// Dense scan for the first scale containing `x`, then bisection on the
    /// barycentric test.
    fn scan_gauge(t: &[[f64; 2]; 3], x: [f64; 2]) -> f64 {
        let member = |s: f64| in_triangle(t, [x[0] / s, x[1] / s]);
        let mut s = 1e-3;
        while !member(s) {
            s += 1e-3;
        }
        let (mut lo, mut hi) = (s - 1e-3, s);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if member(mid) {
                hi = mid
            } else {
                lo = mid
            }
        }
        hi
    }

    #[test]
    fn triangle_gauge_matches_scan_oracle() {
        let tri = [[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]];
        let body = ConvexBody::polytope(tri.iter().map(|v| v.to_vec()).collect()).unwrap();
        for x in [[0.5, 0.5], [0.2, -0.7], [-3.0, 1.0], [0.01, 0.02]] {
            let g = body.gauge(&x).unwrap();
            assert!((g - scan_gauge(&tri, x)).abs() < 1e-8, "{x:?}: {g}");
        }
        assert!((body.gauge(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-12);
        assert!(!body.contains(&[0.5, 0.5]).unwrap());
    }

    #[test]
    fn polytope_rejects_origin_outside() {
        assert!(ConvexBody::polytope(vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![1.0, 1.0]]).is_err());
        assert!(ConvexBody::interval(0.0, 1.0).is_err());
        assert!(ConvexBody::polytope(vec![vec![1.0, 1.0], vec![-1.0, -1.0]]).is_err());
    }

    #[test]
    fn cube_polytope_agrees_with_box() {
        let mut verts = Vec::new();
        for s in 0..8 {
            verts.push((0..3).map(|b| if s >> b & 1 == 1 { 2.0 } else { -2.0 }).collect());
        }
        let p = ConvexBody::polytope(verts).unwrap();
        let b = ConvexBody::cuboid(vec![2.0; 3]).unwrap();
        for x in [[1.0, -3.0, 0.5], [0.1, 0.2, 0.3], [-4.0, 4.0, 4.0]] {
            assert!((p.gauge(&x).unwrap() - b.gauge(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn translate_and_interval_bounds() {
        let c = ConvexBody::ball(1, 0.1).unwrap().centered_at(&[0.5]).unwrap();
        let (lo, hi) = c.interval_bounds().unwrap();
        assert!((lo - 0.4).abs() < 1e-15 && (hi - 0.6).abs() < 1e-15);
        assert!(c.contains(&[0.55]).unwrap());
        // Exact boundary points are excluded even when rounding lands inside.
        assert!(!c.contains(&[0.4]).unwrap());
        assert!(!c.contains(&[0.6]).unwrap());
        let i = ConvexBody::interval(-0.5, 1.5).unwrap();
        assert_eq!(i.interval_bounds().unwrap(), (-0.5, 1.5));
    }

    #[test]
    fn support_functions() {
        let b = ConvexBody::ball(2, 0.5).unwrap();
        assert!((b.support(&[3.0, 4.0]).unwrap() - 2.5).abs() < 1e-15);
        let c = ConvexBody::cuboid(vec![1.0, 2.0]).unwrap();
        assert_eq!(c.support(&[-1.0, 1.0]).unwrap(), 3.0);
        let t = c.centered_at(&[1.0, 1.0]).unwrap();
        assert_eq!(t.support(&[-1.0, 1.0]).unwrap(), 3.0);
    }
}
