use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_binomial;

use super::FieldError;
use crate::convex::ConvexBody;
use crate::numeric::log_sum_exp;

/// Single-site law of an i.i.d. field (scalar states).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SiteLaw {
    /// Values in {0, 1}, `P(1) = p`.
    Bernoulli { p: f64 },
    /// Values in {−1, +1}, `P(+1) = p`.
    Spin { p: f64 },
    Gaussian { mean: f64, var: f64 },
    Uniform { a: f64, b: f64 },
}

impl SiteLaw {
    pub fn validate(&self) -> Result<(), FieldError> {
        let ok = match *self {
            SiteLaw::Bernoulli { p } | SiteLaw::Spin { p } => p > 0.0 && p < 1.0,
            SiteLaw::Gaussian { mean, var } => mean.is_finite() && var > 0.0 && var.is_finite(),
            SiteLaw::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
        };
        if ok {
            Ok(())
        } else {
            Err(FieldError::InvalidParameter(format!("invalid site law {self:?}")))
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            SiteLaw::Bernoulli { p } => format!("bernoulli(p={p})"),
            SiteLaw::Spin { p } => format!("spin(p={p})"),
            SiteLaw::Gaussian { mean, var } => format!("gaussian(mean={mean}, var={var})"),
            SiteLaw::Uniform { a, b } => format!("uniform(a={a}, b={b})"),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SiteLaw::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            SiteLaw::Spin { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    -1.0
                }
            }
            SiteLaw::Gaussian { mean, var } => Normal::new(mean, var.sqrt()).expect("validated").sample(rng),
            SiteLaw::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SiteLaw::Bernoulli { p } => p,
            SiteLaw::Spin { p } => 2.0 * p - 1.0,
            SiteLaw::Gaussian { mean, .. } => mean,
            SiteLaw::Uniform { a, b } => 0.5 * (a + b),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            SiteLaw::Bernoulli { p } => p * (1.0 - p),
            SiteLaw::Spin { p } => 4.0 * p * (1.0 - p),
            SiteLaw::Gaussian { var, .. } => var,
            SiteLaw::Uniform { a, b } => (b - a).powi(2) / 12.0,
        }
    }

    /// Atoms of a discrete law.
    pub fn atoms(&self) -> Option<[(f64, f64); 2]> {
        match *self {
            SiteLaw::Bernoulli { p } => Some([(0.0, 1.0 - p), (1.0, p)]),
            SiteLaw::Spin { p } => Some([(-1.0, 1.0 - p), (1.0, p)]),
            _ => None,
        }
    }

    /// Closed range of the support, if bounded.
    pub fn support_range(&self) -> Option<(f64, f64)> {
        match *self {
            SiteLaw::Bernoulli { .. } => Some((0.0, 1.0)),
            SiteLaw::Spin { .. } => Some((-1.0, 1.0)),
            SiteLaw::Uniform { a, b } => Some((a, b)),
            SiteLaw::Gaussian { .. } => None,
        }
    }

    /// `P(X ∈ (lo, hi))`.
    pub fn interval_probability(&self, lo: f64, hi: f64) -> f64 {
        if lo >= hi {
            return 0.0;
        }
        match *self {
            SiteLaw::Bernoulli { .. } | SiteLaw::Spin { .. } => self
                .atoms()
                .unwrap()
                .iter()
                .filter(|(v, _)| *v > lo && *v < hi)
                .map(|(_, w)| w)
                .sum(),
            SiteLaw::Gaussian { mean, var } => normal_interval(lo, hi, mean, var.sqrt()),
            SiteLaw::Uniform { a, b } => ((hi.min(b) - lo.max(a)) / (b - a)).max(0.0),
        }
    }

    /// `log E e^{λX}`.
    pub fn log_mgf(&self, lambda: f64) -> f64 {
        match *self {
            SiteLaw::Bernoulli { p } => log_sum_exp(&[(1.0 - p).ln(), p.ln() + lambda]),
            SiteLaw::Spin { p } => log_sum_exp(&[(1.0 - p).ln() - lambda, p.ln() + lambda]),
            SiteLaw::Gaussian { mean, var } => mean * lambda + 0.5 * var * lambda * lambda,
            SiteLaw::Uniform { a, b } => {
                let w = b - a;
                let s = lambda * w;
                if lambda == 0.0 {
                    0.0
                } else if lambda > 0.0 {
                    lambda * b + (-(-s).exp_m1() / s).ln()
                } else {
                    lambda * a + (-s.exp_m1() / -s).ln()
                }
            }
        }
    }

    /// Rate-function oracle `−sup_λ(λx − log E e^{λX})`, where closed-form.
    pub fn entropy(&self, x: f64) -> Option<f64> {
        match *self {
            SiteLaw::Bernoulli { p } => Some(-relative_entropy(x, p)),
            SiteLaw::Spin { p } => Some(-relative_entropy(0.5 * (1.0 + x), p)),
            SiteLaw::Gaussian { mean, var } => Some(-(x - mean).powi(2) / (2.0 * var)),
            SiteLaw::Uniform { .. } => None,
        }
    }

    /// `log P(m_N ∈ event)` for the mean of `sites` independent draws, where
    /// computable in closed form.
    pub fn log_mean_probability(&self, sites: usize, event: &ConvexBody) -> Option<Result<f64, FieldError>> {
        let n = sites as f64;
        match *self {
            SiteLaw::Bernoulli { p } | SiteLaw::Spin { p } => {
                let spin = matches!(self, SiteLaw::Spin { .. });
                let mut terms = Vec::new();
                for k in 0..=sites {
                    let mean = if spin { (2.0 * k as f64 - n) / n } else { k as f64 / n };
                    match event.contains(&[mean]) {
                        Ok(true) => terms.push(
                            ln_binomial(sites as u64, k as u64) + k as f64 * p.ln() + (n - k as f64) * (1.0 - p).ln(),
                        ),
                        Ok(false) => {}
                        Err(e) => return Some(Err(e.into())),
                    }
                }
                Some(Ok(log_sum_exp(&terms)))
            }
            SiteLaw::Gaussian { mean, var } => Some(
                event
                    .interval_bounds()
                    .map(|(lo, hi)| normal_interval(lo, hi, mean, (var / n).sqrt()).ln())
                    .map_err(FieldError::from),
            ),
            SiteLaw::Uniform { .. } => None,
        }
    }
}

/// `D(x ‖ p)` for Bernoulli laws; `+∞` outside `[0, 1]`.
pub fn relative_entropy(x: f64, p: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return f64::INFINITY;
    }
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(x, p) + term(1.0 - x, 1.0 - p)
}

/// Upper tail `P(Z > z)` of the standard normal.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// `P(lo < Y < hi)` for `Y ~ N(mean, sd²)`, accurate in either tail.
pub fn normal_interval(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    let (zl, zh) = ((lo - mean) / sd, (hi - mean) / sd);
    if zl >= 0.0 {
        (normal_sf(zl) - normal_sf(zh)).max(0.0)
    } else if zh <= 0.0 {
        (normal_sf(-zh) - normal_sf(-zl)).max(0.0)
    } else {
        1.0 - normal_sf(zh) - normal_sf(-zl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pressures_match_closed_forms() {
        let b = SiteLaw::Bernoulli { p: 0.3 };
        for l in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            assert!((b.log_mgf(l) - (0.7 + 0.3 * f64::exp(l)).ln()).abs() < 1e-14);
        }
        let s = SiteLaw::Spin { p: 0.5 };
        assert!((s.log_mgf(0.7) - f64::cosh(0.7).ln()).abs() < 1e-14);
        let u = SiteLaw::Uniform { a: -1.0, b: 2.0 };
        for l in [-1.5, 0.3, 2.0] {
            let exact = ((l * 2.0f64).exp() - (-l).exp()) / (3.0 * l);
            assert!((u.log_mgf(l) - exact.ln()).abs() < 1e-13);
        }
        assert_eq!(u.log_mgf(0.0), 0.0);
    }

    #[test]
    fn binomial_interval_probability() {
        // Σ_{k=11}^{14} C(25,k)/2^25: the open interval (0.4, 0.6).
        let event = ConvexBody::ball(1, 0.1).unwrap().centered_at(&[0.5]).unwrap();
        let lp = SiteLaw::Bernoulli { p: 0.5 }.log_mean_probability(25, &event).unwrap().unwrap();
        let exact: u64 = [4457400u64, 5200300, 5200300, 4457400].iter().sum();
        assert!((lp.exp() - exact as f64 / 2f64.powi(25)).abs() < 1e-14);
    }

    #[test]
    fn normal_interval_probability() {
        let event = ConvexBody::ball(1, 0.1).unwrap();
        let lp = SiteLaw::Gaussian { mean: 0.0, var: 1.0 }
            .log_mean_probability(16, &event)
            .unwrap()
            .unwrap();
        assert!((lp.exp() - 0.310_843_483_220_648_4).abs() < 1e-12);
        // Far tail keeps relative accuracy.
        let tail = normal_interval(8.0, 9.0, 0.0, 1.0);
        assert!((tail / 6.219831985865787e-16 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn entropy_oracles() {
        let b = SiteLaw::Bernoulli { p: 0.5 };
        assert!((b.entropy(0.6).unwrap() + 0.020_135_513_550_688_863).abs() < 1e-15);
        assert_eq!(b.entropy(1.2), Some(f64::NEG_INFINITY));
        assert_eq!(b.entropy(0.0), Some(0.5f64.ln()));
        let g = SiteLaw::Gaussian { mean: 0.0, var: 1.0 };
        assert_eq!(g.entropy(0.5), Some(-0.125));
    }

    #[test]
    fn validation() {
        assert!(SiteLaw::Bernoulli { p: 1.0 }.validate().is_err());
        assert!(SiteLaw::Gaussian { mean: 0.0, var: 0.0 }.validate().is_err());
        assert!(SiteLaw::Uniform { a: 1.0, b: 1.0 }.validate().is_err());
        assert!(SiteLaw::Spin { p: 0.2 }.validate().is_ok());
    }
}
