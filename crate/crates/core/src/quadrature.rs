//! Adaptive Gauss–Kronrod quadrature and Cauchy principal values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error(
        "quadrature on [{lo}, {hi}] did not converge after {refinements} refinements \
         (error estimate {error:e}, target {target:e})"
    )]
    NotConverged { lo: f64, hi: f64, refinements: usize, error: f64, target: f64 },
    #[error("principal value requested at support endpoint {0}")]
    SingularityAtEndpoint(f64),
    #[error("invalid quadrature settings: {0}")]
    InvalidSpec(&'static str),
}

/// Accuracy and resource limits for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Absolute error target for each integral.
    pub tolerance: f64,
    /// Maximum number of interval bisections.
    pub max_refinements: usize,
    /// Half-width of the symmetric singularity window, as a fraction of the
    /// integration range.
    pub window_fraction: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_refinements: 2000, window_fraction: 0.01 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(QuadratureError::InvalidSpec("tolerance must be positive"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction < 0.5) {
            return Err(QuadratureError::InvalidSpec("window_fraction must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive G7–K15 integration of `f` over `[lo, hi]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate drops below `spec.tolerance`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    spec.validate()?;
    if hi == lo {
        return Ok(0.0);
    }
    if hi < lo {
        return integrate(f, hi, lo, spec).map(|v| -v);
    }
    let mut segments = vec![gauss_kronrod(&f, lo, hi)];
    let mut refinements = 0;
    loop {
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if error <= spec.tolerance {
            return Ok(segments.iter().map(|s| s.value).sum());
        }
        if refinements >= spec.max_refinements {
            return Err(QuadratureError::NotConverged {
                lo,
                hi,
                refinements,
                error,
                target: spec.tolerance,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("at least one segment");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.lo + s.hi);
        if mid <= s.lo || mid >= s.hi {
            // interval exhausted at machine resolution
            return Err(QuadratureError::NotConverged {
                lo,
                hi,
                refinements,
                error,
                target: spec.tolerance,
            });
        }
        segments.push(gauss_kronrod(&f, s.lo, mid));
        segments.push(gauss_kronrod(&f, mid, s.hi));
        refinements += 1;
    }
}

/// Cauchy principal value `P ∫_lo^hi g(x) / (x0 - x) dx`.
///
/// A symmetric window `[x0 - h, x0 + h]` around the pole is folded onto
/// `(0, h]`, where the odd part of `1/(x0 - x)` cancels and the integrand
/// `(g(x0 - u) - g(x0 + u)) / u` is regular. The rest is ordinary adaptive
/// quadrature. `h` is `window_fraction · (hi - lo)`, shrunk to fit inside the
/// range.
pub fn principal_value<G: Fn(f64) -> f64>(
    g: G,
    lo: f64,
    hi: f64,
    x0: f64,
    spec: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    spec.validate()?;
    if x0 == lo || x0 == hi {
        return Err(QuadratureError::SingularityAtEndpoint(x0));
    }
    let kernel = |x: f64| g(x) / (x0 - x);
    if x0 < lo || x0 > hi {
        return integrate(kernel, lo, hi, spec);
    }
    let h = (spec.window_fraction * (hi - lo)).min(x0 - lo).min(hi - x0);
    let left = integrate(kernel, lo, x0 - h, spec)?;
    let right = integrate(kernel, x0 + h, hi, spec)?;
    let window = integrate(|u: f64| (g(x0 - u) - g(x0 + u)) / u, 0.0, h, spec)?;
    Ok(left + window + right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_and_transcendentals() {
        let spec = QuadratureSpec::default();
        assert_relative_eq!(integrate(|x| x * x, 0.0, 3.0, &spec).unwrap(), 9.0, epsilon = 1e-13);
        assert_relative_eq!(
            integrate(f64::sin, 0.0, std::f64::consts::PI, &spec).unwrap(),
            2.0,
            epsilon = 1e-13
        );
        assert_relative_eq!(
            integrate(|x| (-x * x).exp(), -8.0, 8.0, &spec).unwrap(),
            std::f64::consts::PI.sqrt(),
            epsilon = 1e-12
        );
        assert_relative_eq!(integrate(|x| x, 2.0, 0.0, &spec).unwrap(), -2.0, epsilon = 1e-14);
    }

    #[test]
    fn reports_non_convergence() {
        let spec = QuadratureSpec { max_refinements: 3, ..Default::default() };
        let err = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &spec).unwrap_err();
        assert!(matches!(err, QuadratureError::NotConverged { .. }));
    }

    #[test]
    fn principal_value_of_constant() {
        let spec = QuadratureSpec::default();
        // P∫_0^10 dx/(2 - x) = ln(2/8)
        let pv = principal_value(|_| 1.0, 0.0, 10.0, 2.0, &spec).unwrap();
        assert_relative_eq!(pv, (2.0f64 / 8.0).ln(), epsilon = 1e-12);
        let centered = principal_value(|_| 1.0, 0.0, 10.0, 5.0, &spec).unwrap();
        assert!(centered.abs() < 1e-13);
    }

    #[test]
    fn principal_value_of_linear_numerator() {
        // P∫_0^1 x/(x0 - x) dx = -1 + x0·ln(x0/(1-x0))
        let spec = QuadratureSpec::default();
        let x0 = 0.3;
        let pv = principal_value(|x| x, 0.0, 1.0, x0, &spec).unwrap();
        assert_relative_eq!(pv, -1.0 + x0 * (x0 / (1.0 - x0)).ln(), epsilon = 1e-12);
    }

    #[test]
    fn pole_outside_range_is_regular() {
        let spec = QuadratureSpec::default();
        let v = principal_value(|_| 1.0, 0.0, 1.0, 2.0, &spec).unwrap();
        assert_relative_eq!(v, 2.0f64.ln(), epsilon = 1e-13);
        assert_eq!(
            principal_value(|_| 1.0, 0.0, 1.0, 1.0, &spec),
            Err(QuadratureError::SingularityAtEndpoint(1.0))
        );
    }
}
