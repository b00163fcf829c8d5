//! Two-sample significance testing for accuracy comparisons.
//!
//! Implements the pooled-variance two-sample t test. The two-sided p value
//! comes from the regularized incomplete beta function, evaluated with a
//! Lentz-style continued fraction and a Lanczos log-gamma — both standard
//! numerics, implemented here to keep the crate dependency-light. For the
//! argument ranges this module sees (half-integer shape parameters, a few
//! hundred degrees of freedom at most) the absolute error is far below
//! 1e-8; the acceptance suite cross-checks p values against an independent
//! quadrature of the t density at 1e-6.

use std::error::Error;
use std::fmt;

/// Result of a two-sample t test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    /// The t statistic (sign follows `xs` minus `ys`).
    pub t: f64,
    /// Two-sided p value in `[0, 1]`.
    pub p: f64,
    /// Degrees of freedom, `n1 + n2 - 2`.
    pub dof: f64,
}

/// Why a t test could not be computed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatsError {
    /// Each sample needs at least two observations.
    TooFewSamples,
    /// Pooled variance is zero (both samples are constant), so the
    /// statistic is undefined.
    DegenerateVariance,
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::TooFewSamples => {
                write!(f, "t test needs at least two observations per sample")
            }
            StatsError::DegenerateVariance => {
                write!(f, "t test undefined: both samples have zero variance")
            }
        }
    }
}

impl Error for StatsError {}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n - 1 denominator).
fn sample_variance(xs: &[f64], mean: f64) -> f64 {
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Pooled-variance two-sample t test (equal variances assumed).
///
/// Returns the statistic, the two-sided p value and the degrees of freedom.
/// For samples with identical means the statistic is exactly 0 and p is
/// exactly 1.
pub fn t_test(xs: &[f64], ys: &[f64]) -> Result<TTestResult, StatsError> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(StatsError::TooFewSamples);
    }
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);
    let (m1, m2) = (mean(xs), mean(ys));
    let (v1, v2) = (sample_variance(xs, m1), sample_variance(ys, m2));
    let dof = n1 + n2 - 2.0;
    let pooled = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / dof;
    if pooled <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let t = (m1 - m2) / (pooled * (1.0 / n1 + 1.0 / n2)).sqrt();
    // Two-sided tail mass of the t distribution:
    // p = I_{dof/(dof + t^2)}(dof/2, 1/2).
    let p = incomplete_beta_reg(dof / 2.0, 0.5, dof / (dof + t * t));
    Ok(TTestResult { t, p, dof })
}

/// Natural log of the gamma function for strictly positive arguments,
/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(z: f64) -> f64 {
    debug_assert!(z > 0.0, "ln_gamma needs a positive argument");
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    if z < 0.5 {
        // Reflection: Gamma(z) Gamma(1 - z) = pi / sin(pi z).
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut sum = 0.999_999_999_999_809_9;
    for (i, c) in COEFFS.iter().enumerate() {
        sum += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
}

/// Regularized incomplete beta function `I_x(a, b)` for `a, b > 0` and
/// `x` in `[0, 1]`.
pub fn incomplete_beta_reg(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    // The continued fraction converges fastest below the distribution mode;
    // above it, evaluate the mirrored integral instead. Equality goes to the
    // direct branch so the mirrored call can never mirror again.
    if x <= (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - incomplete_beta_reg(b, a, 1.0 - x)
    }
}

/// Continued-fraction core of the incomplete beta (modified Lentz method).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
