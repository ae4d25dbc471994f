//! Scalar statistics used by the certification bounds.

use crate::error::{Error, Result};

/// Arguments beyond this magnitude saturate the normal CDF to 0 or 1.
const CDF_CLAMP: f64 = 38.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceParams {
    alpha: f64,
    m: usize,
}

impl ConfidenceParams {
    pub fn new(alpha: f64, m: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
        }
        if m == 0 {
            return Err(Error::domain("sample count m must be positive"));
        }
        Ok(Self { alpha, m })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// Standard normal CDF, accurate to about 1e-16 absolute.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("normal CDF argument must be finite, got {x}")));
    }
    Ok(normal_cdf_unchecked(x))
}

pub(crate) fn normal_cdf_unchecked(x: f64) -> f64 {
    let x = x.clamp(-CDF_CLAMP, CDF_CLAMP);
    (0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

// Acklam's rational approximation, relative error below 1.2e-9.
// Published coefficients, kept digit for digit.
#[allow(clippy::excessive_precision)]
fn acklam_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Inverse of [`std_normal_cdf`] on the open unit interval.
///
/// Callers that may hold 0 or 1 must clamp before calling.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("normal quantile needs 0 < p < 1, got {p}")));
    }
    let mut x = acklam_quantile(p);
    for _ in 0..2 {
        let density = normal_pdf(x);
        if density <= 0.0 {
            break;
        }
        x -= (normal_cdf_unchecked(x) - p) / density;
    }
    Ok(x)
}

/// DKW half-width `sqrt(ln(2/alpha) / (2m))`.
pub fn dkw_epsilon(params: ConfidenceParams) -> f64 {
    dkw_half_width(params.alpha, params.m)
}

// The closed form itself is defined for alpha in (0, 2].
pub(crate) fn dkw_half_width(alpha: f64, m: usize) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * m as f64)).sqrt()
}

/// Fraction of `samples` strictly below `c`. `samples` must be sorted ascending.
pub fn ecdf_at(samples: &[f64], c: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::usage("ECDF of an empty sample"));
    }
    let below = samples.partition_point(|&r| r < c);
    Ok(below as f64 / samples.len() as f64)
}

/// One-sided lower `1 - alpha` Clopper-Pearson bound on a binomial proportion.
pub fn clopper_pearson_lower(successes: u64, trials: u64, alpha: f64) -> Result<f64> {
    if trials == 0 || successes > trials {
        return Err(Error::domain(format!(
            "need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if successes == 0 {
        return Ok(0.0);
    }
    if successes == trials {
        return Ok(alpha.powf(1.0 / trials as f64));
    }
    // P(X >= k; p) = I_p(k, n - k + 1) increases in p; find where it equals alpha.
    let a = successes as f64;
    let b = (trials - successes + 1) as f64;
    let (mut lo, mut hi) = (0.0_f64, successes as f64 / trials as f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if regularized_incomplete_beta(a, b, mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
pub(crate) fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * x.ln()
        + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
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
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
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
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
