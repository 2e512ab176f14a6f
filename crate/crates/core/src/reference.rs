//! Reference distributions: standard normal and Student t tail probabilities.

use libm::erfc;
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{PI, SQRT_2};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal upper tail, 1 - Φ(x), without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Standard normal quantile z_p.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile: p = {p} outside (0, 1)");
    let z = -SQRT_2 * erfc_inv(2.0 * p);
    // one Halley step against the accurate CDF
    let err = if z < 0.0 {
        normal_cdf(z) - p
    } else {
        (1.0 - p) - normal_sf(z)
    };
    let u = err * (2.0 * PI).sqrt() * (z * z / 2.0).exp();
    z - u / (1.0 + z * u / 2.0)
}

/// Student t upper tail P(T > t) with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "student_t_sf: df must be positive");
    if t.is_nan() {
        return f64::NAN;
    }
    if df > 1e10 {
        return normal_sf(t);
    }
    // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
    let x = df / (df + t * t);
    let two_tail = beta_reg(df / 2.0, 0.5, x);
    if t >= 0.0 {
        0.5 * two_tail
    } else {
        1.0 - 0.5 * two_tail
    }
}

pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    student_t_sf(-t, df)
}
