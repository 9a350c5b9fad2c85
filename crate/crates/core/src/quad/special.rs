//! Normal distribution special functions with log-space variants.

use libm::erfc;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

pub fn ln_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * LN_2PI
}

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < -38.5 {
        return ln_normal_cdf(x).exp();
    }
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// ln Φ(x), accurate far into the lower tail.
pub fn ln_normal_cdf(x: f64) -> f64 {
    if x < -5.0 {
        ln_normal_pdf(x) + mills_ratio(-x).ln()
    } else if x > 5.0 {
        (-normal_cdf(-x)).ln_1p()
    } else {
        normal_cdf(x).ln()
    }
}

/// Mills ratio R(z) = (1 - Φ(z)) / φ(z) for z ≥ 5, by the Laplace continued fraction.
fn mills_ratio(z: f64) -> f64 {
    let mut acc = z;
    for k in (1..=60).rev() {
        acc = z + k as f64 / acc;
    }
    1.0 / acc
}

/// ln(Φ(b) - Φ(a)) for a < b, stable when both are in the same tail.
pub fn ln_normal_interval(a: f64, b: f64) -> f64 {
    if b <= a {
        return f64::NEG_INFINITY;
    }
    if a == f64::NEG_INFINITY {
        return ln_normal_cdf(b);
    }
    if b == f64::INFINITY {
        return ln_normal_cdf(-a);
    }
    if b <= 0.0 {
        let lb = ln_normal_cdf(b);
        lb + ln_one_minus_exp(ln_normal_cdf(a) - lb)
    } else if a >= 0.0 {
        let la = ln_normal_cdf(-a);
        la + ln_one_minus_exp(ln_normal_cdf(-b) - la)
    } else {
        (-(normal_cdf(a) + normal_cdf(-b))).ln_1p()
    }
}

/// ln(1 - e^x) for x ≤ 0.
pub fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// ln Σ exp(xs), ignoring -∞ entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
