//! Closed-form integrals of polynomial × exp(quadratic) over intervals, via Φ.

use super::special::{ln_normal_interval, ln_normal_pdf, LN_2PI};
use serde::{Deserialize, Serialize};

/// q(x) = c0 + c1·x + c2·x².
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Quadratic {
    pub const ZERO: Quadratic = Quadratic { c0: 0.0, c1: 0.0, c2: 0.0 };

    pub fn new(c0: f64, c1: f64, c2: f64) -> Self {
        Self { c0, c1, c2 }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.c0 + x * (self.c1 + x * self.c2)
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        self.c1 + 2.0 * self.c2 * x
    }

    /// x ↦ q(s·x + o).
    pub fn compose_affine(&self, s: f64, o: f64) -> Self {
        Self { c0: self.eval(o), c1: s * (self.c1 + 2.0 * self.c2 * o), c2: self.c2 * s * s }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { c0: self.c0 + o.c0, c1: self.c1 + o.c1, c2: self.c2 + o.c2 }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { c0: self.c0 * k, c1: self.c1 * k, c2: self.c2 * k }
    }
}

/// Polynomial helpers on ascending coefficient vectors.
pub mod poly {
    pub fn eval(p: &[f64], x: f64) -> f64 {
        p.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn deriv(p: &[f64]) -> Vec<f64> {
        if p.len() <= 1 {
            return vec![0.0];
        }
        p.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
    }

    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        if a.is_empty() || b.is_empty() {
            return vec![0.0];
        }
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = a.len().max(b.len());
        (0..n).map(|i| a.get(i).unwrap_or(&0.0) + b.get(i).unwrap_or(&0.0)).collect()
    }

    pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
        a.iter().map(|c| c * k).collect()
    }

    /// x ↦ p(s·x + o).
    pub fn compose_affine(p: &[f64], s: f64, o: f64) -> Vec<f64> {
        let lin = [o, s];
        let mut out = vec![0.0];
        for c in p.iter().rev() {
            out = mul(&out, &lin);
            out[0] += c;
        }
        out
    }

    pub fn is_zero(p: &[f64]) -> bool {
        p.iter().all(|&c| c == 0.0)
    }
}

/// ∫_a^b p(x) exp(q(x)) dx for q with negative leading coefficient.
///
/// Returns `None` when q is not strictly concave. Endpoints may be infinite.
pub fn poly_exp_integral(p: &[f64], q: &Quadratic, a: f64, b: f64) -> Option<f64> {
    if !(q.c2 < 0.0) {
        return None;
    }
    if !(b > a) || poly::is_zero(p) {
        return Some(0.0);
    }
    let big_a = -q.c2;
    let mu = q.c1 / (2.0 * big_a);
    let sigma = (0.5 / big_a).sqrt();
    let ln_peak = q.c0 + q.c1 * q.c1 / (4.0 * big_a);
    let alpha = (a - mu) / sigma;
    let beta = (b - mu) / sigma;
    let ln_z = ln_normal_interval(alpha, beta);
    if ln_z == f64::NEG_INFINITY {
        return Some(0.0);
    }
    let lam = |z: f64| {
        if z.is_finite() {
            (ln_normal_pdf(z) - ln_z).exp()
        } else {
            0.0
        }
    };
    let (la, lb) = (lam(alpha), lam(beta));
    let deg = p.len() - 1;
    // normalized truncated-normal moments E[z^k | α < z < β]
    let mut m = vec![0.0; deg + 1];
    m[0] = 1.0;
    if deg >= 1 {
        m[1] = la - lb;
    }
    for k in 2..=deg {
        let pa = if alpha.is_finite() { alpha.powi(k as i32 - 1) * la } else { 0.0 };
        let pb = if beta.is_finite() { beta.powi(k as i32 - 1) * lb } else { 0.0 };
        m[k] = (k as f64 - 1.0) * m[k - 2] + pa - pb;
    }
    let shifted = poly::compose_affine(p, sigma, mu);
    let s: f64 = shifted.iter().zip(&m).map(|(c, mk)| c * mk).sum();
    let ln_pref = ln_peak + 0.5 * LN_2PI + sigma.ln() + ln_z;
    Some(s * ln_pref.exp())
}
