//! W₂(|v|²γ, γ) in one dimension through the quantile coupling.

use super::window;
use crate::error::{invalid, Error, Result};
use crate::probes::{Mode, ProbeFunction};
use crate::quad::kronrod::{integrate_vec, kronrod15, pairwise_sum};
use crate::quad::special::{ln_normal_pdf, normal_cdf};

const CELL: f64 = 0.05;
const BISECT_TOL: f64 = 1e-10;

struct CdfTable<'a> {
    probe: &'a ProbeFunction,
    edges: Vec<f64>,
    /// mass strictly left of edges[i]
    left: Vec<f64>,
    /// mass right of edges[i]
    right: Vec<f64>,
    total: f64,
}

impl<'a> CdfTable<'a> {
    fn new(probe: &'a ProbeFunction) -> Result<Self> {
        let pts = window(probe)?;
        let mut edges = vec![pts[0]];
        for w in pts.windows(2) {
            let m = ((w[1] - w[0]) / CELL).ceil().max(1.0) as usize;
            for j in 1..=m {
                edges.push(if j == m { w[1] } else { w[0] + (w[1] - w[0]) * j as f64 / m as f64 });
            }
        }
        let density = |x: f64| (2.0 * probe.jet(x).ln_abs() + probe.ln_weight(x)).exp();
        let masses: Vec<f64> = edges.windows(2).map(|w| integrate_vec(|x| [density(x)], &[w[0], w[1]], [1e-18], 64).value[0]).collect();
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::NoConvergence("CDF table is not monotone".into()));
        }
        let mut left = Vec::with_capacity(edges.len());
        let mut acc = 0.0;
        left.push(0.0);
        for m in &masses {
            acc += m;
            left.push(acc);
        }
        let mut right = vec![0.0; edges.len()];
        let mut acc = 0.0;
        for i in (0..masses.len()).rev() {
            acc += masses[i];
            right[i] = acc;
        }
        let total = pairwise_sum(&masses);
        Ok(Self { probe, edges, left, right, total })
    }

    fn partial(&self, a: f64, x: f64) -> f64 {
        kronrod15(|t| (2.0 * self.probe.jet(t).ln_abs() + self.probe.ln_weight(t)).exp(), a, x)
    }

    /// x with F(x) = u·total (lower = true) or 1 - F(x) = u·total (lower = false).
    fn quantile(&self, u: f64, lower: bool) -> f64 {
        let target = u * self.total;
        let n = self.edges.len() - 1;
        let cell = if lower {
            self.left.partition_point(|&c| c <= target).saturating_sub(1).min(n - 1)
        } else {
            self.right.partition_point(|&c| c >= target).saturating_sub(1).min(n - 1)
        };
        let (a, b) = (self.edges[cell], self.edges[cell + 1]);
        let (mut lo, mut hi) = (a, b);
        while hi - lo > BISECT_TOL {
            let mid = 0.5 * (lo + hi);
            let inside = self.partial(a, mid);
            let below = if lower { self.left[cell] + inside < target } else { self.right[cell] - inside > target };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// W₂ between |v|²γ and γ for a 1-D Gaussian-mode probe with ‖v‖ = 1.
pub fn w2_distance_1d(probe: &ProbeFunction) -> Result<f64> {
    if probe.dim != 1 || probe.mode != Mode::Gaussian || !probe.is_line() {
        return Err(invalid("W₂ needs a one-dimensional Gaussian-mode probe"));
    }
    let table = CdfTable::new(probe)?;
    if (table.total - 1.0).abs() > 1e-8 {
        return Err(invalid(format!("W₂ needs ‖v‖² = 1, got {}", table.total)));
    }
    let integrand = |z: f64| {
        let w = ln_normal_pdf(z).exp();
        if w == 0.0 {
            return [0.0];
        }
        let q = if z <= 0.0 { table.quantile(normal_cdf(z), true) } else { table.quantile(normal_cdf(-z), false) };
        [(q - z).powi(2) * w]
    };
    let r = integrate_vec(integrand, &[f64::NEG_INFINITY, 0.0, f64::INFINITY], [1e-10], 4000);
    if !r.converged {
        return Err(Error::NoConvergence("quantile integral".into()));
    }
    Ok(r.value[0].max(0.0).sqrt())
}
