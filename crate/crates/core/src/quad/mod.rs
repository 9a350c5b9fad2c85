//! Integration against γ and Lebesgue measure, and the special functions behind the closed forms.

pub mod closed;
pub mod hermite;
pub mod kronrod;
pub mod special;

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

pub use closed::{poly, poly_exp_integral, Quadratic};
pub use special::{ln_normal_cdf, normal_cdf, normal_pdf};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_GH_ORDER: usize = 200;
pub const DEFAULT_MAX_PANELS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    GaussHermite,
    AdaptivePiecewise,
    Radial,
}

/// A quadrature recipe. Gauss–Hermite rules carry their nodes; adaptive rules
/// carry a tolerance and a panel budget.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub tolerance: f64,
    pub max_panels: usize,
}

impl QuadratureRule {
    pub fn gauss_hermite(order: usize) -> Self {
        let (nodes, weights) = hermite::gauss_hermite(order);
        Self { kind: RuleKind::GaussHermite, nodes, weights, tolerance: DEFAULT_TOL, max_panels: 1 }
    }

    pub fn adaptive(tolerance: f64) -> Self {
        Self { kind: RuleKind::AdaptivePiecewise, nodes: Vec::new(), weights: Vec::new(), tolerance, max_panels: DEFAULT_MAX_PANELS }
    }

    pub fn radial(tolerance: f64) -> Self {
        Self { kind: RuleKind::Radial, ..Self::adaptive(tolerance) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(invalid("quadrature tolerance must be positive"));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(invalid("quadrature weights must be positive"));
        }
        if self.nodes.windows(2).any(|p| p[0] >= p[1]) {
            return Err(invalid("quadrature nodes must be sorted"));
        }
        Ok(())
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::adaptive(DEFAULT_TOL)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

fn with_infinite_ends(breakpoints: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len() + 2);
    out.push(f64::NEG_INFINITY);
    out.extend(pts);
    out.push(f64::INFINITY);
    out
}

/// ∫ f dγ on ℝ, honouring breakpoints.
pub fn integrate_gaussian<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], rule: &QuadratureRule) -> Result<IntegralResult> {
    rule.validate()?;
    match rule.kind {
        RuleKind::GaussHermite => {
            let value: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * f(x)).sum();
            let m = rule.nodes.len();
            let (hx, hw) = hermite::gauss_hermite((m / 2).max(1));
            let coarse: f64 = hx.iter().zip(&hw).map(|(&x, &w)| w * f(x)).sum();
            let err = (value - coarse).abs();
            Ok(IntegralResult { value, error_estimate: err, converged: err <= rule.tolerance })
        }
        _ => {
            let pts = with_infinite_ends(breakpoints);
            let g = |x: f64| {
                let w = special::ln_normal_pdf(x).exp();
                if w == 0.0 {
                    [0.0]
                } else {
                    [f(x) * w]
                }
            };
            let r = kronrod::integrate_vec(g, &pts, [rule.tolerance], rule.max_panels);
            Ok(IntegralResult { value: r.value[0], error_estimate: r.error[0], converged: r.converged })
        }
    }
}

/// Result of integrating over growing truncation domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedIntegral {
    pub result: IntegralResult,
    /// (radius, value on the truncated domain)
    pub partials: Vec<(f64, f64)>,
    /// every successive difference has the same sign
    pub monotone: bool,
}

/// ∫ f dx over [-R, R] (or [0, R] for radial rules) for each R in the schedule.
///
/// Converged once two successive truncations agree to the rule tolerance; otherwise
/// the last partial is returned with `converged = false`.
pub fn integrate_lebesgue<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], rule: &QuadratureRule, radius_schedule: &[f64]) -> Result<TruncatedIntegral> {
    rule.validate()?;
    if radius_schedule.is_empty() || radius_schedule.windows(2).any(|w| w[0] >= w[1]) || radius_schedule[0] <= 0.0 {
        return Err(invalid("radius schedule must be positive and increasing"));
    }
    let radial = rule.kind == RuleKind::Radial;
    let mut partials = Vec::new();
    let mut err_total = 0.0;
    let mut converged = false;
    for &r in radius_schedule {
        let lo = if radial { 0.0 } else { -r };
        let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > lo && x < r).collect();
        pts.push(lo);
        pts.push(r);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let res = kronrod::integrate_vec(|x| [f(x)], &pts, [rule.tolerance], rule.max_panels);
        err_total = res.error[0];
        if let Some(&(_, prev)) = partials.last() {
            let prev: f64 = prev;
            if (res.value[0] - prev).abs() <= rule.tolerance && res.converged {
                converged = true;
            }
        }
        partials.push((r, res.value[0]));
        if converged {
            break;
        }
    }
    let diffs: Vec<f64> = partials.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let monotone = diffs.iter().all(|&d| d >= 0.0) || diffs.iter().all(|&d| d <= 0.0);
    let value = partials.last().map(|p| p.1).unwrap_or(0.0);
    Ok(TruncatedIntegral { result: IntegralResult { value, error_estimate: err_total, converged }, partials, monotone })
}
