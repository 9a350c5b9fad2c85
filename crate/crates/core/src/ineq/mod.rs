//! Log-Sobolev inequalities and their improved and stability forms as named bound checks.

mod battery;
mod checks;

pub use battery::{entry_checks, run_battery, standard_battery, to_csv, BatteryEntry, BatteryOptions, BatterySummary};
pub use checks::*;

use crate::error::{invalid, Result};
use crate::functionals::{report_with, Estimate, FunctionalReport, ReportOptions};
use crate::probes::{make_gns_optimizer, ProbeFunction};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Allowed negative margin: base + factor × propagated quadrature error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub base: f64,
    pub factor: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Self { base: 1e-7, factor: 10.0 }
    }
}

impl Slack {
    /// A fixed tolerance that ignores quadrature error.
    pub fn fixed(tol: f64) -> Self {
        Self { base: tol, factor: 0.0 }
    }

    pub fn tolerance(&self, err: f64) -> f64 {
        self.base + self.factor * err
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

/// Direction of an inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
        }
    }
}

/// One inequality instance, lhs ≥ rhs or lhs ≤ rhs up to the tolerance; margin is positive when it holds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub probe: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub status: Status,
    pub note: Option<String>,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundCheck {
    pub fn new(name: impl Into<String>, probe: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::with_relation(name, probe, lhs, Relation::AtLeast, rhs, tolerance)
    }

    /// lhs ≤ rhs, margin = rhs - lhs.
    pub fn at_most(name: impl Into<String>, probe: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::with_relation(name, probe, lhs, Relation::AtMost, rhs, tolerance)
    }

    pub fn with_relation(name: impl Into<String>, probe: &str, lhs: f64, relation: Relation, rhs: f64, tolerance: f64) -> Self {
        let margin = match relation {
            Relation::AtLeast => lhs - rhs,
            Relation::AtMost => rhs - lhs,
        };
        let passed = margin >= -tolerance;
        Self {
            name: name.into(),
            probe: probe.to_string(),
            lhs,
            relation,
            rhs,
            margin,
            tolerance,
            passed,
            status: if passed { Status::Pass } else { Status::Fail },
            note: None,
            inputs: BTreeMap::new(),
        }
    }

    pub fn skipped(name: impl Into<String>, probe: &str, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            probe: probe.to_string(),
            lhs: f64::NAN,
            relation: Relation::AtLeast,
            rhs: f64::NAN,
            margin: f64::NAN,
            tolerance: f64::NAN,
            passed: false,
            status: Status::Skipped,
            note: Some(reason.into()),
            inputs: BTreeMap::new(),
        }
    }

    pub fn with_input(mut self, key: &str, value: f64) -> Self {
        self.inputs.insert(key.to_string(), value);
        self
    }

    /// Keeps both sides but marks the check as not applicable.
    pub fn mark_skipped(mut self, reason: impl Into<String>) -> Self {
        self.status = Status::Skipped;
        self.passed = false;
        self.note = Some(reason.into());
        self
    }

    pub fn is_failure(&self) -> bool {
        self.status == Status::Fail
    }
}

/// Parameters shared by the bound checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub d: usize,
    pub lambda: f64,
    pub p: f64,
    pub c_gns: Option<f64>,
    pub c_p: f64,
    pub t: f64,
    pub slack: Slack,
}

impl BoundParams {
    pub fn new(d: usize) -> Self {
        let p_max = if d >= 3 { 2.0 * d as f64 / (d as f64 - 2.0) } else { f64::INFINITY };
        Self { d, lambda: 1.0, p: p_max.min(4.0), c_gns: None, c_p: 1.0, t: 0.0, slack: Slack::default() }
    }

    /// θ = d(p-2)/(2p).
    pub fn theta(&self) -> f64 {
        self.d as f64 * (self.p - 2.0) / (2.0 * self.p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d must be positive"));
        }
        if !(self.lambda > 0.0) {
            return Err(invalid("λ must be positive"));
        }
        let p_max = if self.d >= 3 { 2.0 * self.d as f64 / (self.d as f64 - 2.0) } else { f64::INFINITY };
        if !(self.p > 2.0 && self.p <= p_max) {
            return Err(invalid(format!("p must lie in (2, {p_max}]")));
        }
        if let Some(c) = self.c_gns {
            if !(c > 0.0) {
                return Err(invalid("C_GNS must be positive"));
            }
        }
        if !(self.c_p > 0.0 && self.c_p <= 1.0) {
            return Err(invalid("C_P must lie in (0, 1]"));
        }
        if !(self.t >= 0.0) {
            return Err(invalid("t must be nonnegative"));
        }
        if !(self.slack.base >= 0.0 && self.slack.factor >= 0.0) {
            return Err(invalid("tolerances must be nonnegative"));
        }
        Ok(())
    }
}

/// A probe together with its functional report.
#[derive(Clone, Debug)]
pub struct Subject {
    pub probe: ProbeFunction,
    pub report: FunctionalReport,
}

impl Subject {
    pub fn new(probe: ProbeFunction) -> Result<Self> {
        let report = report_with(&probe, &ReportOptions::default())?;
        Ok(Self { probe, report })
    }

    pub fn label(&self) -> &str {
        &self.probe.label
    }
}

/// Σ |c|·error over the terms of a linear combination.
pub(crate) fn propagate(terms: &[(f64, Estimate)]) -> f64 {
    terms.iter().map(|(c, e)| c.abs() * e.error).sum()
}

fn series_tail(x: f64, coef: impl Fn(usize) -> f64, from: usize, to: usize) -> f64 {
    (from..=to).rev().fold(0.0, |acc, k| acc * x + coef(k)) * x.powi(from as i32)
}

/// φ(t) = (d/4)[e^{2t/d} - 1 - 2t/d].
pub fn phi(t: f64, d: usize) -> f64 {
    let d = d as f64;
    let x = 2.0 * t / d;
    let core = if x.abs() < 1e-3 { series_tail(x, |k| 1.0 / (1..=k).map(|j| j as f64).product::<f64>(), 2, 8) } else { x.exp_m1() - x };
    0.25 * d * core
}

/// φ''(t) = (1/d) e^{2t/d}.
pub fn phi_second(t: f64, d: usize) -> f64 {
    let d = d as f64;
    (2.0 * t / d).exp() / d
}

/// Ψ(s) = s - (d/4) log(1 + 4s/d).
pub fn psi(s: f64, d: usize) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(invalid("Ψ needs s ≥ 0"));
    }
    let d = d as f64;
    let y = 4.0 * s / d;
    let core = if y < 1e-3 { series_tail(y, |k| if k % 2 == 0 { 1.0 / k as f64 } else { -1.0 / k as f64 }, 2, 10) } else { y - y.ln_1p() };
    Ok(0.25 * d * core)
}

/// C_P(t) = C_P / (C_P + (1 - C_P) e^{-2t}).
pub fn poincare_evolution(c_p: f64, t: f64) -> Result<f64> {
    if !(c_p > 0.0 && c_p <= 1.0) {
        return Err(invalid("C_P must lie in (0, 1]"));
    }
    if !(t >= 0.0) {
        return Err(invalid("t must be nonnegative"));
    }
    Ok(c_p / (c_p + (1.0 - c_p) * (-2.0 * t).exp()))
}

/// (C_P² - C_P - C_P log C_P)/(1 - C_P)², equal to ½ at C_P = 1.
pub fn fil_factor(c_p: f64) -> Result<f64> {
    if !(c_p > 0.0 && c_p <= 1.0) {
        return Err(invalid("C_P must lie in (0, 1]"));
    }
    let x = 1.0 - c_p;
    if x < 0.05 {
        // ½ - Σ_{k≥3} x^{k-2}/(k(k-1))
        let tail: f64 = (3..40).rev().fold(0.0, |acc, k| acc * x + 1.0 / (k * (k - 1)) as f64) * x;
        return Ok(0.5 - tail);
    }
    Ok((c_p * c_p - c_p - c_p * c_p.ln()) / (x * x))
}

/// The stab0 bound inverted with constant 8: 8√d i²/(d + 8i)^{3/2}.
pub fn cor_stab_rhs(i: f64, d: usize) -> f64 {
    let d = d as f64;
    8.0 * d.sqrt() * i * i / (d + 8.0 * i).powf(1.5)
}

/// What stab0 actually yields for δ: (4i + d - √(d(d+8i)))/4 ≥ 2√d i²/(d+8i)^{3/2}.
pub fn cor_stab_rhs_sharp(i: f64, d: usize) -> f64 {
    let d = d as f64;
    let r = (d * (d + 8.0 * i)).sqrt();
    4.0 * i * i / (4.0 * i + d + r)
}

/// sup_{t>1} t log t / t^p = 1/((p-1)e).
pub fn prop1_constant(p: f64) -> f64 {
    1.0 / ((p - 1.0) * std::f64::consts::E)
}

/// λ = d‖u‖²/∫|x|²|u|².
pub fn optimal_lambda(report: &FunctionalReport) -> Result<f64> {
    if report.mode != crate::probes::Mode::Euclidean {
        return Err(crate::error::Error::ModeMismatch { expected: "euclidean", got: report.mode.name() });
    }
    if report.is_divergent("second_moment") || !report.second_moment.value.is_finite() {
        return Err(crate::error::Error::Divergent("second moment".into()));
    }
    Ok(report.dim as f64 * report.l2_norm2.value / report.second_moment.value)
}

/// λ maximizing the rhs of the λ-form: e^{-1-2S/d}/(2π) with S the relative entropy per unit mass.
pub fn entropy_optimal_lambda(report: &FunctionalReport) -> f64 {
    let d = report.dim as f64;
    let s = report.entropy.value / report.l2_norm2.value;
    (-1.0 - 2.0 * s / d).exp() / (2.0 * std::f64::consts::PI)
}

/// Sharp C_GNS(1, p), attained by sech^{2/(p-2)}; other dimensions must be supplied.
pub fn c_gns_default(d: usize, p: f64) -> Result<f64> {
    if d != 1 {
        return Err(invalid("C_GNS must be supplied for d ≥ 2"));
    }
    let u = make_gns_optimizer(p, 1.0)?;
    let opts = ReportOptions::default();
    let r = report_with(&u, &opts)?;
    let lp = crate::functionals::lp_integral(&u, p, &opts)?;
    let theta = (p - 2.0) / (2.0 * p);
    Ok(r.fisher.value.sqrt().powf(theta) * r.l2_norm2.value.sqrt().powf(1.0 - theta) / lp.value.powf(1.0 / p))
}
