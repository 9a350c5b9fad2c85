use super::{c_gns_default, cor_stab_rhs, cor_stab_rhs_sharp, optimal_lambda, phi, propagate, BoundCheck, BoundParams, Subject};
use crate::error::{invalid, Error, Result};
use crate::functionals::{ckp_lower_bound, gaussian_mean, lp_integral, Estimate, ReportOptions};
use crate::probes::{Mode, ProbeFunction};
use crate::quad::special::LN_2PI;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

const UNIT_MASS_TOL: f64 = 1e-8;
/// Slack on the M ≤ d precondition.
pub const MOMENT_SLACK: f64 = 1e-9;

/// The four forms of the inequality, written without normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsiForm {
    G,
    E,
    ELambda,
    S,
}

impl LsiForm {
    pub fn name(self) -> &'static str {
        match self {
            LsiForm::G => "lsi_g",
            LsiForm::E => "lsi_e",
            LsiForm::ELambda => "lsi_e_lambda",
            LsiForm::S => "lsi_s",
        }
    }

    fn mode(self) -> Mode {
        match self {
            LsiForm::G => Mode::Gaussian,
            _ => Mode::Euclidean,
        }
    }
}

fn require_mode(s: &Subject, mode: Mode) -> Result<()> {
    if s.probe.mode != mode {
        return Err(Error::ModeMismatch { expected: mode.name(), got: s.probe.mode.name() });
    }
    Ok(())
}

fn require_unit(s: &Subject) -> Result<()> {
    let m = s.report.l2_norm2.value;
    if (m - 1.0).abs() > UNIT_MASS_TOL {
        return Err(Error::Inadmissible(format!("{} has squared norm {m}, expected 1", s.label())));
    }
    Ok(())
}

fn entropy_skip(name: &str, s: &Subject) -> Option<BoundCheck> {
    (s.report.is_divergent("entropy") || !s.report.entropy.value.is_finite()).then(|| BoundCheck::skipped(name, s.label(), "entropy diverges"))
}

fn moment_skip(name: &str, s: &Subject) -> Option<BoundCheck> {
    (s.report.is_divergent("second_moment") || !s.report.second_moment.value.is_finite())
        .then(|| BoundCheck::skipped(name, s.label(), "second moment diverges"))
}

fn ln_2pi_e2() -> f64 {
    LN_2PI + 2.0
}

/// ‖∇f‖² against the rhs of the chosen form.
pub fn check_lsi(s: &Subject, form: LsiForm, params: &BoundParams) -> Result<BoundCheck> {
    require_mode(s, form.mode())?;
    let name = form.name();
    if let Some(skip) = entropy_skip(name, s) {
        return Ok(skip);
    }
    let r = &s.report;
    let d = r.dim as f64;
    let (i, ent, m) = (r.fisher, r.entropy, r.l2_norm2);
    let (rhs, err) = match form {
        LsiForm::G => (0.5 * ent.value, propagate(&[(1.0, i), (0.5, ent)])),
        LsiForm::E => {
            let c = 0.25 * d * ln_2pi_e2();
            (0.5 * ent.value + c * m.value, propagate(&[(1.0, i), (0.5, ent), (c, m)]))
        }
        LsiForm::ELambda => {
            let l = params.lambda;
            let c = 0.25 * d / l * (ln_2pi_e2() + l.ln());
            (0.5 / l * ent.value + c * m.value, propagate(&[(1.0, i), (0.5 / l, ent), (c, m)]))
        }
        LsiForm::S => {
            let rhs = 0.5 * PI * d * E * m.value * (2.0 * ent.value / (d * m.value)).exp();
            (rhs, propagate(&[(1.0, i), (2.0 * rhs / (d * m.value), ent), (rhs / m.value, m)]))
        }
    };
    let mut c = BoundCheck::new(name, s.label(), i.value, rhs, params.slack.tolerance(err));
    if form == LsiForm::ELambda {
        c = c.with_input("lambda", params.lambda);
    }
    Ok(c)
}

/// Entropy against ¼(∫|v - 1|dγ)² for nonnegative unit probes.
pub fn check_ckp(s: &Subject, params: &BoundParams) -> Result<BoundCheck> {
    require_mode(s, Mode::Gaussian)?;
    require_unit(s)?;
    let name = "ckp";
    if s.report.negative_mass.value > 0.0 {
        return Ok(BoundCheck::skipped(name, s.label(), "probe takes negative values"));
    }
    if s.report.l1_from_one.is_none() {
        return Ok(BoundCheck::skipped(name, s.label(), "∫|v - 1|dγ unavailable for this lift"));
    }
    let rhs = ckp_lower_bound(&s.report)?;
    let l1 = s.report.l1_from_one.expect("checked above");
    let err = propagate(&[(1.0, s.report.entropy), (0.5 * l1.value, l1)]);
    Ok(BoundCheck::new(name, s.label(), s.report.entropy.value, rhs, params.slack.tolerance(err)))
}

/// δ[v] ≥ φ(𝖾 + d/2 - M/2), with rhs 0 when M diverges.
pub fn check_improved_gaussian(s: &Subject, params: &BoundParams) -> Result<BoundCheck> {
    require_mode(s, Mode::Gaussian)?;
    require_unit(s)?;
    let name = "improved_gaussian";
    if let Some(skip) = entropy_skip(name, s) {
        return Ok(skip);
    }
    let r = &s.report;
    let d = r.dim as f64;
    if moment_skip(name, s).is_some() {
        return Ok(BoundCheck::new(name, s.label(), r.deficit.value, 0.0, params.slack.tolerance(r.deficit.error)).with_input("t", f64::INFINITY));
    }
    let t = r.entropy.value + 0.5 * d - 0.5 * r.second_moment.value;
    let slope = 0.5 * (2.0 * t / r.dim as f64).exp_m1();
    let err = propagate(&[(1.0, r.deficit), (slope, r.entropy), (0.5 * slope, r.second_moment)]);
    Ok(BoundCheck::new(name, s.label(), r.deficit.value, phi(t, r.dim), params.slack.tolerance(err)).with_input("t", t))
}

fn moment_precondition(c: BoundCheck, s: &Subject) -> BoundCheck {
    let (m, d) = (s.report.second_moment.value, s.report.dim as f64);
    if m > d + MOMENT_SLACK {
        c.mark_skipped(format!("second moment {m} exceeds d"))
    } else {
        c
    }
}

/// δ ≥ 𝖾²/(2d) + (d - M)²/(8d) when M ≤ d.
pub fn check_stab0(s: &Subject, params: &BoundParams) -> Result<BoundCheck> {
    require_mode(s, Mode::Gaussian)?;
    require_unit(s)?;
    let name = "stab0";
    if let Some(skip) = entropy_skip(name, s).or_else(|| moment_skip(name, s)) {
        return Ok(skip);
    }
    let r = &s.report;
    let d = r.dim as f64;
    let (e, m) = (r.entropy.value, r.second_moment.value);
    let rhs = e * e / (2.0 * d) + (d - m).powi(2) / (8.0 * d);
    let err = propagate(&[(1.0, r.deficit), (e / d, r.entropy), ((d - m) / (4.0 * d), r.second_moment)]);
    let c = BoundCheck::new(name, s.label(), r.deficit.value, rhs, params.slack.tolerance(err)).with_input("second_moment", m);
    Ok(moment_precondition(c, s))
}

/// δ ≥ cor_stab_rhs(𝗂, d) when M ≤ d.
pub fn check_cor_stab(s: &Subject, params: &BoundParams) -> Result<BoundCheck> {
    cor_stab_with(s, params, "cor_stab", cor_stab_rhs)
}

/// δ ≥ cor_stab_rhs_sharp(𝗂, d) when M ≤ d.
pub fn check_cor_stab_sharp(s: &Subject, params: &BoundParams) -> Result<BoundCheck> {
    cor_stab_with(s, params, "cor_stab_sharp", cor_stab_rhs_sharp)
}

fn cor_stab_with(s: &Subject, params: &BoundParams, name: &str, bound: fn(f64, usize) -> f64) -> Result<BoundCheck> {
    require_mode(s, Mode::Gaussian)?;
    require_unit(s)?;
    if let Some(skip) = entropy_skip(name, s).or_else(|| moment_skip(name, s)) {
        return Ok(skip);
    }
    let r = &s.report;
    let i = r.fisher.value;
    let rhs = bound(i, r.dim);
    let slope = (bound(i * (1.0 + 1e-6) + 1e-12, r.dim) - rhs) / (i * 1e-6 + 1e-12);
    let err = propagate(&[(1.0, r.deficit), (slope, r.fisher)]);
    let c = BoundCheck::new(name, s.label(), r.deficit.value, rhs, params.slack.tolerance(err)).with_input("fisher", i);
    Ok(moment_precondition(c, s))
}

/// The λ-form at λ = d/M with the Gaussian improvement pulled back:
/// (M/d)𝗂 - S/2 - (d/4)log(2πe²M/d) ≥ φ(S + (d/2)log(2πeM/d)).
pub fn check_stab_e(s: &Subject, params: &BoundParams) -> Result<BoundCheck> {
    require_mode(s, Mode::Euclidean)?;
    require_unit(s)?;
    let name = "stab_e";
    if let Some(skip) = entropy_skip(name, s).or_else(|| moment_skip(name, s)) {
        return Ok(skip);
    }
    let r = &s.report;
    let d = r.dim as f64;
    let (i, ent, m) = (r.fisher.value, r.entropy.value, r.second_moment.value);
    let lhs = m / d * i - 0.5 * ent - 0.25 * d * (ln_2pi_e2() + (m / d).ln());
    let t = ent + 0.5 * d * (LN_2PI + 1.0 + (m / d).ln());
    let slope = 0.5 * (2.0 * t / d).exp_m1();
    let err = propagate(&[(m / d, r.fisher), (0.5 + slope, r.entropy), ((i / d - 0.25 * d / m).abs() + slope * 0.5 * d / m, r.second_moment)]);
    Ok(BoundCheck::new(name, s.label(), lhs, phi(t, r.dim), params.slack.tolerance(err)).with_input("lambda", optimal_lambda(r)?).with_input("t", t))
}

/// u ↦ λ^{d/2}u(λ·) with λ chosen so that ∫u²log u² = 0.
pub fn zero_entropy_rescale(s: &Subject) -> Result<Subject> {
    require_mode(s, Mode::Euclidean)?;
    if entropy_skip("", s).is_some() {
        return Err(Error::Divergent("entropy".into()));
    }
    let r = &s.report;
    let k = (-r.entropy_raw.value / (r.dim as f64 * r.l2_norm2.value)).exp();
    Subject::new(s.probe.dilate(k)?)
}

/// ∫|u²log u²| ≤ 2(‖∇u‖^θ‖u‖^{1-θ})^p / ((p-1)e C_GNS^p) after rescaling to zero entropy.
pub fn check_prop1(s: &Subject, params: &BoundParams) -> Result<BoundCheck> {
    prop1_with(s, params, "prop1", 2.0 / (params.p - 1.0))
}

/// The same bound with the pointwise constant sup_{t>1} t log t/t^{p/2} = 2/((p-2)e):
/// ∫|u²log u²| ≤ 4(‖∇u‖^θ‖u‖^{1-θ})^p / ((p-2)e C_GNS^p).
pub fn check_prop1_sharp(s: &Subject, params: &BoundParams) -> Result<BoundCheck> {
    prop1_with(s, params, "prop1_sharp", 4.0 / (params.p - 2.0))
}

fn prop1_with(s: &Subject, params: &BoundParams, name: &str, coef: f64) -> Result<BoundCheck> {
    require_mode(s, Mode::Euclidean)?;
    params.validate()?;
    if params.d != s.report.dim {
        return Err(invalid("parameter dimension differs from the probe's"));
    }
    if let Some(skip) = entropy_skip(name, s) {
        return Ok(skip);
    }
    let c_gns = match params.c_gns {
        Some(c) => c,
        None => c_gns_default(params.d, params.p)?,
    };
    let z = zero_entropy_rescale(s)?;
    let r = &z.report;
    if r.entropy_raw.value.abs() > 1e-8 {
        return Err(Error::Inadmissible(format!("entropy after rescaling is {}", r.entropy_raw.value)));
    }
    let (p, theta) = (params.p, params.theta());
    let gns = r.fisher.value.sqrt().powf(theta) * r.l2_norm2.value.sqrt().powf(1.0 - theta);
    let rhs = coef * gns.powf(p) / (E * c_gns.powf(p));
    let err = propagate(&[(1.0, r.abs_entropy), (rhs * p * theta / (2.0 * r.fisher.value), r.fisher)]);
    Ok(BoundCheck::at_most(name, s.label(), r.abs_entropy.value, rhs, params.slack.tolerance(err)).with_input("p", p).with_input("c_gns", c_gns))
}

/// ∫|u²log u²| ≤ ∫u²(log u² + |x|²) + d log(2π)‖u‖² + 2/e.
pub fn check_prop2(s: &Subject, params: &BoundParams) -> Result<BoundCheck> {
    require_mode(s, Mode::Euclidean)?;
    let name = "prop2";
    if let Some(skip) = entropy_skip(name, s).or_else(|| moment_skip(name, s)) {
        return Ok(skip);
    }
    let r = &s.report;
    let d = r.dim as f64;
    let rhs = r.entropy_raw.value + r.second_moment.value + d * LN_2PI * r.l2_norm2.value + 2.0 / E;
    let err = propagate(&[(1.0, r.abs_entropy), (1.0, r.entropy_raw), (1.0, r.second_moment), (d * LN_2PI, r.l2_norm2)]);
    Ok(BoundCheck::at_most(name, s.label(), r.abs_entropy.value, rhs, params.slack.tolerance(err)))
}

/// ∫|v²log v²|dγ ≤ 2/e + 6𝗂 + d log(2πe²)‖v‖² + ‖v‖²log‖v‖².
pub fn check_cor24(s: &Subject, params: &BoundParams) -> Result<BoundCheck> {
    require_mode(s, Mode::Gaussian)?;
    let name = "cor24";
    if let Some(skip) = entropy_skip(name, s) {
        return Ok(skip);
    }
    let r = &s.report;
    let d = r.dim as f64;
    let m = r.l2_norm2.value;
    let rhs = 2.0 / E + 6.0 * r.fisher.value + d * ln_2pi_e2() * m + m * m.ln();
    let err = propagate(&[(1.0, r.abs_entropy), (6.0, r.fisher), (d * ln_2pi_e2() + 1.0 + m.ln(), r.l2_norm2)]);
    Ok(BoundCheck::at_most(name, s.label(), r.abs_entropy.value, rhs, params.slack.tolerance(err)))
}

/// ∫|x|²|v|²dγ ≤ 2(d+1)∫|∇v|²dγ for ∫v dγ = 0.
pub fn check_moment_bound(s: &Subject, params: &BoundParams) -> Result<BoundCheck> {
    require_mode(s, Mode::Gaussian)?;
    let name = "moment_bound";
    if let Some(skip) = moment_skip(name, s) {
        return Ok(skip);
    }
    let r = &s.report;
    let d = r.dim as f64;
    let lhs = 2.0 * (d + 1.0) * r.fisher.value;
    let err = propagate(&[(2.0 * (d + 1.0), r.fisher), (1.0, r.second_moment)]);
    let c = BoundCheck::new(name, s.label(), lhs, r.second_moment.value, params.slack.tolerance(err));
    let mean = if s.probe.is_line() { gaussian_mean(&s.probe, &ReportOptions::default())?.value } else { f64::NAN };
    Ok(if mean.abs() <= 1e-9 { c.with_input("mean", mean) } else { c.with_input("mean", mean).mark_skipped("∫v dγ ≠ 0") })
}

/// 𝗂 ≥ (‖v‖₂² - ‖v‖_p²)/(2 - p) for p ∈ [1, 2).
pub fn check_beckner(s: &Subject, p: f64, params: &BoundParams) -> Result<BoundCheck> {
    require_mode(s, Mode::Gaussian)?;
    if !(1.0..2.0).contains(&p) {
        return Err(invalid("Beckner exponent must lie in [1, 2)"));
    }
    let r = &s.report;
    let lp = lp_integral(&s.probe, p, &ReportOptions::default())?;
    let norm2 = lp.value.powf(2.0 / p);
    let rhs = (r.l2_norm2.value - norm2) / (2.0 - p);
    let dnorm = Estimate { value: 0.0, error: norm2 * 2.0 / p * lp.error / lp.value, converged: lp.converged };
    let err = propagate(&[(1.0, r.fisher), (1.0 / (2.0 - p), r.l2_norm2), (1.0 / (2.0 - p), dnorm)]);
    Ok(BoundCheck::new(format!("beckner(p={p})"), s.label(), r.fisher.value, rhs, params.slack.tolerance(err)).with_input("p", p))
}

/// Convenience for probes: builds the subject and runs the check.
pub fn check_probe<F>(probe: &ProbeFunction, f: F) -> Result<BoundCheck>
where
    F: FnOnce(&Subject) -> Result<BoundCheck>,
{
    f(&Subject::new(probe.clone())?)
}
