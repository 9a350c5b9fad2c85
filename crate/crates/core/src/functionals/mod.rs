//! Scalar functionals of probes: norms, moments, Fisher information, entropies and deficits.

mod w2;

pub use w2::w2_distance_1d;

use crate::error::{Error, Result};
use crate::probes::{march_tail, Jet, Lift, Mode, ProbeFunction, TailDescriptor};
use crate::quad::kronrod::{integrate_vec, VecIntegral};
use crate::quad::special::LN_2PI;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur};
use std::collections::BTreeMap;

/// Log-integrand drop at which tail windows are cut.
pub(crate) const TAIL_DEPTH: f64 = 75.0;
/// Truncation schedule in s = log r for algebraic radial tails.
pub const LOG_RADIUS_SCHEDULE: [f64; 5] = [4.0, 8.0, 16.0, 32.0, 64.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { tol: crate::quad::DEFAULT_TOL, max_panels: 20_000 }
    }
}

/// A value with its absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

impl Estimate {
    fn new(value: f64, error: f64, converged: bool) -> Self {
        Self { value, error, converged }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0, converged: true }
    }
}

/// Every functional of a probe, against γ (Gaussian mode) or dx (Euclidean mode).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub label: String,
    pub mode: Mode,
    pub dim: usize,
    /// ∫|f|²
    pub l2_norm2: Estimate,
    /// ∫|∇f|²
    pub fisher: Estimate,
    /// ∫|f|² log(|f|²/‖f‖²)
    pub entropy: Estimate,
    /// ∫|f|² log|f|²
    pub entropy_raw: Estimate,
    /// ∫ | |f|² log|f|² |
    pub abs_entropy: Estimate,
    /// ∫_{|f|<1} |f|² log(1/|f|²)
    pub entropy_below_one: Estimate,
    pub first_moment: Vec<f64>,
    pub first_moment_error: f64,
    /// ∫|x|²|f|²
    pub second_moment: Estimate,
    /// Gaussian: fisher - entropy/2; Euclidean: fisher - entropy/2 - (d/4) log(2πe²) ‖f‖²
    pub deficit: Estimate,
    /// ∫_{f<0} |f|²
    pub negative_mass: Estimate,
    /// ∫|v - 1| dγ, Gaussian mode with a separable lift only
    pub l1_from_one: Option<Estimate>,
    /// names of the fields whose integrals diverge
    pub divergent: Vec<String>,
    /// truncation partials (log radius, value) for divergent fields
    pub partials: BTreeMap<String, Vec<(f64, f64)>>,
}

impl FunctionalReport {
    pub fn converged(&self) -> bool {
        self.divergent.is_empty() && [self.l2_norm2, self.fisher, self.entropy, self.abs_entropy, self.second_moment].iter().all(|e| e.converged)
    }

    /// Largest error estimate among the main entries.
    pub fn max_error(&self) -> f64 {
        [self.l2_norm2, self.fisher, self.entropy, self.abs_entropy, self.second_moment, self.deficit]
            .iter()
            .map(|e| e.error)
            .fold(self.first_moment_error, f64::max)
    }

    pub fn is_divergent(&self, field: &str) -> bool {
        self.divergent.iter().any(|f| f == field)
    }
}

/// The d-1 orthogonal coordinates of a line lift: Σ log t² = α + βZ with Z ~ Gamma(k/2).
#[derive(Clone, Copy, Debug)]
pub(crate) struct Transverse {
    pub k: usize,
    pub tau2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mode: Mode,
}

impl Transverse {
    pub fn of(probe: &ProbeFunction) -> Self {
        let k = match probe.lift {
            Lift::Line { .. } => probe.dim - 1,
            Lift::Radial => 0,
        };
        let tau2 = probe.transverse_var();
        let h = k as f64 / 2.0;
        let (alpha, beta) = match probe.mode {
            Mode::Euclidean => (-h * (LN_2PI + tau2.ln()), -1.0),
            Mode::Gaussian => (-h * tau2.ln(), tau2 - 1.0),
        };
        Self { k, tau2, alpha, beta, mode: probe.mode }
    }

    fn h(&self) -> f64 {
        self.k as f64 / 2.0
    }

    /// E[α + βZ]
    pub fn mean(&self) -> f64 {
        if self.k == 0 {
            0.0
        } else {
            self.alpha + self.beta * self.h()
        }
    }

    /// E[(c + α + βZ) 1{c + α + βZ < 0}]
    pub fn neg_mean(&self, c: f64) -> f64 {
        if self.k == 0 {
            return c.min(0.0);
        }
        let c = c + self.alpha;
        let (b, h) = (self.beta, self.h());
        if b == 0.0 {
            c.min(0.0)
        } else if b < 0.0 {
            if c <= 0.0 {
                c + b * h
            } else {
                let z0 = -c / b;
                c * gamma_ur(h, z0) + b * h * gamma_ur(h + 1.0, z0)
            }
        } else if c >= 0.0 {
            0.0
        } else {
            let z0 = -c / b;
            c * gamma_lr(h, z0) + b * h * gamma_lr(h + 1.0, z0)
        }
    }

    /// E|c + α + βZ|
    pub fn abs_mean(&self, c: f64) -> f64 {
        c + self.mean() - 2.0 * self.neg_mean(c)
    }

    /// ∫ |t'|² per unit profile mass, summed over the k coordinates.
    pub fn fisher(&self) -> f64 {
        let k = self.k as f64;
        match self.mode {
            Mode::Euclidean => k / (4.0 * self.tau2),
            Mode::Gaussian => k * (self.tau2 - 1.0).powi(2) / (4.0 * self.tau2),
        }
    }

    pub fn second_moment(&self) -> f64 {
        self.k as f64 * self.tau2
    }

    /// ∫ |t|^p over the k coordinates, or None if it diverges.
    pub fn lp(&self, p: f64) -> Option<f64> {
        let k = self.k as f64;
        if self.k == 0 {
            return Some(1.0);
        }
        let one = match self.mode {
            Mode::Euclidean => {
                let t2 = self.tau2;
                (2.0 * std::f64::consts::PI * t2).powf(-p / 4.0) * (4.0 * std::f64::consts::PI * t2 / p).sqrt()
            }
            Mode::Gaussian => {
                let c = 1.0 + p * (1.0 / self.tau2 - 1.0) / 2.0;
                if c <= 0.0 {
                    return None;
                }
                self.tau2.powf(-p / 4.0) / c.sqrt()
            }
        };
        Some(one.powf(k))
    }
}

const NC: usize = 9;

/// [f², x f², x² f², f'², f²·log, f²·|log|, f²·log⁻, f²·1{f<0}, |f-1|] against the profile weight.
fn components(x: f64, jet: &Jet, ln_w: f64, tr: &Transverse, l1: bool) -> [f64; NC] {
    let mut out = [0.0; NC];
    if ln_w == f64::NEG_INFINITY {
        return out;
    }
    if l1 {
        let lf = jet.ln_abs();
        out[8] = if lf > 700.0 { (lf + ln_w).exp() } else { (jet.value() - 1.0).abs() * ln_w.exp() };
    }
    let l2 = 2.0 * jet.ln_abs();
    let ld = 2.0 * jet.ln_abs_deriv();
    out[3] = (ld + ln_w).exp();
    if l2 == f64::NEG_INFINITY {
        return out;
    }
    let base = (l2 + ln_w).exp();
    out[0] = base;
    out[1] = x * base;
    out[2] = x * x * base;
    out[4] = base * (l2 + tr.mean());
    out[5] = base * tr.abs_mean(l2);
    out[6] = base * tr.neg_mean(l2);
    out[7] = if jet.v < 0.0 { base } else { 0.0 };
    out
}

/// ln of a pointwise upper envelope of f² w (with polynomial slack) along a tail.
fn tail_envelope<'a>(probe: &'a ProbeFunction, tail: &TailDescriptor) -> Option<impl Fn(f64) -> f64 + 'a> {
    match *tail {
        TailDescriptor::ExpQuadratic { ln_amp, exponent, power } => Some(move |x: f64| {
            let ax = x.abs();
            2.0 * (ln_amp + exponent.eval(x) + power as f64 * ax.ln().max(0.0)) + probe.ln_weight(x) + 2.0 * ax.ln_1p() + 2.0 * exponent.deriv(x).abs().ln_1p()
        }),
        _ => None,
    }
}

/// Finite integration points: tail march, breakpoints, tail march.
pub(crate) fn window(probe: &ProbeFunction) -> Result<Vec<f64>> {
    let bps = probe.breakpoints();
    let radial = matches!(probe.lift, Lift::Radial);
    let lo = if radial { 0.0 } else { bps.first().copied().unwrap_or(0.0) };
    let hi = bps.last().copied().unwrap_or(0.0).max(lo);
    let mut pts = Vec::new();
    if radial {
        pts.push(0.0);
    } else if let Some(env) = tail_envelope(probe, &probe.tails[0]) {
        let mut left = march_tail(lo, -1.0, env, TAIL_DEPTH).ok_or_else(|| Error::Divergent(format!("left tail of {}", probe.label)))?;
        left.reverse();
        pts.extend(left);
    }
    pts.extend(bps.iter().copied().filter(|&b| !radial || b > 0.0));
    if pts.is_empty() || *pts.last().expect("nonempty") < hi {
        pts.push(hi);
    }
    if let Some(env) = tail_envelope(probe, &probe.tails[1]) {
        pts.extend(march_tail(hi, 1.0, env, TAIL_DEPTH).ok_or_else(|| Error::Divergent(format!("right tail of {}", probe.label)))?);
    }
    pts.dedup();
    Ok(pts)
}

/// Integrates a vector functional of the profile over its whole domain.
pub(crate) fn integrate_profile<const N: usize, F>(probe: &ProbeFunction, tol: f64, max_panels: usize, f: F) -> Result<VecIntegral<N>>
where
    F: Fn(f64, &Jet, f64) -> [f64; N],
{
    if probe.tails.iter().any(|t| matches!(t, TailDescriptor::Algebraic { .. })) {
        return Err(Error::Unsupported("algebraic tails need the truncation schedule".into()));
    }
    let mut pts = window(probe)?;
    if !matches!(probe.lift, Lift::Radial) {
        pts.insert(0, f64::NEG_INFINITY);
    }
    pts.push(f64::INFINITY);
    Ok(integrate_vec(|x| f(x, &probe.jet(x), probe.ln_weight(x)), &pts, [tol; N], max_panels))
}

fn separable_l1(probe: &ProbeFunction) -> bool {
    probe.mode == Mode::Gaussian && probe.is_line() && (probe.dim == 1 || probe.transverse_var() == 1.0)
}

struct Raw {
    value: [f64; NC],
    error: [f64; NC],
    converged: [bool; NC],
    partials: BTreeMap<usize, Vec<(f64, f64)>>,
}

fn raw_standard(probe: &ProbeFunction, opts: &ReportOptions) -> Result<Raw> {
    let tr = Transverse::of(probe);
    let l1 = separable_l1(probe);
    let r = integrate_profile(probe, opts.tol, opts.max_panels, |x, j, w| components(x, j, w, &tr, l1))?;
    Ok(Raw { value: r.value, error: r.error, converged: [r.converged; NC], partials: BTreeMap::new() })
}

/// Radial profile with |f(r)| ~ C r^{-p} (log r)^{-q}: [0, 1] in r, then s = log r over the schedule.
fn raw_algebraic(probe: &ProbeFunction, opts: &ReportOptions) -> Result<Raw> {
    let TailDescriptor::Algebraic { ln_amp, power, log_power } = probe.tails[1] else {
        return Err(Error::Unsupported("expected an algebraic tail".into()));
    };
    if !matches!(probe.lift, Lift::Radial) {
        return Err(Error::Unsupported("algebraic tails are supported for radial probes only".into()));
    }
    let tr = Transverse::of(probe);
    let comp = |r: f64| {
        let mut c = components(r, &probe.jet(r), probe.ln_weight(r), &tr, false);
        // radial first moments vanish by symmetry
        c[1] = 0.0;
        c
    };
    let mut inner_pts = vec![0.0];
    inner_pts.extend(probe.breakpoints().into_iter().filter(|&b| b > 0.0 && b < 1.0));
    inner_pts.push(1.0);
    let inner = integrate_vec(comp, &inner_pts, [opts.tol; NC], opts.max_panels);
    let in_s = |s: f64| {
        let r = s.exp();
        let mut c = comp(r);
        for v in c.iter_mut() {
            *v *= r;
        }
        c
    };
    let d = probe.dim as f64;
    let eta0 = d - 2.0 * power;
    let kappa0 = -2.0 * log_power;
    // (η, κ) of the s-integrand C s^κ e^{ηs} per component
    let rates: [(f64, f64); NC] = [
        (eta0, kappa0),
        (f64::NEG_INFINITY, 0.0),
        (eta0 + 2.0, kappa0),
        (eta0 - 2.0, kappa0),
        (eta0, kappa0 + 1.0),
        (eta0, kappa0 + 1.0),
        (eta0, kappa0 + 1.0),
        (f64::NEG_INFINITY, 0.0),
        (f64::NEG_INFINITY, 0.0),
    ];
    let lead = crate::probes::ln_sphere_area(probe.dim) + 2.0 * ln_amp;
    // leading coefficients: f² → e^{lead}, f² log f² → -2p·e^{lead}
    let coef = [lead.exp(), 0.0, 0.0, 0.0, -2.0 * power * lead.exp(), 2.0 * power * lead.exp(), -2.0 * power * lead.exp(), 0.0, 0.0];
    let mut value = inner.value;
    let mut error = inner.error;
    let mut partials: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    let convergent = rates.map(|(eta, kappa)| eta < 0.0 || (eta == 0.0 && kappa < -1.0));
    let mut prev = 0.0;
    for &s_max in &LOG_RADIUS_SCHEDULE {
        // growing components are resolved relative to their size
        let coarse = integrate_vec(in_s, &[prev, s_max], [f64::INFINITY; NC], 1).value;
        let tol: [f64; NC] = std::array::from_fn(|c| if convergent[c] { opts.tol } else { opts.tol * coarse[c].abs().max(1.0) });
        let seg = integrate_vec(in_s, &[prev, s_max], tol, opts.max_panels);
        for c in 0..NC {
            value[c] += seg.value[c];
            error[c] += seg.error[c];
            partials.entry(c).or_default().push((s_max, value[c]));
        }
        prev = s_max;
    }
    let mut converged = [inner.converged; NC];
    let last = *LOG_RADIUS_SCHEDULE.last().expect("nonempty");
    for c in 0..NC {
        let (eta, kappa) = rates[c];
        if convergent[c] {
            partials.remove(&c);
            if eta == 0.0 {
                value[c] += coef[c] * last.powf(kappa + 1.0) / (-1.0 - kappa);
            }
        } else {
            converged[c] = false;
        }
    }
    Ok(Raw { value, error, converged, partials })
}

/// Full functional report in the probe's own mode.
pub fn report_with(probe: &ProbeFunction, opts: &ReportOptions) -> Result<FunctionalReport> {
    let algebraic = probe.tails.iter().any(|t| matches!(t, TailDescriptor::Algebraic { .. }));
    let raw = if algebraic { raw_algebraic(probe, opts)? } else { raw_standard(probe, opts)? };
    Ok(assemble(probe, raw))
}

/// Report in the requested mode, converting the probe with u = v√γ (λ = 1) when needed.
pub fn report(probe: &ProbeFunction, mode: Mode) -> Result<FunctionalReport> {
    if probe.mode == mode {
        report_with(probe, &ReportOptions::default())
    } else {
        match mode {
            Mode::Euclidean => report_with(&gauss_to_euclid(probe)?, &ReportOptions::default()),
            Mode::Gaussian => report_with(&euclid_to_gauss(probe, 1.0)?, &ReportOptions::default()),
        }
    }
}

/// Report restricted to |x| < radius (profile coordinate), without tails.
pub fn report_truncated(probe: &ProbeFunction, radius: f64, opts: &ReportOptions) -> Result<FunctionalReport> {
    if !(radius > 0.0) {
        return Err(crate::error::invalid("radius must be positive"));
    }
    let tr = Transverse::of(probe);
    let radial = matches!(probe.lift, Lift::Radial);
    let lo = if radial { 0.0 } else { -radius };
    let mut pts = vec![lo];
    pts.extend(probe.breakpoints().into_iter().filter(|&b| b > lo && b < radius));
    pts.push(radius);
    let l1 = separable_l1(probe);
    let r = integrate_vec(|x| components(x, &probe.jet(x), probe.ln_weight(x), &tr, l1), &pts, [opts.tol; NC], opts.max_panels);
    Ok(assemble(probe, Raw { value: r.value, error: r.error, converged: [r.converged; NC], partials: BTreeMap::new() }))
}

const FIELD_NAMES: [&str; NC] =
    ["l2_norm2", "first_moment", "second_moment", "fisher", "entropy", "abs_entropy", "entropy_below_one", "negative_mass", "l1_from_one"];

fn assemble(probe: &ProbeFunction, raw: Raw) -> FunctionalReport {
    let tr = Transverse::of(probe);
    let d = probe.dim as f64;
    let est = |c: usize| Estimate::new(raw.value[c], raw.error[c], raw.converged[c]);
    let m0 = est(0);
    let second = Estimate::new(m0.value.mul_add(tr.second_moment(), raw.value[2]), raw.error[2] + raw.error[0] * tr.second_moment(), raw.converged[2]);
    let fisher = Estimate::new(m0.value.mul_add(tr.fisher(), raw.value[3]), raw.error[3] + raw.error[0] * tr.fisher(), raw.converged[3]);
    let entropy_raw = est(4);
    let ln_m0 = m0.value.ln();
    let entropy =
        Estimate::new(entropy_raw.value - m0.value * ln_m0, entropy_raw.error + raw.error[0] * (1.0 + ln_m0.abs()), entropy_raw.converged && m0.converged);
    let deficit_shift = match probe.mode {
        Mode::Gaussian => 0.0,
        Mode::Euclidean => 0.25 * d * (LN_2PI + 2.0) * m0.value,
    };
    let deficit = Estimate::new(
        fisher.value - 0.5 * entropy.value - deficit_shift,
        fisher.error + 0.5 * entropy.error + 0.25 * d * (LN_2PI + 2.0) * m0.error,
        fisher.converged && entropy.converged,
    );
    let (first_moment, first_moment_error) = match &probe.lift {
        Lift::Line { axis, .. } => (axis.iter().map(|a| a * raw.value[1]).collect(), raw.error[1]),
        Lift::Radial => (vec![0.0; probe.dim], 0.0),
    };
    let mut divergent = Vec::new();
    let mut partials = BTreeMap::new();
    for (&c, p) in &raw.partials {
        divergent.push(FIELD_NAMES[c].to_string());
        partials.insert(FIELD_NAMES[c].to_string(), p.clone());
        if c == 4 {
            divergent.push("entropy_raw".into());
            divergent.push("deficit".into());
        }
    }
    divergent.sort();
    divergent.dedup();
    FunctionalReport {
        label: probe.label.clone(),
        mode: probe.mode,
        dim: probe.dim,
        l2_norm2: m0,
        fisher,
        entropy,
        entropy_raw,
        abs_entropy: est(5),
        entropy_below_one: Estimate::new(-raw.value[6], raw.error[6], raw.converged[6]),
        first_moment,
        first_moment_error,
        second_moment: second,
        deficit,
        negative_mass: est(7),
        l1_from_one: separable_l1(probe).then(|| est(8)),
        divergent,
        partials,
    }
}

/// u = v√γ.
pub fn gauss_to_euclid(probe: &ProbeFunction) -> Result<ProbeFunction> {
    probe.to_euclidean()
}

/// v(x) = λ^{-d/4} γ(x)^{-1/2} u(x/√λ).
pub fn euclid_to_gauss(probe: &ProbeFunction, lambda: f64) -> Result<ProbeFunction> {
    probe.to_gaussian(lambda)
}

/// ¼ (∫|v - 1| dγ)², the Csiszár–Kullback–Pinsker lower bound for the entropy.
pub fn ckp_lower_bound(report: &FunctionalReport) -> Result<f64> {
    if report.mode != Mode::Gaussian {
        return Err(Error::ModeMismatch { expected: "gaussian", got: report.mode.name() });
    }
    let l1 = report.l1_from_one.ok_or_else(|| Error::Unsupported("∫|v-1|dγ needs a separable probe".into()))?;
    Ok(0.25 * l1.value * l1.value)
}

/// ∫|f|^p over ℝᵈ against the probe's measure.
pub fn lp_integral(probe: &ProbeFunction, p: f64, opts: &ReportOptions) -> Result<Estimate> {
    if !(p > 0.0) {
        return Err(crate::error::invalid("p must be positive"));
    }
    let tr = Transverse::of(probe).lp(p).ok_or_else(|| Error::Divergent(format!("L^{p} transverse integral")))?;
    let r = integrate_profile(probe, opts.tol, opts.max_panels, |_, j, w| {
        let l = j.ln_abs();
        if l == f64::NEG_INFINITY {
            [0.0]
        } else {
            [(p * l + w).exp()]
        }
    })?;
    Ok(Estimate::new(r.value[0] * tr, r.error[0] * tr, r.converged))
}

/// ∫v dγ for a Gaussian-mode line probe.
pub fn gaussian_mean(probe: &ProbeFunction, opts: &ReportOptions) -> Result<Estimate> {
    if probe.mode != Mode::Gaussian {
        return Err(Error::ModeMismatch { expected: "gaussian", got: probe.mode.name() });
    }
    if !probe.is_line() {
        return Err(Error::Unsupported("∫v dγ needs a line lift".into()));
    }
    let tr = Transverse::of(probe).lp(1.0).ok_or_else(|| Error::Divergent("∫v dγ".into()))?;
    let r = integrate_profile(probe, opts.tol, opts.max_panels, |_, j, w| {
        let l = j.ln_abs();
        if l == f64::NEG_INFINITY {
            [0.0]
        } else {
            [j.v.signum() * (l + w).exp()]
        }
    })?;
    Ok(Estimate::new(r.value[0] * tr, r.error[0] * tr, r.converged))
}

/// Closed-form values composed from a probe's exact table; None without one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub l2_norm2: f64,
    pub first_moment: f64,
    pub second_moment: f64,
    pub fisher: f64,
    pub entropy: Option<f64>,
    pub deficit: Option<f64>,
}

pub fn closed_form(probe: &ProbeFunction) -> Option<ClosedForm> {
    let t = probe.exact.as_ref()?;
    let tr = Transverse::of(probe);
    let entropy = t.entropy.map(|h| h + t.m0 * tr.mean() - t.m0 * t.m0.ln());
    let fisher = t.fisher + t.m0 * tr.fisher();
    let shift = match probe.mode {
        Mode::Gaussian => 0.0,
        Mode::Euclidean => 0.25 * probe.dim as f64 * (LN_2PI + 2.0) * t.m0,
    };
    Some(ClosedForm {
        l2_norm2: t.m0,
        first_moment: t.m1,
        second_moment: t.m2 + t.m0 * tr.second_moment(),
        fisher,
        entropy,
        deficit: entropy.map(|e| fisher - 0.5 * e - shift),
    })
}

#[cfg(test)]
mod tests;
