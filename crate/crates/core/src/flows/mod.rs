//! Ornstein–Uhlenbeck and heat evolution of 1-D densities, and the flow identities along them.
//!
//! In the OU frame a state is the law μ with ρ = dμ/dγ, w = √ρ and pressure 𝖯 = log ρ:
//! 𝓔 = ∫ρ log ρ dγ, 𝓘 = ∫|∇w|² dγ = ¼∫ρ|𝖯'|² dγ, 𝓡 = ½∫ρ|𝖯''|² dγ, so that
//! d𝓔/dt = -4𝓘 and d𝓘/dt + 2𝓘 = -𝓡. In the heat frame the same names refer to the
//! Lebesgue density p: 𝓔 = ∫p log p, 𝓘 = ¼∫p|(log p)'|², 𝓡 = ½∫p|(log p)''|².

use crate::error::{invalid, Error, Result};
use crate::ineq::{BoundCheck, Slack};
use crate::probes::Mode;
use crate::quad::kronrod::integrate_vec;
use crate::quad::special::{log_sum_exp, LN_2PI};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const WEIGHT_TOL: f64 = 1e-12;
const INNER_TOL: f64 = 1e-13;
/// Lowest admissible value of a Hermite-series density on its grid.
pub const DENSITY_FLOOR: f64 = 1e-6;
/// Half-width of the Hermite quadrature window and floor grid.
pub const HERMITE_WINDOW: f64 = 10.0;
/// Step of the centered time differences.
pub const TIME_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// A 1-D Gaussian mixture law. `frame` is Gaussian for OU evolution (functionals relative
/// to γ) and Euclidean for heat evolution (functionals of the Lebesgue density).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub frame: Mode,
    pub components: Vec<Component>,
}

impl GaussianMixture {
    pub fn new(frame: Mode, components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("mixture needs at least one component"));
        }
        for c in &components {
            if !(c.weight > 0.0) || !(c.variance > 0.0) || !c.mean.is_finite() || !c.variance.is_finite() {
                return Err(invalid("components need positive weight, finite mean and positive variance"));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { frame, components })
    }

    /// (weight, mean, variance) triples.
    pub fn from_triples(frame: Mode, triples: &[(f64, f64, f64)]) -> Result<Self> {
        Self::new(frame, triples.iter().map(|&(weight, mean, variance)| Component { weight, mean, variance }).collect())
    }

    pub fn gaussian(frame: Mode, mean: f64, variance: f64) -> Result<Self> {
        Self::from_triples(frame, &[(1.0, mean, variance)])
    }

    /// Equal-weight bumps at ±mean.
    pub fn two_bump(frame: Mode, mean: f64, variance: f64) -> Result<Self> {
        Self::from_triples(frame, &[(0.5, -mean, variance), (0.5, mean, variance)])
    }

    /// m ↦ m e^{-t}, σ² ↦ 1 + (σ² - 1) e^{-2t}.
    pub fn ou_evolve(&self, t: f64) -> Result<Self> {
        self.require_frame(Mode::Gaussian)?;
        check_time(t)?;
        let (a, b) = ((-t).exp(), (-2.0 * t).exp());
        let components = self.components.iter().map(|c| Component { weight: c.weight, mean: c.mean * a, variance: 1.0 + (c.variance - 1.0) * b }).collect();
        Ok(Self { frame: self.frame, components })
    }

    /// σ² ↦ σ² + 2t, means fixed.
    pub fn heat_evolve(&self, t: f64) -> Result<Self> {
        self.require_frame(Mode::Euclidean)?;
        check_time(t)?;
        let components = self.components.iter().map(|c| Component { variance: c.variance + 2.0 * t, ..*c }).collect();
        Ok(Self { frame: self.frame, components })
    }

    fn evolve(&self, t: f64) -> Result<Self> {
        match self.frame {
            Mode::Gaussian => self.ou_evolve(t),
            Mode::Euclidean => self.heat_evolve(t),
        }
    }

    fn require_frame(&self, frame: Mode) -> Result<()> {
        if self.frame != frame {
            return Err(Error::ModeMismatch { expected: frame.name(), got: self.frame.name() });
        }
        Ok(())
    }

    /// (log p, (log p)', (log p)'') of the Lebesgue density.
    pub fn log_density(&self, x: f64) -> (f64, f64, f64) {
        let terms: Vec<f64> =
            self.components.iter().map(|c| c.weight.ln() - 0.5 * (LN_2PI + c.variance.ln()) - (x - c.mean).powi(2) / (2.0 * c.variance)).collect();
        let lp = log_sum_exp(&terms);
        let (mut d1, mut d2) = (0.0, 0.0);
        for (c, l) in self.components.iter().zip(&terms) {
            let r = (l - lp).exp();
            let s = -(x - c.mean) / c.variance;
            d1 += r * s;
            d2 += r * (s * s - 1.0 / c.variance);
        }
        (lp, d1, d2 - d1 * d1)
    }

    /// 𝓔, 𝓘, 𝓡 in the mixture's frame.
    pub fn functionals(&self) -> Functionals {
        let ou = self.frame == Mode::Gaussian;
        let f = |x: f64| {
            let (lp, d1, d2) = self.log_density(x);
            if lp < -740.0 {
                return [0.0; 3];
            }
            let p = lp.exp();
            let (lr, p1, p2) = if ou { (lp + 0.5 * x * x + 0.5 * LN_2PI, d1 + x, d2 + 1.0) } else { (lp, d1, d2) };
            [p * lr, 0.25 * p * p1 * p1, 0.5 * p * p2 * p2]
        };
        let mut pts = vec![f64::NEG_INFINITY];
        for c in &self.components {
            let s = c.variance.sqrt();
            pts.extend([c.mean - 3.0 * s, c.mean, c.mean + 3.0 * s]);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts.push(f64::INFINITY);
        let r = integrate_vec(f, &pts, [INNER_TOL; 3], 20_000);
        Functionals::from_integral(r.value, r.error)
    }

    /// Hermite coefficients c_k = E_μ[h_k] = √k! [t^k] e^{mt + (σ²-1)t²/2}, k = 0..=order.
    pub fn hermite_coefficients(&self, order: usize) -> Vec<f64> {
        let mut c = vec![0.0; order + 1];
        for comp in &self.components {
            let a = 0.5 * (comp.variance - 1.0);
            let mut prev = 0.0;
            let mut cur = 1.0;
            c[0] += comp.weight;
            for k in 0..order {
                // c_{k+1} = (m c_k + 2a √k c_{k-1}) / √(k+1)
                let next = (comp.mean * cur + 2.0 * a * (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
                prev = cur;
                cur = next;
                c[k + 1] += comp.weight * cur;
            }
        }
        c
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("time must be finite and nonnegative"));
    }
    Ok(())
}

/// ρ = dμ/dγ as Σ c_k h_k with orthonormal Hermite polynomials. Positivity on the grid is
/// checked where functionals need it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteSeries {
    pub coeffs: Vec<f64>,
}

impl HermiteSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || (coeffs[0] - 1.0).abs() > WEIGHT_TOL {
            return Err(invalid("a probability density has c₀ = 1"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coefficients must be finite"));
        }
        Ok(Self { coeffs })
    }

    /// Truncation of an OU-frame mixture at order K.
    pub fn from_mixture(mix: &GaussianMixture, order: usize) -> Result<Self> {
        mix.require_frame(Mode::Gaussian)?;
        let s = Self::new(mix.hermite_coefficients(order))?;
        s.check_floor()?;
        Ok(s)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// c_k ↦ c_k e^{-kt}.
    pub fn ou_evolve(&self, t: f64) -> Result<Self> {
        check_time(t)?;
        let coeffs = self.coeffs.iter().enumerate().map(|(k, c)| c * (-(k as f64) * t).exp()).collect();
        Ok(Self { coeffs })
    }

    /// (ρ, ρ', ρ'') using h_k' = √k h_{k-1}.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.coeffs.len();
        let mut h = vec![0.0; n];
        h[0] = 1.0;
        if n > 1 {
            h[1] = x;
        }
        for k in 1..n.saturating_sub(1) {
            h[k + 1] = (x * h[k] - (k as f64).sqrt() * h[k - 1]) / ((k + 1) as f64).sqrt();
        }
        let (mut r, mut r1, mut r2) = (0.0, 0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate() {
            let kf = k as f64;
            r += c * h[k];
            if k >= 1 {
                r1 += c * kf.sqrt() * h[k - 1];
            }
            if k >= 2 {
                r2 += c * (kf * (kf - 1.0)).sqrt() * h[k - 2];
            }
        }
        (r, r1, r2)
    }

    /// Minimum of ρ on the uniform grid over the quadrature window.
    pub fn grid_minimum(&self) -> f64 {
        (0..=4000).map(|i| -HERMITE_WINDOW + i as f64 * HERMITE_WINDOW / 2000.0).map(|x| self.eval(x).0).fold(f64::INFINITY, f64::min)
    }

    pub fn check_floor(&self) -> Result<()> {
        let m = self.grid_minimum();
        if m < DENSITY_FLOOR {
            return Err(Error::DensityFloor(format!("series density reaches {m:e} on [-{HERMITE_WINDOW}, {HERMITE_WINDOW}]")));
        }
        Ok(())
    }

    pub fn functionals(&self) -> Result<Functionals> {
        self.check_floor()?;
        let f = |x: f64| {
            let (r, r1, r2) = self.eval(x);
            let g = (-0.5 * x * x - 0.5 * LN_2PI).exp();
            let p1 = r1 / r;
            let p2 = r2 / r - p1 * p1;
            [g * r * r.ln(), 0.25 * g * r * p1 * p1, 0.5 * g * r * p2 * p2]
        };
        let pts: Vec<f64> = (0..=8).map(|i| -HERMITE_WINDOW + i as f64 * HERMITE_WINDOW / 4.0).collect();
        let r = integrate_vec(f, &pts, [INNER_TOL; 3], 20_000);
        Ok(Functionals::from_integral(r.value, r.error))
    }
}

/// 𝓔, 𝓘, 𝓡 at one time, with quadrature error estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub entropy: f64,
    pub fisher: f64,
    pub remainder: f64,
    pub error: f64,
}

impl Functionals {
    fn from_integral(v: [f64; 3], e: [f64; 3]) -> Self {
        Self { entropy: v[0], fisher: v[1], remainder: v[2], error: e[0].max(e[1]).max(e[2]) }
    }

    /// δ = 𝓘 - 𝓔/2.
    pub fn deficit(&self) -> f64 {
        self.fisher - 0.5 * self.entropy
    }

    /// G = log(𝓘 e^{-2𝓔/d}), d = 1.
    pub fn renyi_monitor(&self) -> f64 {
        self.fisher.ln() - 2.0 * self.entropy
    }
}

/// A state that can be evolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowState {
    Mixture(GaussianMixture),
    Hermite(HermiteSeries),
}

impl FlowState {
    pub fn frame(&self) -> Mode {
        match self {
            FlowState::Mixture(m) => m.frame,
            FlowState::Hermite(_) => Mode::Gaussian,
        }
    }

    pub fn method(&self) -> Method {
        match self {
            FlowState::Mixture(_) => Method::Mixture,
            FlowState::Hermite(_) => Method::Hermite,
        }
    }

    /// Evolution in the state's own frame: OU for γ-relative states, heat for Lebesgue ones.
    pub fn evolve(&self, t: f64) -> Result<Self> {
        Ok(match self {
            FlowState::Mixture(m) => FlowState::Mixture(m.evolve(t)?),
            FlowState::Hermite(h) => FlowState::Hermite(h.ou_evolve(t)?),
        })
    }

    pub fn functionals(&self) -> Result<Functionals> {
        match self {
            FlowState::Mixture(m) => Ok(m.functionals()),
            FlowState::Hermite(h) => h.functionals(),
        }
    }
}

/// OU evolution; refuses heat-frame mixtures.
pub fn ou_evolve(initial: &FlowState, t: f64) -> Result<FlowState> {
    if initial.frame() != Mode::Gaussian {
        return Err(Error::ModeMismatch { expected: "gaussian", got: initial.frame().name() });
    }
    initial.evolve(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mixture,
    Hermite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub t: f64,
    pub entropy: f64,
    pub fisher: f64,
    pub remainder: f64,
    /// log(𝓘 e^{-2𝓔}), heat frame only
    pub monitor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub method: Method,
    pub frame: Mode,
    pub points: Vec<FlowPoint>,
}

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

impl FlowTrace {
    /// t, E, I, R, G
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "E", "I", "R", "G"]).expect("in-memory write");
        for p in &self.points {
            let g = p.monitor.map(num).unwrap_or_default();
            w.write_record([num(p.t), num(p.entropy), num(p.fisher), num(p.remainder), g]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn monitor(&self) -> Vec<f64> {
        self.points.iter().filter_map(|p| p.monitor).collect()
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    for t in times {
        check_time(*t)?;
    }
    Ok(())
}

/// 𝓔, 𝓘, 𝓡 along the flow at the given times, computed in parallel.
pub fn trace_functionals(initial: &FlowState, times: &[f64]) -> Result<FlowTrace> {
    check_times(times)?;
    let heat = initial.frame() == Mode::Euclidean;
    let points = times
        .par_iter()
        .map(|&t| {
            let f = initial.evolve(t)?.functionals()?;
            Ok(FlowPoint { t, entropy: f.entropy, fisher: f.fisher, remainder: f.remainder, monitor: heat.then(|| f.renyi_monitor()) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowTrace { method: initial.method(), frame: initial.frame(), points })
}

/// G(t) along the heat flow of a Lebesgue-frame mixture.
pub fn heat_renyi_monitor(initial: &GaussianMixture, times: &[f64]) -> Result<FlowTrace> {
    initial.require_frame(Mode::Euclidean)?;
    trace_functionals(&FlowState::Mixture(initial.clone()), times)
}

/// True when each step of the series rises by at most `tol`.
pub fn is_non_increasing(series: &[f64], tol: f64) -> bool {
    series.windows(2).all(|w| w[1] <= w[0] + tol)
}

/// One finite-difference identity check at time t.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// d𝓔/dt = -4𝓘
    EntropyDecay,
    /// d𝓘/dt + 2𝓘 = -𝓡 in the OU frame, d𝓘/dt = -𝓡 in the heat frame
    FisherDecay,
}

/// Centered differences with step 1e-3 at each t; times must satisfy t ≥ 1e-3.
pub fn identity_rows(initial: &FlowState, identity: Identity, times: &[f64]) -> Result<Vec<IdentityRow>> {
    check_times(times)?;
    if times.iter().any(|&t| t < TIME_STEP) {
        return Err(invalid("centered differences need t ≥ 1e-3"));
    }
    let ou = initial.frame() == Mode::Gaussian;
    times
        .par_iter()
        .map(|&t| {
            let at = |s: f64| initial.evolve(s)?.functionals();
            let (m, c, p) = (at(t - TIME_STEP)?, at(t)?, at(t + TIME_STEP)?);
            let (lhs, rhs) = match identity {
                Identity::EntropyDecay => ((p.entropy - m.entropy) / (2.0 * TIME_STEP), -4.0 * c.fisher),
                Identity::FisherDecay => {
                    let di = (p.fisher - m.fisher) / (2.0 * TIME_STEP);
                    (if ou { di + 2.0 * c.fisher } else { di }, -c.remainder)
                }
            };
            let rel_err = if rhs == 0.0 { (lhs - rhs).abs() } else { ((lhs - rhs) / rhs).abs() };
            Ok(IdentityRow { t, lhs, rhs, rel_err })
        })
        .collect()
}

/// Ten interior times of [0, t_max] at least 0.05 from the ends.
pub fn interior_times(t_max: f64, count: usize) -> Vec<f64> {
    let (a, b) = (0.05, t_max - 0.05);
    (0..count).map(|i| a + (b - a) * i as f64 / (count.max(2) - 1) as f64).collect()
}

/// δ[√ρ₀] ≥ ∫₀^T 𝓡 dt in the OU frame.
pub fn deficit_via_flow(initial: &FlowState, t_max: f64, slack: Slack) -> Result<BoundCheck> {
    if initial.frame() != Mode::Gaussian {
        return Err(Error::ModeMismatch { expected: "gaussian", got: initial.frame().name() });
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(invalid("T must be positive and finite"));
    }
    let f0 = initial.functionals()?;
    let r = |t: f64| match initial.evolve(t).and_then(|s| s.functionals()) {
        Ok(f) => [f.remainder],
        Err(_) => [f64::NAN],
    };
    let pts: Vec<f64> = (0..=16).map(|i| t_max * (i as f64 / 16.0).powi(2)).collect();
    let int = integrate_vec(r, &pts, [1e-10], 2000);
    if !int.value[0].is_finite() {
        return Err(Error::DensityFloor("the evolved state left the admissible class".into()));
    }
    if !int.converged {
        return Err(Error::NoConvergence("time integral of the remainder".into()));
    }
    let label = match initial {
        FlowState::Mixture(m) => format!("mixture({} components)", m.components.len()),
        FlowState::Hermite(h) => format!("hermite(K={})", h.order()),
    };
    let err = 3.0 * f0.error + int.error[0];
    Ok(BoundCheck::new("flow_deficit", &label, f0.deficit(), int.value[0], slack.tolerance(err)).with_input("t_max", t_max))
}

#[cfg(test)]
mod tests;
