//! The optimizer manifolds and the L² and H¹-seminorm distances from a probe to the Gaussian one.

use crate::error::{invalid, Error, Result};
use crate::functionals::{report_with, window, ReportOptions};
use crate::probes::{Expr, Lift, Mode, Piece, ProbeFunction, Symmetry, TailDescriptor};
use crate::quad::closed::{poly, poly_exp_integral, Quadratic};
use crate::quad::kronrod::integrate_vec;
use crate::quad::special::{normal_cdf, LN_2PI};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The three optimizer families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// a e^{b·x} against γ
    GaussianV,
    /// a e^{-|x-b|²/4} against dx
    EuclidU,
    /// a e^{-|x-b|²/(4λ)} against dx
    EuclidULambda,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldPoint {
    pub family: Family,
    pub a: f64,
    pub b: Vec<f64>,
    pub lambda: Option<f64>,
}

impl ManifoldPoint {
    pub fn gaussian_v(a: f64, b: Vec<f64>) -> Self {
        Self { family: Family::GaussianV, a, b, lambda: None }
    }

    pub fn euclid_u(a: f64, b: Vec<f64>) -> Self {
        Self { family: Family::EuclidU, a, b, lambda: None }
    }

    pub fn euclid_u_lambda(a: f64, b: Vec<f64>, lambda: f64) -> Self {
        Self { family: Family::EuclidULambda, a, b, lambda: Some(lambda) }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.b.is_empty() || self.b.iter().any(|x| !x.is_finite()) || !self.a.is_finite() {
            return Err(invalid("manifold point needs finite a and a nonempty finite b"));
        }
        match (self.family, self.lambda) {
            (Family::EuclidULambda, Some(l)) if l > 0.0 && l.is_finite() => Ok(()),
            (Family::EuclidULambda, _) => Err(invalid("λ must be positive")),
            (_, None) => Ok(()),
            (_, Some(_)) => Err(invalid("λ only belongs to the scaled Euclidean family")),
        }
    }

    /// Variance of the Euclidean Gaussian, 1 for the unscaled family.
    fn variance(&self) -> f64 {
        self.lambda.unwrap_or(1.0)
    }
}

/// The optimizer as a probe, with a closed-form exact table.
pub fn eval_optimizer(pt: &ManifoldPoint) -> Result<ProbeFunction> {
    pt.validate()?;
    let d = pt.dim();
    let beta = pt.b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let axis: Vec<f64> = if beta > 0.0 { pt.b.iter().map(|x| x / beta).collect() } else { (0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect() };
    let (mode, exponent, tau2, amp) = match pt.family {
        Family::GaussianV => (Mode::Gaussian, Quadratic::new(0.0, beta, 0.0), 1.0, pt.a),
        Family::EuclidU | Family::EuclidULambda => {
            let l = pt.variance();
            // the transverse factors carry (2πλ)^{-1/4} e^{-y²/(4λ)} each
            let amp = pt.a * (2.0 * std::f64::consts::PI * l).powf(0.25 * (d - 1) as f64);
            let q = Quadratic::new(-beta * beta / (4.0 * l), beta / (2.0 * l), -1.0 / (4.0 * l));
            (Mode::Euclidean, q, l, amp)
        }
    };
    let piece = Piece::new(f64::NEG_INFINITY, f64::INFINITY, Expr::PolyExp { poly: vec![1.0], exponent }).with_amp(amp);
    let sym = if beta == 0.0 { Symmetry::Even } else { Symmetry::None };
    let label = match pt.family {
        Family::GaussianV => format!("v(a={},|b|={beta})", pt.a),
        Family::EuclidU => format!("u(a={},|b|={beta})", pt.a),
        Family::EuclidULambda => format!("u(a={},|b|={beta},λ={})", pt.a, pt.variance()),
    };
    ProbeFunction::new(d, mode, Lift::Line { axis, transverse_var: tau2 }, vec![piece], sym, label)
}

/// Result of a manifold-distance search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldFit {
    pub distance2: f64,
    /// Closest optimizer; None when the infimum is only approached (H¹ with b → 0, where the
    /// closure of the manifold contains the linear functions).
    pub point: Option<ManifoldPoint>,
    /// |d distance²/db| at the returned b.
    pub gradient: f64,
    /// Signed exponent along the probe's axis.
    pub b_axis: f64,
    /// Best distance² after each start, in start order.
    pub history: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
enum Order {
    Value,
    Derivative,
}

/// One piece of the profile placed on the real line, possibly mirrored.
struct Segment<'a> {
    piece: &'a Piece,
    mirror: bool,
    lo: f64,
    hi: f64,
    closed: Option<(Vec<f64>, Quadratic)>,
}

/// Projections ∫ f^{(k)}(x) e^{βx-β²} dγ(x) of the 1-D profile onto the unit optimizers.
struct Projector<'a> {
    segments: Vec<Segment<'a>>,
    window: (f64, f64),
    order: Order,
}

fn mirrored(p: &[f64], q: &Quadratic) -> (Vec<f64>, Quadratic) {
    (poly::compose_affine(p, -1.0, 0.0), q.compose_affine(-1.0, 0.0))
}

fn differentiated(p: &[f64], q: &Quadratic) -> (Vec<f64>, Quadratic) {
    let qd = [q.c1, 2.0 * q.c2];
    (poly::add(&poly::deriv(p), &poly::mul(p, &qd)), *q)
}

impl<'a> Projector<'a> {
    fn new(probe: &'a ProbeFunction, order: Order) -> Result<Self> {
        let radial = matches!(probe.lift, Lift::Radial);
        let pts = window(probe)?;
        let (wlo, whi) = (pts[0], *pts.last().expect("window has points"));
        let window = if radial { (-whi, whi) } else { (wlo, whi) };
        let mut segments = Vec::new();
        for piece in probe.pieces.iter().filter(|p| !p.is_zero()) {
            let sides: &[bool] = if radial { &[false, true] } else { &[false] };
            for &mirror in sides {
                let closed = piece.as_poly_exp().map(|(p, q)| {
                    let (p, q) = if mirror { mirrored(&p, &q) } else { (p, q) };
                    match order {
                        Order::Value => (p, q),
                        Order::Derivative => differentiated(&p, &q),
                    }
                });
                let (lo, hi) = if mirror { (-piece.hi, -piece.lo) } else { (piece.lo, piece.hi) };
                segments.push(Segment { piece, mirror, lo, hi, closed });
            }
        }
        Ok(Self { segments, window, order })
    }

    /// [g, g', g''] with g(β) = ∫ f e^{βx-β²} dγ.
    fn eval(&self, beta: f64) -> [f64; 3] {
        let shift = Quadratic::new(-beta * beta - 0.5 * LN_2PI, beta, -0.5);
        let k1 = [-2.0 * beta, 1.0];
        let k2 = [4.0 * beta * beta - 2.0, -4.0 * beta, 1.0];
        let mut out = [0.0; 3];
        for s in &self.segments {
            let part = match &s.closed {
                Some((p, q)) => {
                    let qq = q.add(&shift);
                    let int = |r: &[f64]| poly_exp_integral(r, &qq, s.lo, s.hi).expect("admissible Gaussian tails");
                    [int(p), int(&poly::mul(p, &k1)), int(&poly::mul(p, &k2))]
                }
                None => self.numeric(s, beta),
            };
            for (o, v) in out.iter_mut().zip(part) {
                *o += v;
            }
        }
        out
    }

    fn numeric(&self, s: &Segment, beta: f64) -> [f64; 3] {
        let (lo, hi) = (s.lo.max(self.window.0), s.hi.min(self.window.1));
        if !(hi > lo) {
            return [0.0; 3];
        }
        let sign = if s.mirror { -1.0 } else { 1.0 };
        let f = |x: f64| {
            let j = s.piece.jet(sign * x);
            let v = match self.order {
                Order::Value => j.v,
                Order::Derivative => sign * j.dv,
            };
            if v == 0.0 {
                return [0.0; 3];
            }
            let e = v * (j.ln_scale + beta * x - beta * beta - 0.5 * x * x - 0.5 * LN_2PI).exp();
            let y = x - 2.0 * beta;
            [e, e * y, e * (y * y - 2.0)]
        };
        let mut pts = vec![lo];
        if 2.0 * beta > lo && 2.0 * beta < hi {
            pts.push(2.0 * beta);
        }
        pts.push(hi);
        integrate_vec(f, &pts, [1e-14; 3], 4000).value
    }
}

/// ‖v‖², ∫x v² dγ and ‖v'‖² of the 1-D profile against γ.
fn profile_norms(probe: &ProbeFunction) -> Result<(f64, f64, f64)> {
    if let Some(t) = &probe.exact {
        return Ok((t.m0, t.m1, t.fisher));
    }
    let r = report_with(probe, &ReportOptions::default())?;
    let m1: f64 = r.first_moment.iter().zip(axis_of(probe)).map(|(m, u)| m * u).sum();
    Ok((r.l2_norm2.value, m1, r.fisher.value))
}

/// ∫ t dγ over the d-1 transverse coordinates, where t² dγ = N(0, τ) per coordinate.
fn transverse_factor(probe: &ProbeFunction) -> f64 {
    match probe.lift {
        Lift::Line { transverse_var: tau, .. } => (2.0 * tau.sqrt() / (1.0 + tau)).powf(0.5 * (probe.dim - 1) as f64),
        Lift::Radial => 1.0,
    }
}

fn require_gaussian(probe: &ProbeFunction) -> Result<()> {
    if probe.mode != Mode::Gaussian {
        return Err(Error::ModeMismatch { expected: "gaussian", got: probe.mode.name() });
    }
    if matches!(probe.lift, Lift::Radial) && probe.dim > 1 {
        return Err(Error::Unsupported("manifold distances need a line lift when d > 1".into()));
    }
    Ok(())
}

/// Default start grid for the exponent search.
pub const START_GRID: [f64; 9] = [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0];
const GRADIENT_TOL: f64 = 1e-8;

/// Start points: the grid, the moment heuristic and the tail rates.
fn starts(probe: &ProbeFunction, m0: f64, m1: f64, skip_zero: bool) -> Vec<f64> {
    let mut s: Vec<f64> = START_GRID.to_vec();
    if m0 > 0.0 && m1.is_finite() {
        s.push(0.5 * m1 / m0);
    }
    for t in &probe.tails {
        if let TailDescriptor::ExpQuadratic { exponent, .. } = t {
            if exponent.c1 != 0.0 {
                s.push(exponent.c1);
                if matches!(probe.lift, Lift::Radial) {
                    s.push(-exponent.c1);
                }
            }
        }
    }
    let mut out: Vec<f64> = Vec::new();
    for x in s {
        if skip_zero && x == 0.0 {
            continue;
        }
        if !out.iter().any(|y| (y - x).abs() < 1e-12) {
            out.push(x);
        }
    }
    out
}

struct Local {
    beta: f64,
    g: f64,
    grad: f64,
}

/// Maximizes g(β)² from one start by safeguarded Newton steps.
fn climb(proj: &Projector, scale: f64, start: f64) -> Local {
    let mut beta = start;
    let mut m = proj.eval(beta);
    for _ in 0..300 {
        let [g, g1, g2] = m;
        let f1 = 2.0 * scale * scale * g * g1;
        let f2 = 2.0 * scale * scale * (g1 * g1 + g * g2);
        if f1.abs() <= 1e-13 {
            break;
        }
        let mut step = if f2 < 0.0 { -f1 / f2 } else { 0.5 * f1.signum() };
        step = step.clamp(-1.0, 1.0);
        let f0 = g * g;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = proj.eval(beta + step);
            let ft = trial[0] * trial[0];
            // near the top the increase drowns in rounding, so short steps only need to not lose ground
            if ft > f0 || (step.abs() < 1e-4 && ft >= f0 * (1.0 - 1e-14)) {
                beta += step;
                m = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step.abs() < 1e-15 * beta.abs().max(1.0) {
            break;
        }
    }
    let [g, g1, _] = m;
    Local { beta, g, grad: (2.0 * scale * scale * g * g1).abs() }
}

fn search(proj: &Projector, scale: f64, norm2: f64, starts: &[f64]) -> Result<(Local, Vec<f64>)> {
    let locals: Vec<Local> = starts.par_iter().map(|&s| climb(proj, scale, s)).collect();
    let mut best: Option<&Local> = None;
    let mut history = Vec::with_capacity(locals.len());
    for l in &locals {
        let better = match best {
            None => true,
            Some(b) => (scale * l.g).powi(2) > (scale * b.g).powi(2),
        };
        if better && l.g.is_finite() {
            best = Some(l);
        }
        history.push(best.map_or(norm2, |b| (norm2 - (scale * b.g).powi(2)).max(0.0)));
    }
    let best = best.ok_or_else(|| Error::NoConvergence("no start produced a finite projection".into()))?;
    if !(best.grad <= GRADIENT_TOL * norm2.max(1.0)) {
        return Err(Error::NoConvergence(format!("manifold search stalled with gradient {}", best.grad)));
    }
    Ok((Local { beta: best.beta, g: best.g, grad: best.grad }, history))
}

fn axis_of(probe: &ProbeFunction) -> Vec<f64> {
    match &probe.lift {
        Lift::Line { axis, .. } => axis.clone(),
        Lift::Radial => vec![1.0],
    }
}

/// inf over (a, b) of ‖v - a e^{b·x}‖² in L²(γ), amplitude in closed form, b by multi-start Newton.
pub fn l2_distance_to_manifold(probe: &ProbeFunction) -> Result<ManifoldFit> {
    require_gaussian(probe)?;
    let (m0, m1, _) = profile_norms(probe)?;
    let scale = transverse_factor(probe);
    let proj = Projector::new(probe, Order::Value)?;
    let (best, history) = search(&proj, scale, m0, &starts(probe, m0, m1, false))?;
    let b: Vec<f64> = axis_of(probe).iter().map(|u| u * best.beta).collect();
    let a = scale * best.g * (-best.beta * best.beta).exp();
    Ok(ManifoldFit {
        distance2: (m0 - (scale * best.g).powi(2)).max(0.0),
        point: Some(ManifoldPoint::gaussian_v(a, b)),
        gradient: best.grad,
        b_axis: best.beta,
        history,
    })
}

/// inf over (b, c) of ‖v' - w'‖² in L²(γ), w = c e^{bx/2 - b²/4}, for d = 1.
///
/// Writing w = a e^{βx} with β = b/2 the inner minimization over c is a projection of v'
/// onto the unit function e^{βx-β²}; `b_axis` reports β.
pub fn h1_seminorm_distance_to_manifold(probe: &ProbeFunction) -> Result<ManifoldFit> {
    require_gaussian(probe)?;
    if probe.dim != 1 {
        return Err(Error::Unsupported("the H¹-seminorm distance is implemented for d = 1".into()));
    }
    let (m0, m1, fisher) = profile_norms(probe)?;
    let proj = Projector::new(probe, Order::Derivative)?;
    let (best, history) = search(&proj, 1.0, fisher, &starts(probe, m0, m1, true))?;
    let point = (best.beta.abs() > 1e-12).then(|| {
        let c_times_beta = best.g;
        ManifoldPoint::gaussian_v(c_times_beta / best.beta * (-best.beta * best.beta).exp(), vec![best.beta])
    });
    Ok(ManifoldFit { distance2: (fisher - best.g * best.g).max(0.0), point, gradient: best.grad, b_axis: best.beta, history })
}

/// The one-tail estimate ε_n n²(1 - Φ(-n/2)) / (2‖g_n‖²) used as a lower bound for the H¹ distance of v_{a,n}.
pub fn prop42_h1_lower_bound(a: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    let eps = crate::probes::prop42_eps(a, n);
    Ok(eps * nf * nf * (1.0 - normal_cdf(-nf / 2.0)) / (2.0 * crate::probes::prop42_g_norm2(a, n)?))
}
