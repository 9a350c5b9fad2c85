//! Piecewise-analytic probe functions and the named example families.
//!
//! A probe is a 1-D profile made of analytic pieces, lifted to ℝᵈ either along a
//! line (profile in one coordinate times a Gaussian factor in the others) or
//! radially. Pieces are evaluated in log space so that steep exponential tails
//! never overflow.

mod families;
mod spec;

pub use families::*;
pub use spec::{CounterexampleSpec, CutoffRecipe, ProbeSpec};

use crate::error::{invalid, Error, Result};
use crate::quad::closed::{poly, poly_exp_integral, Quadratic};
use crate::quad::special::LN_2PI;
use serde::{Deserialize, Serialize};

/// Reference measure the probe lives against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Gaussian,
    Euclidean,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Gaussian => "gaussian",
            Mode::Euclidean => "euclidean",
        }
    }
}

/// How the 1-D profile is extended to ℝᵈ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Lift {
    /// f(x·axis) · Π t(yⱼ) over the d-1 orthogonal coordinates, where t² is the
    /// N(0, τ²) density relative to the mode's measure.
    Line { axis: Vec<f64>, transverse_var: f64 },
    /// f(|x|) with weight |S^{d-1}| r^{d-1}.
    Radial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Even,
    None,
}

/// Closed-form building blocks, evaluated in the local coordinate s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Zero,
    /// p(s) · e^{q(s)}
    PolyExp {
        poly: Vec<f64>,
        exponent: Quadratic,
    },
    /// e^{-1/(s(1-s))} on (0, 1), zero elsewhere
    Bump,
    /// sech(s)^power
    Sech {
        power: f64,
    },
    /// (1+s²)^{-d/4} (log(2+s²))^{-a/2}
    LogAlgebraic {
        d: usize,
        a: f64,
    },
}

/// f = v·e^{ln_scale}, f' = dv·e^{ln_scale}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub ln_scale: f64,
    pub v: f64,
    pub dv: f64,
}

impl Jet {
    pub const ZERO: Jet = Jet { ln_scale: 0.0, v: 0.0, dv: 0.0 };

    #[inline]
    pub fn ln_abs(&self) -> f64 {
        if self.v == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.v.abs().ln() + self.ln_scale
        }
    }

    #[inline]
    pub fn ln_abs_deriv(&self) -> f64 {
        if self.dv == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.dv.abs().ln() + self.ln_scale
        }
    }

    pub fn value(&self) -> f64 {
        if self.v == 0.0 {
            0.0
        } else {
            self.v * self.ln_scale.exp()
        }
    }

    pub fn deriv(&self) -> f64 {
        if self.dv == 0.0 {
            0.0
        } else {
            self.dv * self.ln_scale.exp()
        }
    }
}

fn ln_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Expr {
    pub fn jet(&self, s: f64) -> Jet {
        match self {
            Expr::Zero => Jet::ZERO,
            Expr::PolyExp { poly: p, exponent } => {
                let v = poly::eval(p, s);
                let dp = poly::deriv(p);
                Jet { ln_scale: exponent.eval(s), v, dv: poly::eval(&dp, s) + v * exponent.deriv(s) }
            }
            Expr::Bump => {
                if s <= 0.0 || s >= 1.0 {
                    return Jet::ZERO;
                }
                let w = s * (1.0 - s);
                Jet { ln_scale: -1.0 / w, v: 1.0, dv: (1.0 - 2.0 * s) / (w * w) }
            }
            Expr::Sech { power } => Jet { ln_scale: -power * ln_cosh(s), v: 1.0, dv: -power * s.tanh() },
            Expr::LogAlgebraic { d, a } => {
                let d = *d as f64;
                let l = (2.0 + s * s).ln();
                Jet { ln_scale: -0.25 * d * (s * s).ln_1p() - 0.5 * a * l.ln(), v: 1.0, dv: -0.5 * d * s / (1.0 + s * s) - a * s / ((2.0 + s * s) * l) }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Expr::Zero => true,
            Expr::PolyExp { poly: p, .. } => poly::is_zero(p),
            _ => false,
        }
    }
}

/// amp · expr(slope·x + offset) · e^{env(x)} on [lo, hi].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    #[serde(with = "extended_real")]
    pub lo: f64,
    #[serde(with = "extended_real")]
    pub hi: f64,
    pub amp: f64,
    pub slope: f64,
    pub offset: f64,
    pub env: Quadratic,
    pub expr: Expr,
}

impl Piece {
    pub fn new(lo: f64, hi: f64, expr: Expr) -> Self {
        Self { lo, hi, amp: 1.0, slope: 1.0, offset: 0.0, env: Quadratic::ZERO, expr }
    }

    pub fn zero(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, Expr::Zero)
    }

    pub fn with_amp(mut self, amp: f64) -> Self {
        self.amp = amp;
        self
    }

    pub fn jet(&self, x: f64) -> Jet {
        if self.amp == 0.0 {
            return Jet::ZERO;
        }
        let e = self.expr.jet(self.slope * x + self.offset);
        if e.v == 0.0 && e.dv == 0.0 {
            return Jet::ZERO;
        }
        let sign = self.amp.signum();
        Jet { ln_scale: self.amp.abs().ln() + self.env.eval(x) + e.ln_scale, v: sign * e.v, dv: sign * (self.slope * e.dv + self.env.deriv(x) * e.v) }
    }

    pub fn is_zero(&self) -> bool {
        self.amp == 0.0 || self.expr.is_zero()
    }

    /// x ↦ piece(k·x), k > 0.
    fn dilated(&self, k: f64) -> Self {
        Self {
            lo: self.lo / k,
            hi: self.hi / k,
            amp: self.amp,
            slope: self.slope * k,
            offset: self.offset,
            env: self.env.compose_affine(k, 0.0),
            expr: self.expr.clone(),
        }
    }

    /// x ↦ piece(x + h).
    fn shifted(&self, h: f64) -> Self {
        Self {
            lo: self.lo - h,
            hi: self.hi - h,
            amp: self.amp,
            slope: self.slope,
            offset: self.offset + self.slope * h,
            env: self.env.compose_affine(1.0, h),
            expr: self.expr.clone(),
        }
    }

    /// Polynomial prefactor and quadratic exponent in x, when the piece is of PolyExp type.
    pub(crate) fn as_poly_exp(&self) -> Option<(Vec<f64>, Quadratic)> {
        match &self.expr {
            Expr::Zero => Some((vec![0.0], Quadratic::ZERO)),
            Expr::PolyExp { poly: p, exponent } => {
                let px = poly::scale(&poly::compose_affine(p, self.slope, self.offset), self.amp);
                let q = exponent.compose_affine(self.slope, self.offset).add(&self.env);
                Some((px, q))
            }
            _ => None,
        }
    }

    /// Asymptotic description of the piece as x → +∞ (dir = 1) or -∞ (dir = -1).
    fn tail(&self, dir: f64) -> TailDescriptor {
        if self.is_zero() {
            return TailDescriptor::Vanishing;
        }
        match &self.expr {
            Expr::Zero | Expr::Bump => TailDescriptor::Vanishing,
            Expr::PolyExp { .. } => {
                let (p, q) = self.as_poly_exp().expect("poly-exp piece");
                let deg = p.iter().rposition(|&c| c != 0.0).unwrap_or(0);
                TailDescriptor::ExpQuadratic { ln_amp: p[deg].abs().ln(), exponent: q, power: deg as u32 }
            }
            Expr::Sech { power } => {
                let s = self.slope * dir;
                let q = Quadratic::new(-power * self.offset * s.signum(), -power * self.slope.abs() * dir, 0.0).add(&self.env);
                TailDescriptor::ExpQuadratic { ln_amp: self.amp.abs().ln() + power * std::f64::consts::LN_2, exponent: q, power: 0 }
            }
            Expr::LogAlgebraic { d, a } if self.env == Quadratic::ZERO => TailDescriptor::Algebraic {
                ln_amp: self.amp.abs().ln() - 0.5 * (*d as f64) * self.slope.abs().ln() - 0.5 * a * std::f64::consts::LN_2,
                power: *d as f64 / 2.0,
                log_power: a / 2.0,
            },
            Expr::LogAlgebraic { .. } => TailDescriptor::ExpQuadratic { ln_amp: self.amp.abs().ln(), exponent: self.env, power: 0 },
        }
    }
}

/// Leading-order behaviour of a probe at ±∞.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TailDescriptor {
    Vanishing,
    /// |f(x)| ~ e^{ln_amp} |x|^power e^{exponent(x)}
    ExpQuadratic {
        ln_amp: f64,
        exponent: Quadratic,
        power: u32,
    },
    /// |f(r)| ~ e^{ln_amp} r^{-power} (ln r)^{-log_power}
    Algebraic {
        ln_amp: f64,
        power: f64,
        log_power: f64,
    },
}

/// Closed-form profile integrals against the mode's 1-D measure.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExactTable {
    /// ∫ f²
    pub m0: f64,
    /// ∫ x f²
    pub m1: f64,
    /// ∫ x² f²
    pub m2: f64,
    /// ∫ f'²
    pub fisher: f64,
    /// ∫ f² log f², when every nonzero piece has a constant prefactor
    pub entropy: Option<f64>,
}

/// A probe function on ℝᵈ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeFunction {
    pub dim: usize,
    pub mode: Mode,
    pub lift: Lift,
    pub pieces: Vec<Piece>,
    pub symmetry: Symmetry,
    pub tails: [TailDescriptor; 2],
    pub exact: Option<ExactTable>,
    pub label: String,
}

const CONTINUITY_TOL: f64 = 1e-9;

impl ProbeFunction {
    /// Validates the piece layout and derives breakpoints, tails and the exact table.
    pub fn new(dim: usize, mode: Mode, lift: Lift, pieces: Vec<Piece>, symmetry: Symmetry, label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if pieces.is_empty() {
            return Err(invalid("probe needs at least one piece"));
        }
        let start = match lift {
            Lift::Line { ref axis, transverse_var } => {
                if axis.len() != dim {
                    return Err(invalid("line axis must have length d"));
                }
                let n2: f64 = axis.iter().map(|a| a * a).sum();
                if (n2 - 1.0).abs() > 1e-12 {
                    return Err(invalid("line axis must be a unit vector"));
                }
                if !(transverse_var > 0.0) {
                    return Err(invalid("transverse variance must be positive"));
                }
                f64::NEG_INFINITY
            }
            Lift::Radial => 0.0,
        };
        if pieces[0].lo != start || pieces.last().map(|p| p.hi) != Some(f64::INFINITY) {
            return Err(invalid("pieces must cover the whole domain"));
        }
        for w in pieces.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(invalid("pieces must be contiguous without overlap"));
            }
        }
        for p in &pieces {
            if !(p.hi > p.lo) || !p.amp.is_finite() || !p.slope.is_finite() || p.slope == 0.0 && !p.is_zero() {
                return Err(invalid("degenerate piece"));
            }
        }
        for w in pieces.windows(2) {
            let b = w[0].hi;
            let (l, r) = (w[0].jet(b), w[1].jet(b));
            let (fl, fr) = (l.value(), r.value());
            let scale = fl.abs().max(fr.abs()).max(1.0);
            if (fl - fr).abs() > CONTINUITY_TOL * scale {
                return Err(invalid(format!("jump at breakpoint {b}: {fl} vs {fr}")));
            }
        }
        let left = if start.is_finite() { TailDescriptor::Vanishing } else { pieces[0].tail(-1.0) };
        let right = pieces.last().expect("nonempty").tail(1.0);
        let mut probe = Self { dim, mode, lift, pieces, symmetry, tails: [left, right], exact: None, label: label.into() };
        probe.check_tails()?;
        probe.exact = probe.compute_exact();
        Ok(probe)
    }

    fn check_tails(&self) -> Result<()> {
        for (t, dir) in self.tails.iter().zip([-1.0, 1.0]) {
            match (t, self.mode) {
                (TailDescriptor::ExpQuadratic { exponent, .. }, Mode::Gaussian) if exponent.c2 >= 0.25 => {
                    return Err(Error::Inadmissible("tail grows at least like e^{x²/4}".into()));
                }
                (TailDescriptor::ExpQuadratic { exponent, .. }, Mode::Euclidean) if exponent.c2 > 0.0 || exponent.c2 == 0.0 && exponent.c1 * dir >= 0.0 => {
                    return Err(Error::Inadmissible("tail is not square integrable".into()));
                }
                (TailDescriptor::Algebraic { power, log_power, .. }, Mode::Euclidean) => {
                    let d = self.dim as f64;
                    if 2.0 * power < d || (2.0 * power == d && 2.0 * log_power <= 1.0) {
                        return Err(Error::Inadmissible("algebraic tail is not square integrable".into()));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Sorted finite breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.lo).collect()
    }

    fn piece_index(&self, x: f64) -> usize {
        match self.pieces.binary_search_by(|p| p.lo.total_cmp(&x)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    /// Profile jet at x (one-sided from the right at breakpoints).
    pub fn jet(&self, x: f64) -> Jet {
        if matches!(self.lift, Lift::Radial) && x < 0.0 {
            return self.jet(-x);
        }
        self.pieces[self.piece_index(x)].jet(x)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x).value()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.jet(x).deriv()
    }

    /// Value of the lifted function at a point of ℝᵈ.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        match &self.lift {
            Lift::Radial => self.value(x.iter().map(|v| v * v).sum::<f64>().sqrt()),
            Lift::Line { axis, transverse_var } => {
                let s: f64 = x.iter().zip(axis).map(|(a, b)| a * b).sum();
                let r2: f64 = x.iter().map(|v| v * v).sum::<f64>() - s * s;
                let k = (self.dim - 1) as f64;
                let ln_t = match self.mode {
                    Mode::Euclidean => -0.25 * k * (LN_2PI + transverse_var.ln()) - r2 / (4.0 * transverse_var),
                    Mode::Gaussian => -0.25 * k * transverse_var.ln() - r2 * (1.0 / transverse_var - 1.0) / 4.0,
                };
                self.value(s) * ln_t.exp()
            }
        }
    }

    pub fn is_line(&self) -> bool {
        matches!(self.lift, Lift::Line { .. })
    }

    pub fn transverse_var(&self) -> f64 {
        match self.lift {
            Lift::Line { transverse_var, .. } => transverse_var,
            Lift::Radial => 1.0,
        }
    }

    /// ln of the 1-D reference weight at x (profile coordinate).
    pub fn ln_weight(&self, x: f64) -> f64 {
        match (&self.lift, self.mode) {
            (Lift::Line { .. }, Mode::Euclidean) => 0.0,
            (Lift::Line { .. }, Mode::Gaussian) => -0.5 * x * x - 0.5 * LN_2PI,
            (Lift::Radial, mode) => {
                let d = self.dim as f64;
                let base = ln_sphere_area(self.dim) + if self.dim > 1 { (d - 1.0) * x.ln() } else { 0.0 };
                match mode {
                    Mode::Euclidean => base,
                    Mode::Gaussian => base - 0.5 * x * x - 0.5 * d * LN_2PI,
                }
            }
        }
    }

    fn compute_exact(&self) -> Option<ExactTable> {
        if !self.is_line() {
            return None;
        }
        let weight = match self.mode {
            Mode::Gaussian => Quadratic::new(-0.5 * LN_2PI, 0.0, -0.5),
            Mode::Euclidean => Quadratic::ZERO,
        };
        let mut t = ExactTable { entropy: Some(0.0), ..Default::default() };
        for piece in &self.pieces {
            let (p, q) = piece.as_poly_exp()?;
            if poly::is_zero(&p) {
                continue;
            }
            let q2 = q.scale(2.0).add(&weight);
            let p2 = poly::mul(&p, &p);
            let int = |r: &[f64]| poly_exp_integral(r, &q2, piece.lo, piece.hi);
            t.m0 += int(&p2)?;
            t.m1 += int(&poly::mul(&p2, &[0.0, 1.0]))?;
            t.m2 += int(&poly::mul(&p2, &[0.0, 0.0, 1.0]))?;
            let qd = [q.c1, 2.0 * q.c2];
            let g = poly::add(&poly::deriv(&p), &poly::mul(&p, &qd));
            t.fisher += int(&poly::mul(&g, &g))?;
            let deg = p.iter().rposition(|&c| c != 0.0).unwrap_or(0);
            t.entropy = match (t.entropy, deg) {
                (Some(acc), 0) => {
                    let c2 = p[0] * p[0];
                    let inner = [c2.ln() + 2.0 * q.c0, 2.0 * q.c1, 2.0 * q.c2];
                    int(&poly::scale(&inner, c2)).map(|v| acc + v)
                }
                _ => None,
            };
        }
        Some(t)
    }

    /// Same probe with the profile multiplied by k.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        let pieces = self.pieces.iter().map(|p| Piece { amp: p.amp * k, ..p.clone() }).collect();
        self.rebuild(pieces, self.lift.clone(), self.mode, &self.label)
    }

    fn rebuild(&self, pieces: Vec<Piece>, lift: Lift, mode: Mode, label: &str) -> Result<Self> {
        Self::new(self.dim, mode, lift, pieces, self.symmetry, label)
    }

    /// L²-preserving Euclidean dilation u ↦ k^{d/2} u(k·).
    pub fn dilate(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(invalid("dilation factor must be positive"));
        }
        if self.mode != Mode::Euclidean {
            return Err(Error::ModeMismatch { expected: "euclidean", got: self.mode.name() });
        }
        let (amp, lift) = match &self.lift {
            Lift::Line { axis, transverse_var } => (k.sqrt(), Lift::Line { axis: axis.clone(), transverse_var: transverse_var / (k * k) }),
            Lift::Radial => (k.powf(self.dim as f64 / 2.0), Lift::Radial),
        };
        let pieces = self.pieces.iter().map(|p| Piece { amp: p.amp * amp, ..p.dilated(k) }).collect();
        self.rebuild(pieces, lift, Mode::Euclidean, &self.label)
    }

    /// u = v·√γ.
    pub fn to_euclidean(&self) -> Result<Self> {
        if self.mode != Mode::Gaussian {
            return Err(Error::ModeMismatch { expected: "gaussian", got: self.mode.name() });
        }
        let dims = match self.lift {
            Lift::Line { .. } => 1.0,
            Lift::Radial => self.dim as f64,
        };
        let half_gauss = Quadratic::new(-0.25 * dims * LN_2PI, 0.0, -0.25);
        let pieces = self.pieces.iter().map(|p| Piece { env: p.env.add(&half_gauss), ..p.clone() }).collect();
        self.rebuild(pieces, self.lift.clone(), Mode::Euclidean, &self.label)
    }

    /// v(x) = λ^{-d/4} γ(x)^{-1/2} u(x/√λ).
    pub fn to_gaussian(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(invalid("λ must be positive"));
        }
        if self.mode != Mode::Euclidean {
            return Err(Error::ModeMismatch { expected: "euclidean", got: self.mode.name() });
        }
        let k = 1.0 / lambda.sqrt();
        let (dims, lift) = match &self.lift {
            Lift::Line { axis, transverse_var } => (1.0, Lift::Line { axis: axis.clone(), transverse_var: transverse_var * lambda }),
            Lift::Radial => (self.dim as f64, Lift::Radial),
        };
        let inv_half_gauss = Quadratic::new(0.25 * dims * LN_2PI, 0.0, 0.25);
        let amp = lambda.powf(-dims / 4.0);
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let q = p.dilated(k);
                Piece { amp: q.amp * amp, env: q.env.add(&inv_half_gauss), ..q }
            })
            .collect();
        self.rebuild(pieces, lift, Mode::Gaussian, &self.label)
    }

    /// Support of the nonzero pieces, if bounded.
    pub fn support(&self) -> Option<(f64, f64)> {
        let nz: Vec<&Piece> = self.pieces.iter().filter(|p| !p.is_zero()).collect();
        let lo = nz.first()?.lo;
        let hi = nz.last()?.hi;
        (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
    }
}

/// ln |S^{d-1}| = ln(2 π^{d/2} / Γ(d/2)).
pub fn ln_sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::LN_2 + h * std::f64::consts::PI.ln() - statrs::function::gamma::ln_gamma(h)
}

/// Marches outward from `start` until `envelope` (a log-integrand) has dropped
/// `depth` below the largest value seen and is decreasing. Returns the sample
/// points, which double as panel breakpoints. `None` if no decay was found.
pub fn march_tail(start: f64, dir: f64, envelope: impl Fn(f64) -> f64, depth: f64) -> Option<Vec<f64>> {
    let mut pts = Vec::new();
    let mut best = envelope(start);
    let mut prev = best;
    let mut h = 0.25;
    let mut x = start;
    for _ in 0..80 {
        x += dir * h;
        let e = envelope(x);
        pts.push(x);
        if e == f64::NEG_INFINITY {
            return Some(pts);
        }
        if e.is_finite() {
            best = best.max(e);
            let decreasing = e <= prev;
            if decreasing && (e < best - depth || e < -745.0) {
                return Some(pts);
            }
        }
        prev = e;
        h = (h * 1.6).min(4.0 + 0.25 * x.abs());
    }
    None
}

/// JSON has no infinities; ±∞ piece bounds travel as the strings "-inf" and "inf".
mod extended_real {
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        match *x {
            f64::INFINITY => "inf".serialize(s),
            f64::NEG_INFINITY => "-inf".serialize(s),
            v => v.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(D::Error::custom(format!("expected a number, \"inf\" or \"-inf\", got {t:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests;
