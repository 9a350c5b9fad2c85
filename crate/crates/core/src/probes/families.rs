use super::{Expr, Lift, Mode, Piece, ProbeFunction, Symmetry};
use crate::error::{invalid, Error, Result};
use crate::quad::closed::Quadratic;
use crate::quad::kronrod::integrate_vec;

fn axis(d: usize, dir: Option<&[f64]>) -> Vec<f64> {
    let mut a = vec![0.0; d];
    match dir {
        Some(b) => {
            let n = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (ai, bi) in a.iter_mut().zip(b) {
                *ai = bi / n;
            }
        }
        None => a[0] = 1.0,
    }
    a
}

fn line(d: usize) -> Lift {
    Lift::Line { axis: axis(d, None), transverse_var: 1.0 }
}

fn poly_exp(poly: Vec<f64>, exponent: Quadratic) -> Expr {
    Expr::PolyExp { poly, exponent }
}

/// v ≡ 1 in Gaussian mode.
pub fn make_constant_one(d: usize) -> Result<ProbeFunction> {
    let piece = Piece::new(f64::NEG_INFINITY, f64::INFINITY, poly_exp(vec![1.0], Quadratic::ZERO));
    ProbeFunction::new(d, Mode::Gaussian, line(d), vec![piece], Symmetry::Even, format!("constant(d={d})"))
}

/// v_b(x) = e^{b·x - |b|²}, unit norm in L²(γ).
pub fn make_gaussian_optimizer(b: &[f64]) -> Result<ProbeFunction> {
    if b.is_empty() || b.iter().any(|x| !x.is_finite()) {
        return Err(invalid("b must be a finite nonempty vector"));
    }
    let d = b.len();
    let beta = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let lift = Lift::Line { axis: axis(d, (beta > 0.0).then_some(b)), transverse_var: 1.0 };
    let piece = Piece::new(f64::NEG_INFINITY, f64::INFINITY, poly_exp(vec![1.0], Quadratic::new(-beta * beta, beta, 0.0)));
    let sym = if beta == 0.0 { Symmetry::Even } else { Symmetry::None };
    ProbeFunction::new(d, Mode::Gaussian, lift, vec![piece], sym, format!("optimizer(|b|={beta})"))
}

/// v_ε = (1 + ε x₁)/√(1+ε²).
pub fn make_tangent(eps: f64, d: usize) -> Result<ProbeFunction> {
    if !eps.is_finite() {
        return Err(invalid("ε must be finite"));
    }
    let piece = Piece::new(f64::NEG_INFINITY, f64::INFINITY, poly_exp(vec![1.0, eps], Quadratic::ZERO)).with_amp(1.0 / (1.0 + eps * eps).sqrt());
    let sym = if eps == 0.0 { Symmetry::Even } else { Symmetry::None };
    ProbeFunction::new(d, Mode::Gaussian, line(d), vec![piece], sym, format!("tangent(eps={eps})"))
}

/// Orthonormal Hermite polynomial h_k for k ∈ {1, 2, 3}; these have ∫v dγ = 0.
pub fn make_hermite(k: usize) -> Result<ProbeFunction> {
    let poly = match k {
        1 => vec![0.0, 1.0],
        2 => vec![-1.0 / 2f64.sqrt(), 0.0, 1.0 / 2f64.sqrt()],
        3 => vec![0.0, -3.0 / 6f64.sqrt(), 0.0, 1.0 / 6f64.sqrt()],
        _ => return Err(invalid("hermite probe degree must be 1, 2 or 3")),
    };
    let sym = if k.is_multiple_of(2) { Symmetry::Even } else { Symmetry::None };
    let piece = Piece::new(f64::NEG_INFINITY, f64::INFINITY, poly_exp(poly, Quadratic::ZERO));
    ProbeFunction::new(1, Mode::Gaussian, line(1), vec![piece], sym, format!("hermite(k={k})"))
}

/// Gaussian-mode probe with |v|²γ = N(0, var) in every coordinate.
pub fn make_gaussian_density(var: f64, d: usize) -> Result<ProbeFunction> {
    if !(var > 0.0) {
        return Err(invalid("variance must be positive"));
    }
    let q = Quadratic::new(-0.25 * var.ln(), 0.0, -0.25 * (1.0 / var - 1.0));
    let piece = Piece::new(f64::NEG_INFINITY, f64::INFINITY, poly_exp(vec![1.0], q));
    let lift = Lift::Line { axis: axis(d, None), transverse_var: var };
    ProbeFunction::new(d, Mode::Gaussian, lift, vec![piece], Symmetry::Even, format!("gaussian_density(var={var})"))
}

/// Standard C^∞ bump e^{-1/(x(1-x))} on (0, 1), scaled to unit L²(dx) norm.
pub fn default_bump() -> Result<ProbeFunction> {
    let r = integrate_vec(
        |s| {
            if s <= 0.0 || s >= 1.0 {
                [0.0]
            } else {
                [(-2.0 / (s * (1.0 - s))).exp()]
            }
        },
        &[0.0, 0.5, 1.0],
        [1e-20],
        200,
    );
    let amp = 1.0 / r.value[0].sqrt();
    let pieces = vec![Piece::zero(f64::NEG_INFINITY, 0.0), Piece::new(0.0, 1.0, Expr::Bump).with_amp(amp), Piece::zero(1.0, f64::INFINITY)];
    ProbeFunction::new(1, Mode::Euclidean, line(1), pieces, Symmetry::None, "bump")
}

/// u_n = n^{-1/2} Σ_{k<n} u(· + k) for a base supported in [0, 1].
pub fn make_example1(base: &ProbeFunction, n: usize) -> Result<ProbeFunction> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if base.dim != 1 || base.mode != Mode::Euclidean || !base.is_line() {
        return Err(invalid("base must be a 1-D Euclidean probe"));
    }
    let (lo, hi) = base.support().ok_or_else(|| Error::Inadmissible("base must be nonzero with compact support".into()))?;
    if lo < 0.0 || hi > 1.0 {
        return Err(Error::Inadmissible("base must be supported in (0, 1)".into()));
    }
    let amp = 1.0 / (n as f64).sqrt();
    let core: Vec<&Piece> = base.pieces.iter().filter(|p| p.lo >= lo && p.hi <= hi).collect();
    let mut pieces = vec![Piece::zero(f64::NEG_INFINITY, lo - (n - 1) as f64)];
    for k in (0..n).rev() {
        let shift = k as f64;
        if let Some(last) = pieces.last() {
            let start = lo - shift;
            if last.hi < start {
                pieces.push(Piece::zero(last.hi, start));
            }
        }
        for p in &core {
            let s = p.shifted(shift);
            pieces.push(Piece { amp: s.amp * amp, ..s });
        }
    }
    pieces.push(Piece::zero(hi, f64::INFINITY));
    ProbeFunction::new(1, Mode::Euclidean, line(1), pieces, Symmetry::None, format!("example1(n={n})"))
}

/// u(x) = (1+|x|²)^{-d/4} (log(2+|x|²))^{-a/2}, radial, Euclidean.
pub fn make_example2(a_exp: f64, d: usize) -> Result<ProbeFunction> {
    if !(a_exp > 1.0 && a_exp < 2.0) {
        return Err(invalid("example 2 exponent must lie in (1, 2)"));
    }
    let piece = Piece::new(0.0, f64::INFINITY, Expr::LogAlgebraic { d, a: a_exp });
    ProbeFunction::new(d, Mode::Euclidean, Lift::Radial, vec![piece], Symmetry::Even, format!("example2(a={a_exp},d={d})"))
}

/// Breakpoint r₀ = n/2 - 1/(2n) of the counterexample sequence.
pub fn prop42_inner_radius(n: usize) -> f64 {
    let n = n as f64;
    n / 2.0 - 1.0 / (2.0 * n)
}

pub fn prop42_eps(a: f64, n: usize) -> f64 {
    a / (2.0 * (n as f64).powi(2))
}

fn prop42_pieces(a: f64, n: usize) -> Vec<Piece> {
    let nf = n as f64;
    let eps = prop42_eps(a, n);
    let r0 = prop42_inner_radius(n);
    let half = nf / 2.0;
    let rate = nf * eps.ln();
    let ln_sqrt_eps = 0.5 * eps.ln();
    // exponents are written in local coordinates s = x ∓ edge so no large terms cancel
    let local = |lo: f64, hi: f64, c0: f64, c1: f64, offset: f64| Piece { offset, ..Piece::new(lo, hi, poly_exp(vec![1.0], Quadratic::new(c0, c1, 0.0))) };
    vec![
        local(f64::NEG_INFINITY, -half, ln_sqrt_eps, -nf / 2.0, half),
        local(-half, -r0, 0.0, -rate, r0),
        Piece::new(-r0, r0, poly_exp(vec![1.0], Quadratic::ZERO)),
        local(r0, half, 0.0, rate, -r0),
        local(half, f64::INFINITY, ln_sqrt_eps, nf / 2.0, -half),
    ]
}

/// Unnormalized ‖g_n‖²_{L²(γ)} from the closed-form table.
pub fn prop42_g_norm2(a: f64, n: usize) -> Result<f64> {
    let g = ProbeFunction::new(1, Mode::Gaussian, line(1), prop42_pieces(a, n), Symmetry::Even, "g")?;
    Ok(g.exact.expect("poly-exp pieces have closed forms").m0)
}

/// v_{a,n} = g_n/‖g_n‖ with the log-linear cutoff ψ_n(r) = exp(n log ε · (r - r₀)).
pub fn make_prop42(a: f64, n: usize) -> Result<ProbeFunction> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(invalid("a must be positive"));
    }
    if n < 2 {
        return Err(invalid("n must be at least 2"));
    }
    let amp = 1.0 / prop42_g_norm2(a, n)?.sqrt();
    let pieces = prop42_pieces(a, n).into_iter().map(|p| p.with_amp(amp)).collect();
    ProbeFunction::new(1, Mode::Gaussian, line(1), pieces, Symmetry::Even, format!("prop42(a={a},n={n})"))
}

/// A sech^{2/(p-2)}(x), the extremal profile of the 1-D Gagliardo–Nirenberg inequality.
pub fn make_gns_optimizer(p: f64, amplitude: f64) -> Result<ProbeFunction> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(invalid("p must exceed 2"));
    }
    let piece = Piece::new(f64::NEG_INFINITY, f64::INFINITY, Expr::Sech { power: 2.0 / (p - 2.0) }).with_amp(amplitude);
    ProbeFunction::new(1, Mode::Euclidean, line(1), vec![piece], Symmetry::Even, format!("gns_optimizer(p={p})"))
}
