//! Gauss–Hermite rules for the standard Gaussian probability measure.

/// Orthonormal physicists' Hermite value and derivative at t (weight e^{-t²}, no exponential factor).
fn hermite_pair(m: usize, t: f64) -> (f64, f64) {
    let mut p1 = std::f64::consts::PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 1..=m {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = t * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * m as f64).sqrt() * p2)
}

/// Nodes and weights with Σ wᵢ f(xᵢ) ≈ ∫ f dγ; nodes ascending, weights positive.
pub fn gauss_hermite(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "Gauss–Hermite order must be positive");
    // Bracket the positive roots on a grid finer than the minimal root spacing, then polish.
    let t_max = (2.0 * m as f64 + 1.0).sqrt() + 1.0;
    let step = 0.25 / (2.0 * m as f64 + 1.0).sqrt();
    let mut roots = Vec::with_capacity(m / 2 + 1);
    let mut a = if m % 2 == 1 { step * 0.5 } else { 0.0 };
    let mut fa = hermite_pair(m, a).0;
    while a < t_max && roots.len() < m / 2 {
        let b = a + step;
        let fb = hermite_pair(m, b).0;
        if fa == 0.0 || fa.signum() != fb.signum() {
            let (mut lo, mut hi) = (a, b);
            let mut z = 0.5 * (lo + hi);
            for _ in 0..200 {
                let (p, dp) = hermite_pair(m, z);
                let flo = hermite_pair(m, lo).0;
                if flo.signum() == p.signum() {
                    lo = z;
                } else {
                    hi = z;
                }
                let newton = z - p / dp;
                let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                if (next - z).abs() <= 1e-16 * z.abs().max(1.0) {
                    z = next;
                    break;
                }
                z = next;
            }
            roots.push(z);
        }
        a = b;
        fa = fb;
    }
    assert_eq!(roots.len(), m / 2, "Gauss–Hermite root search lost a root");
    let wnorm = 1.0 / std::f64::consts::PI.sqrt();
    let mut pos: Vec<(f64, f64)> = roots
        .iter()
        .map(|&t| {
            let dp = hermite_pair(m, t).1;
            (t * std::f64::consts::SQRT_2, 2.0 / (dp * dp) * wnorm)
        })
        .collect();
    pos.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for &(x, w) in pos.iter().rev() {
        nodes.push(-x);
        weights.push(w);
    }
    if m % 2 == 1 {
        let dp = hermite_pair(m, 0.0).1;
        nodes.push(0.0);
        weights.push(2.0 / (dp * dp) * wnorm);
    }
    for &(x, w) in &pos {
        nodes.push(x);
        weights.push(w);
    }
    (nodes, weights)
}
