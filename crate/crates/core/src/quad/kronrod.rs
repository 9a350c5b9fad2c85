//! Globally adaptive Gauss–Kronrod (G7/K15) integration of vector-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// Kronrod abscissae on [-1, 1], descending, the last one is the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Clone, Copy, Debug)]
enum Map {
    Finite,
    // x = a + (1 - t) / t on t ∈ (0, 1]
    Upper(f64),
    // x = b - (1 - t) / t
    Lower(f64),
}

impl Map {
    #[inline]
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Map::Finite => (t, 1.0),
            Map::Upper(a) => (a + (1.0 - t) / t, 1.0 / (t * t)),
            Map::Lower(b) => (b - (1.0 - t) / t, 1.0 / (t * t)),
        }
    }
}

/// Heap entry ordering panels by error ratio.
struct Worst(f64, usize);

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Worst {}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

#[derive(Clone, Debug)]
struct Panel<const N: usize> {
    lo: f64,
    hi: f64,
    map: Map,
    value: [f64; N],
    error: [f64; N],
    split: bool,
}

fn rescale(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        e = res_asc * (200.0 * e / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    e.max(floor)
}

fn eval_panel<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, lo: f64, hi: f64, map: Map) -> Panel<N> {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let g = |t: f64| -> [f64; N] {
        if t <= 0.0 && !matches!(map, Map::Finite) {
            return [0.0; N];
        }
        let (x, jac) = map.apply(t);
        let mut v = f(x);
        for vi in v.iter_mut() {
            *vi = if vi.is_finite() { *vi * jac } else { 0.0 };
        }
        v
    };
    let mut samples = [[0.0; N]; 15];
    samples[7] = g(centre);
    for j in 0..7 {
        let dx = half * XGK[j];
        samples[j] = g(centre - dx);
        samples[14 - j] = g(centre + dx);
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for c in 0..N {
        let fc = samples[7][c];
        let mut kron = fc * WGK[7];
        let mut gauss = fc * WG[3];
        let mut res_abs = kron.abs();
        for j in 0..7 {
            let s = samples[j][c] + samples[14 - j][c];
            kron += WGK[j] * s;
            res_abs += WGK[j] * (samples[j][c].abs() + samples[14 - j][c].abs());
            if j % 2 == 1 {
                gauss += WG[j / 2] * s;
            }
        }
        let mean = kron * 0.5;
        let mut res_asc = WGK[7] * (fc - mean).abs();
        for j in 0..7 {
            res_asc += WGK[j] * ((samples[j][c] - mean).abs() + (samples[14 - j][c] - mean).abs());
        }
        let scale = half.abs();
        value[c] = kron * half;
        error[c] = rescale((kron - gauss) * half, res_abs * scale, res_asc * scale);
    }
    Panel { lo, hi, map, value, error, split: false }
}

/// Outcome of an adaptive run, one entry per integrand component.
#[derive(Clone, Copy, Debug)]
pub struct VecIntegral<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub converged: bool,
    pub panels: usize,
}

/// Integrates each component of `f` over the real line split at `points`.
///
/// `points` must be sorted; the first and last may be infinite. Components
/// share the panel structure and refinement targets the worst ratio of
/// accumulated error to its tolerance.
pub fn integrate_vec<const N: usize, F>(f: F, points: &[f64], tol: [f64; N], max_panels: usize) -> VecIntegral<N>
where
    F: Fn(f64) -> [f64; N],
{
    let mut panels: Vec<Panel<N>> = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        match (a.is_finite(), b.is_finite()) {
            (true, true) => panels.push(eval_panel(&f, a, b, Map::Finite)),
            (true, false) => panels.push(eval_panel(&f, 0.0, 1.0, Map::Upper(a))),
            (false, true) => panels.push(eval_panel(&f, 0.0, 1.0, Map::Lower(b))),
            (false, false) => {
                panels.push(eval_panel(&f, 0.0, 1.0, Map::Lower(0.0)));
                panels.push(eval_panel(&f, 0.0, 1.0, Map::Upper(0.0)));
            }
        }
    }
    let ratio = |e: &[f64; N]| (0..N).map(|c| e[c] / tol[c]).fold(0.0, f64::max);
    let total_err = |ps: &[Panel<N>]| {
        let mut e = [0.0; N];
        for p in ps.iter().filter(|p| !p.split) {
            for (ec, pc) in e.iter_mut().zip(&p.error) {
                *ec += pc;
            }
        }
        e
    };
    let mut heap: BinaryHeap<Worst> = panels.iter().enumerate().map(|(i, p)| Worst(ratio(&p.error), i)).collect();
    let mut total = total_err(&panels);
    let mut alive = panels.len();
    let mut converged = false;
    loop {
        if ratio(&total) <= 1.0 || alive.is_multiple_of(64) {
            total = total_err(&panels);
            if ratio(&total) <= 1.0 {
                converged = true;
                break;
            }
        }
        if alive >= max_panels {
            break;
        }
        let Some(Worst(_, idx)) = heap.pop() else { break };
        let p = panels[idx].clone();
        let mid = 0.5 * (p.lo + p.hi);
        if (p.hi - p.lo) <= 1e-13 * (1.0 + mid.abs()) {
            continue;
        }
        let left = eval_panel(&f, p.lo, mid, p.map);
        let right = eval_panel(&f, mid, p.hi, p.map);
        for (c, t) in total.iter_mut().enumerate() {
            *t += left.error[c] + right.error[c] - p.error[c];
        }
        panels[idx].split = true;
        for child in [left, right] {
            heap.push(Worst(ratio(&child.error), panels.len()));
            panels.push(child);
        }
        alive += 1;
    }
    panels.retain(|p| !p.split);
    let mut order: Vec<usize> = (0..panels.len()).collect();
    order.sort_by(|&i, &j| {
        let key = |p: &Panel<N>| {
            let (x, _) = p.map.apply(0.5 * (p.lo + p.hi));
            x
        };
        key(&panels[i]).total_cmp(&key(&panels[j]))
    });
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for c in 0..N {
        let vals: Vec<f64> = order.iter().map(|&i| panels[i].value[c]).collect();
        value[c] = pairwise_sum(&vals);
        error[c] = order.iter().map(|&i| panels[i].error[c]).sum();
    }
    VecIntegral { value, error, converged, panels: panels.len() }
}

/// Pairwise summation in fixed order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Fixed 15-point Kronrod rule on [a, b]; used where a cheap smooth estimate suffices.
pub fn kronrod15<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = WGK[7] * f(c);
    for j in 0..7 {
        s += WGK[j] * (f(c - h * XGK[j]) + f(c + h * XGK[j]));
    }
    s * h
}
