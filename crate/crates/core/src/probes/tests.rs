use super::*;
use crate::quad::kronrod::integrate_vec;
use crate::quad::special::ln_normal_pdf;
use approx::assert_relative_eq;
use proptest::prelude::*;

/// [∫f², ∫x f², ∫x² f², ∫f'²] against the probe's 1-D weight, by adaptive quadrature.
fn quad_moments(p: &ProbeFunction) -> [f64; 4] {
    let env = |x: f64| 2.0 * p.jet(x).ln_abs() + p.ln_weight(x);
    let bps = p.breakpoints();
    let (lo, hi) = (bps.first().copied().unwrap_or(0.0), bps.last().copied().unwrap_or(0.0));
    let mut pts = vec![f64::NEG_INFINITY];
    let mut left = march_tail(lo, -1.0, env, 75.0).unwrap();
    left.reverse();
    pts.extend(left);
    pts.extend(bps);
    pts.extend(march_tail(hi, 1.0, env, 75.0).unwrap());
    pts.push(f64::INFINITY);
    let r = integrate_vec(
        |x| {
            let j = p.jet(x);
            let w = p.ln_weight(x);
            let f2 = (2.0 * j.ln_abs() + w).exp();
            let g2 = (2.0 * j.ln_abs_deriv() + w).exp();
            [f2, x * f2, x * x * f2, g2]
        },
        &pts,
        [1e-11; 4],
        4000,
    );
    assert!(r.converged, "{}", p.label);
    r.value
}

fn assert_exact_matches_quadrature(p: &ProbeFunction) {
    let t = p.exact.clone().expect("exact table");
    let q = quad_moments(p);
    for (a, b) in [t.m0, t.m1, t.m2, t.fisher].iter().zip(q) {
        assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{}: exact {a} vs quad {b}", p.label);
    }
}

#[test]
fn constant_one_is_normalized_and_flat() {
    let p = make_constant_one(1).unwrap();
    let t = p.exact.unwrap();
    assert_relative_eq!(t.m0, 1.0, epsilon = 1e-15);
    assert_eq!(t.fisher, 0.0);
    assert_relative_eq!(t.m2, 1.0, epsilon = 1e-15);
    assert_eq!(t.entropy, Some(0.0));
}

#[test]
fn optimizer_has_unit_norm() {
    for b in [0.0, 0.5, 1.0, 2.0] {
        let p = make_gaussian_optimizer(&[b]).unwrap();
        let t = p.exact.clone().unwrap();
        assert_relative_eq!(t.m0, 1.0, epsilon = 1e-13);
        assert_relative_eq!(t.fisher, b * b, epsilon = 1e-12);
        assert_relative_eq!(t.entropy.unwrap(), 2.0 * b * b, epsilon = 1e-12);
        assert_relative_eq!(t.m2, 1.0 + 4.0 * b * b, epsilon = 1e-12);
        assert_exact_matches_quadrature(&p);
    }
    let p = make_gaussian_optimizer(&[0.0]).unwrap();
    assert_eq!(p.value(1.7), 1.0);
}

#[test]
fn optimizer_axis_follows_b() {
    let p = make_gaussian_optimizer(&[0.3, 0.4]).unwrap();
    match &p.lift {
        Lift::Line { axis, .. } => {
            assert_relative_eq!(axis[0], 0.6, epsilon = 1e-15);
            assert_relative_eq!(axis[1], 0.8, epsilon = 1e-15);
        }
        Lift::Radial => panic!("expected a line lift"),
    }
    let x = [0.7, -1.1];
    let want = (0.3 * 0.7 - 0.4 * 1.1 - 0.25f64).exp();
    assert_relative_eq!(p.value_at(&x), want, max_relative = 1e-14);
}

#[test]
fn tangent_closed_forms() {
    let p = make_tangent(0.1, 1).unwrap();
    let t = p.exact.clone().unwrap();
    assert_relative_eq!(t.m0, 1.0, epsilon = 1e-15);
    assert_relative_eq!(t.fisher, 0.009_900_990_099_009_901, max_relative = 1e-13);
    assert!(t.entropy.is_none());
    assert_exact_matches_quadrature(&p);
    let p0 = make_tangent(0.0, 2).unwrap();
    assert_eq!(p0.value(0.3), 1.0);
}

#[test]
fn hermite_probes_are_orthonormal() {
    for k in 1..=3 {
        let p = make_hermite(k).unwrap();
        let t = p.exact.clone().unwrap();
        assert_relative_eq!(t.m0, 1.0, epsilon = 1e-14);
        assert_relative_eq!(t.fisher, k as f64, epsilon = 1e-13);
        assert_exact_matches_quadrature(&p);
    }
    assert!(make_hermite(4).is_err());
}

#[test]
fn gaussian_density_profile() {
    let p = make_gaussian_density(0.5, 1).unwrap();
    let t = p.exact.clone().unwrap();
    assert_relative_eq!(t.m0, 1.0, epsilon = 1e-14);
    assert_relative_eq!(t.m2, 0.5, epsilon = 1e-14);
    let x = 0.8;
    let want = (-x * x / (2.0 * 0.5) - 0.5 * (2.0 * std::f64::consts::PI * 0.5f64).ln()).exp();
    assert_relative_eq!(p.value(x).powi(2) * ln_normal_pdf(x).exp(), want, max_relative = 1e-14);
}

#[test]
fn default_bump_is_normalized() {
    let p = default_bump().unwrap();
    // ∫₀¹ e^{-2/(x(1-x))} dx, 30-digit oracle
    let n: f64 = 9.698_664_153_358_823e-5;
    assert_relative_eq!(p.pieces[1].amp, 1.0 / n.sqrt(), max_relative = 1e-12);
    let q = quad_moments(&p);
    assert_relative_eq!(q[0], 1.0, epsilon = 1e-12);
    assert_relative_eq!(q[1], 0.5, epsilon = 1e-12);
    assert_relative_eq!(q[2], 0.261_685_567_746_012_77, epsilon = 1e-11);
    assert_relative_eq!(q[3], 22.574_716_483_809_808, max_relative = 1e-10);
    assert_eq!(p.support(), Some((0.0, 1.0)));
}

#[test]
fn example1_shifts_and_norms() {
    let base = default_bump().unwrap();
    let one = make_example1(&base, 1).unwrap();
    for x in [0.1, 0.5, 0.93] {
        assert_eq!(one.value(x), base.value(x));
    }
    for n in [2, 4, 8] {
        let p = make_example1(&base, n).unwrap();
        let q = quad_moments(&p);
        assert_relative_eq!(q[0], 1.0, epsilon = 1e-11);
        assert_relative_eq!(q[3], 22.574_716_483_809_808, max_relative = 1e-10);
        let s = (n as f64).sqrt();
        assert_relative_eq!(p.value(0.3 - (n - 1) as f64), base.value(0.3) / s, max_relative = 1e-12);
        assert_eq!(p.value(1.5), 0.0);
        assert_eq!(p.value(-(n as f64) - 0.5), 0.0);
    }
}

#[test]
fn example1_rejects_bad_base() {
    let base = default_bump().unwrap();
    let shifted =
        ProbeFunction::new(1, Mode::Euclidean, base.lift.clone(), base.pieces.iter().map(|p| p.shifted(-0.5)).collect(), Symmetry::None, "shifted").unwrap();
    assert!(make_example1(&shifted, 2).is_err());
    assert!(make_example1(&make_constant_one(1).unwrap(), 2).is_err());
    assert!(make_example1(&base, 0).is_err());
}

#[test]
fn example2_domain_and_tail() {
    assert!(make_example2(1.0, 1).is_err());
    assert!(make_example2(2.0, 1).is_err());
    let p = make_example2(1.5, 1).unwrap();
    match p.tails[1] {
        TailDescriptor::Algebraic { power, log_power, .. } => {
            assert_eq!(power, 0.5);
            assert_eq!(log_power, 0.75);
        }
        ref t => panic!("unexpected tail {t:?}"),
    }
    let x = 3.0f64;
    let want = (1.0 + x * x).powf(-0.25) * (2.0 + x * x).ln().powf(-0.75);
    assert_relative_eq!(p.value(x), want, max_relative = 1e-14);
    assert_eq!(p.value(-x), p.value(x));
    let p3 = make_example2(1.5, 3).unwrap();
    assert_relative_eq!(p3.value_at(&[1.0, 2.0, 2.0]), p3.value(3.0), max_relative = 1e-15);
}

// mpmath oracle, a = 1: (n, ‖g_n‖², Fisher, entropy, second moment) of the normalized probe.
const PROP42: [(usize, f64, f64, f64, f64); 4] = [
    (10, 1.009_999_289_240_98, 0.247_620_029_6, 0.432_641_590_1, 1.990_081_755),
    (20, 1.0025, 0.249_376_558_6, 0.479_586_382_3, 1.997_506_234),
    (40, 1.000_625, 0.249_843_847_6, 0.494_021_724_8, 1.999_375_39),
    (80, 1.000_156_25, 0.249_960_943_6, 0.498_288_192_7, 1.999_843_774),
];

#[test]
fn prop42_matches_oracle() {
    for &(n, g2, fisher, entropy, m2) in &PROP42 {
        assert_relative_eq!(prop42_g_norm2(1.0, n).unwrap(), g2, max_relative = 1e-12);
        let p = make_prop42(1.0, n).unwrap();
        let t = p.exact.clone().unwrap();
        assert_relative_eq!(t.m0, 1.0, epsilon = 1e-13);
        assert!(t.m1.abs() < 1e-13);
        assert_relative_eq!(t.fisher, fisher, max_relative = 1e-9);
        assert_relative_eq!(t.entropy.unwrap(), entropy, max_relative = 1e-9);
        assert_relative_eq!(t.m2, m2, max_relative = 1e-9);
        assert_exact_matches_quadrature(&p);
    }
}

#[test]
fn prop42_layout() {
    let p = make_prop42(1.0, 20).unwrap();
    assert_eq!(p.breakpoints(), vec![-10.0, -9.975, 9.975, 10.0]);
    let eps = prop42_eps(1.0, 20);
    let amp = p.value(0.0);
    assert_relative_eq!(p.value(9.975), amp, max_relative = 1e-14);
    assert_relative_eq!(p.value(10.0), amp * eps.sqrt(), max_relative = 1e-12);
    match p.tails[1] {
        TailDescriptor::ExpQuadratic { exponent, power, .. } => {
            assert_eq!(power, 0);
            assert_eq!(exponent.c1, 10.0);
            assert_eq!(exponent.c2, 0.0);
        }
        ref t => panic!("unexpected tail {t:?}"),
    }
    assert!(make_prop42(0.0, 10).is_err());
    assert!(make_prop42(1.0, 1).is_err());
}

#[test]
fn prop42_tails_stay_finite_in_log_space() {
    let p = make_prop42(1.0, 80).unwrap();
    let j = p.jet(400.0);
    assert!(j.ln_abs().is_finite());
    assert!(2.0 * j.ln_abs() + p.ln_weight(400.0) < -50_000.0);
    assert_eq!(p.value(400.0), f64::INFINITY);
}

#[test]
fn gns_optimizer_is_sech() {
    let p = make_gns_optimizer(4.0, 1.5).unwrap();
    for x in [0.0, 0.4, -2.0, 30.0] {
        assert_relative_eq!(p.value(x), 1.5 / x.cosh(), max_relative = 1e-14);
    }
    assert!(make_gns_optimizer(2.0, 1.0).is_err());
}

#[test]
fn construction_rejects_bad_layouts() {
    let e = Expr::PolyExp { poly: vec![1.0], exponent: Quadratic::ZERO };
    let line = Lift::Line { axis: vec![1.0], transverse_var: 1.0 };
    let gap = vec![Piece::new(f64::NEG_INFINITY, 0.0, e.clone()), Piece::new(1.0, f64::INFINITY, e.clone())];
    assert!(ProbeFunction::new(1, Mode::Gaussian, line.clone(), gap, Symmetry::None, "gap").is_err());
    let jump = vec![Piece::new(f64::NEG_INFINITY, 0.0, e.clone()), Piece::zero(0.0, f64::INFINITY)];
    assert!(ProbeFunction::new(1, Mode::Gaussian, line.clone(), jump, Symmetry::None, "jump").is_err());
    let grow = Expr::PolyExp { poly: vec![1.0], exponent: Quadratic::new(0.0, 0.0, 0.25) };
    let r = ProbeFunction::new(1, Mode::Gaussian, line.clone(), vec![Piece::new(f64::NEG_INFINITY, f64::INFINITY, grow)], Symmetry::Even, "grow");
    assert!(matches!(r, Err(Error::Inadmissible(_))));
    let flat = vec![Piece::new(f64::NEG_INFINITY, f64::INFINITY, e)];
    assert!(matches!(ProbeFunction::new(1, Mode::Euclidean, line, flat, Symmetry::Even, "flat"), Err(Error::Inadmissible(_))));
}

#[test]
fn mode_round_trip() {
    let one = make_constant_one(1).unwrap();
    let u = one.to_euclidean().unwrap();
    for x in [-1.3, 0.0, 2.2] {
        assert_relative_eq!(u.value(x), ln_normal_pdf(x).mul_add(0.5, 0.0).exp(), max_relative = 1e-15);
    }
    let back = u.to_gaussian(1.0).unwrap();
    for x in [-1.3, 0.0, 2.2] {
        assert_relative_eq!(back.value(x), 1.0, max_relative = 1e-14);
    }
    assert!(matches!(one.to_gaussian(1.0), Err(Error::ModeMismatch { .. })));
    assert!(matches!(u.to_euclidean(), Err(Error::ModeMismatch { .. })));
}

#[test]
fn dilation_preserves_norm() {
    let u = make_gaussian_density(1.0, 2).unwrap().to_euclidean().unwrap();
    let k = 1.7;
    let v = u.dilate(k).unwrap();
    let t = v.exact.clone().unwrap();
    assert_relative_eq!(t.m0, 1.0, epsilon = 1e-14);
    assert_relative_eq!(v.value_at(&[0.2, 0.5]), k * u.value_at(&[0.2 * k, 0.5 * k]), max_relative = 1e-14);
}

#[test]
fn spec_json_round_trip() {
    let spec = ProbeSpec::from_json(r#"{"family":"prop42","a":1.0,"n":20}"#).unwrap();
    assert_eq!(spec, ProbeSpec::Prop42 { a: 1.0, n: 20 });
    let p = spec.build().unwrap();
    assert_eq!(p, make_prop42(1.0, 20).unwrap());
    let s = serde_json::to_string(&ProbeSpec::Constant { d: 3 }).unwrap();
    assert_eq!(s, r#"{"family":"constant","d":3}"#);
    assert!(ProbeSpec::from_json(r#"{"family":"nope"}"#).is_err());
    let custom = ProbeSpec::Custom { probe: make_tangent(0.2, 1).unwrap() };
    let back: ProbeSpec = serde_json::from_str(&serde_json::to_string(&custom).unwrap()).unwrap();
    assert_eq!(back.build().unwrap(), make_tangent(0.2, 1).unwrap());
}

#[test]
fn counterexample_spec_domains() {
    let c: CounterexampleSpec = serde_json::from_str(r#"{"family":"prop42","a":2.0,"n":10}"#).unwrap();
    assert_eq!(c.build().unwrap(), make_prop42(2.0, 10).unwrap());
    let c: CounterexampleSpec = serde_json::from_str(r#"{"family":"example1","n":4}"#).unwrap();
    assert_eq!(c.build().unwrap().label, "example1(n=4)");
    assert!(CounterexampleSpec::Example2 { a: 2.5, d: 1 }.build().is_err());
    assert!(CounterexampleSpec::Prop42 { a: -1.0, n: 10, cutoff: CutoffRecipe::LogLinear }.build().is_err());
}

#[test]
fn march_tail_stops_on_decay() {
    let pts = march_tail(0.0, 1.0, |x| -x * x, 75.0).unwrap();
    let last = *pts.last().unwrap();
    assert!(last * last > 75.0 && last < 40.0);
    assert!(march_tail(0.0, 1.0, |x| x, 75.0).is_none());
}

#[test]
fn sphere_area() {
    assert_relative_eq!(ln_sphere_area(1).exp(), 2.0, max_relative = 1e-14);
    assert_relative_eq!(ln_sphere_area(2).exp(), 2.0 * std::f64::consts::PI, max_relative = 1e-14);
    assert_relative_eq!(ln_sphere_area(3).exp(), 4.0 * std::f64::consts::PI, max_relative = 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prop42_is_even_and_continuous(a in 0.1f64..4.0, n in 2usize..90, x in 0.0f64..60.0) {
        let p = make_prop42(a, n).unwrap();
        prop_assert_eq!(p.value(x), p.value(-x));
        prop_assert_eq!(p.derivative(x), -p.derivative(-x));
        for b in p.breakpoints() {
            let l = p.pieces[p.piece_index(b) - 1].jet(b).value();
            let r = p.value(b);
            prop_assert!((l - r).abs() <= 1e-11 * r.abs().max(1e-300));
        }
    }

    #[test]
    fn derivative_matches_finite_difference(eps in -0.8f64..0.8, x in -4.0f64..4.0) {
        let p = make_tangent(eps, 1).unwrap().to_euclidean().unwrap();
        let h = 1e-6;
        let fd = (p.value(x + h) - p.value(x - h)) / (2.0 * h);
        prop_assert!((fd - p.derivative(x)).abs() < 1e-8);
    }

    #[test]
    fn optimizers_are_normalized(b in -2.5f64..2.5) {
        let t = make_gaussian_optimizer(&[b]).unwrap().exact.unwrap();
        prop_assert!((t.m0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_round_trip_at_any_lambda(lambda in 0.2f64..5.0, x in -3.0f64..3.0) {
        let u = make_gaussian_density(0.6, 1).unwrap().to_euclidean().unwrap();
        let v = u.to_gaussian(lambda).unwrap();
        let t = v.exact.clone().unwrap();
        prop_assert!((t.m0 - 1.0).abs() < 1e-12);
        let want = lambda.powf(-0.25) * (-0.5 * ln_normal_pdf(x)).exp() * u.value(x / lambda.sqrt());
        prop_assert!((v.value(x) - want).abs() <= 1e-12 * want.abs().max(1e-300));
    }
}
