use super::*;
use crate::probes::*;
use crate::quad::closed::Quadratic;
use approx::assert_relative_eq;
use proptest::prelude::*;

fn rep(p: &ProbeFunction) -> FunctionalReport {
    report_with(p, &ReportOptions::default()).unwrap()
}

#[test]
fn constant_report() {
    let r = rep(&make_constant_one(1).unwrap());
    assert_relative_eq!(r.l2_norm2.value, 1.0, epsilon = 1e-12);
    assert!(r.fisher.value.abs() < 1e-15);
    assert!(r.entropy.value.abs() < 1e-12);
    assert!(r.deficit.value.abs() < 1e-12);
    assert!(r.converged());
    let r3 = rep(&make_constant_one(3).unwrap());
    assert_relative_eq!(r3.second_moment.value, 3.0, epsilon = 1e-12);
    assert_eq!(r3.first_moment.len(), 3);
}

#[test]
fn optimizer_report() {
    let r = rep(&make_gaussian_optimizer(&[1.0]).unwrap());
    assert_relative_eq!(r.fisher.value, 1.0, epsilon = 1e-10);
    assert_relative_eq!(r.entropy.value, 2.0, epsilon = 1e-10);
    assert!(r.deficit.value.abs() < 1e-10);
    assert_relative_eq!(r.first_moment[0], 2.0, epsilon = 1e-10);
    let r2 = rep(&make_gaussian_optimizer(&[0.3, -0.4]).unwrap());
    assert_relative_eq!(r2.first_moment[0], 0.6, epsilon = 1e-10);
    assert_relative_eq!(r2.first_moment[1], -0.8, epsilon = 1e-10);
    assert_relative_eq!(r2.second_moment.value, 2.0 + 4.0 * 0.25, epsilon = 1e-10);
    assert!(r2.deficit.value.abs() < 1e-10);
}

#[test]
fn prop42_report_matches_closed_form() {
    let p = make_prop42(1.0, 20).unwrap();
    let r = rep(&p);
    let c = closed_form(&p).unwrap();
    assert!((r.second_moment.value - 2.0).abs() < 0.05);
    for (q, e) in [
        (r.l2_norm2.value, c.l2_norm2),
        (r.second_moment.value, c.second_moment),
        (r.fisher.value, c.fisher),
        (r.entropy.value, c.entropy.unwrap()),
        (r.deficit.value, c.deficit.unwrap()),
    ] {
        assert!((q - e).abs() < 1e-9, "{q} vs {e}");
    }
    assert!(r.first_moment[0].abs() < 1e-12);
}

// mpmath oracle for the unit-norm bump e^{-1/(x(1-x))}/√N on (0, 1)
#[test]
fn bump_matches_oracle() {
    let r = rep(&default_bump().unwrap());
    assert_relative_eq!(r.l2_norm2.value, 1.0, epsilon = 1e-11);
    assert_relative_eq!(r.entropy.value, 0.811_050_711_569_282_35, epsilon = 1e-10);
    assert_relative_eq!(r.fisher.value, 22.574_716_483_809_808, max_relative = 1e-11);
    assert_relative_eq!(r.first_moment[0], 0.5, epsilon = 1e-11);
    assert_relative_eq!(r.second_moment.value, 0.261_685_567_746_012_77, epsilon = 1e-11);
    assert_relative_eq!(r.abs_entropy.value, 0.943_805_875_939_792_44, epsilon = 1e-10);
}

#[test]
fn transverse_composition_gaussian_mode() {
    // |v|²γ = N(0, ½ I₃); mpmath values of the relative entropy and its absolute version
    let r = rep(&make_gaussian_density(0.5, 3).unwrap());
    assert_relative_eq!(r.l2_norm2.value, 1.0, epsilon = 1e-12);
    assert_relative_eq!(r.entropy.value, 0.289_720_770_839_917_96, epsilon = 1e-11);
    assert_relative_eq!(r.abs_entropy.value, 0.570_813_416_312_583_40, epsilon = 1e-10);
    assert_relative_eq!(r.fisher.value, 0.375, epsilon = 1e-11);
    assert_relative_eq!(r.second_moment.value, 1.5, epsilon = 1e-11);
}

#[test]
fn transverse_composition_euclidean_mode() {
    let r = rep(&make_gaussian_density(0.5, 3).unwrap().to_euclidean().unwrap());
    assert_relative_eq!(r.entropy_raw.value, -3.217_094_828_774_100_3, epsilon = 1e-10);
    assert_relative_eq!(r.abs_entropy.value, 3.217_094_828_774_100_3, epsilon = 1e-10);
    assert_relative_eq!(r.fisher.value, 1.5, epsilon = 1e-11);
    let narrow = rep(&make_gaussian_density(0.01, 3).unwrap().to_euclidean().unwrap());
    assert_relative_eq!(narrow.entropy_raw.value, 2.650_939_679_368_118_8, epsilon = 1e-9);
    assert_relative_eq!(narrow.abs_entropy.value, 2.738_564_460_420_573_2, epsilon = 1e-9);
}

#[test]
fn radial_and_line_lifts_agree() {
    let q = Quadratic::new(-0.75 * crate::quad::special::LN_2PI, 0.0, -0.25);
    let piece = Piece::new(0.0, f64::INFINITY, Expr::PolyExp { poly: vec![1.0], exponent: q });
    let radial = ProbeFunction::new(3, Mode::Euclidean, Lift::Radial, vec![piece], Symmetry::Even, "radial").unwrap();
    let line = make_constant_one(3).unwrap().to_euclidean().unwrap();
    let (a, b) = (rep(&radial), rep(&line));
    for (x, y) in [
        (a.l2_norm2.value, b.l2_norm2.value),
        (a.fisher.value, b.fisher.value),
        (a.entropy.value, b.entropy.value),
        (a.abs_entropy.value, b.abs_entropy.value),
        (a.second_moment.value, b.second_moment.value),
    ] {
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
    assert!(a.deficit.value.abs() < 1e-9);
}

#[test]
fn gauss_euclid_identity() {
    // Fisher of v = ‖∇u‖² + ¼∫|x|²u² - (d/2)‖u‖²
    for u in [default_bump().unwrap(), make_example1(&default_bump().unwrap(), 3).unwrap()] {
        let v = euclid_to_gauss(&u, 1.0).unwrap();
        let (ru, rv) = (rep(&u), rep(&v));
        let rhs = ru.fisher.value + 0.25 * ru.second_moment.value - 0.5 * ru.l2_norm2.value;
        assert!((rv.fisher.value - rhs).abs() < 1e-8, "{} vs {rhs}", rv.fisher.value);
        assert_relative_eq!(rv.l2_norm2.value, 1.0, epsilon = 1e-10);
    }
    let v = make_tangent(0.4, 2).unwrap();
    let (rv, ru) = (rep(&v), rep(&gauss_to_euclid(&v).unwrap()));
    let rhs = ru.fisher.value + 0.25 * ru.second_moment.value - 1.0 * ru.l2_norm2.value;
    assert!((rv.fisher.value - rhs).abs() < 1e-8);
}

#[test]
fn report_converts_modes() {
    let r = report(&make_constant_one(1).unwrap(), Mode::Euclidean).unwrap();
    assert_eq!(r.mode, Mode::Euclidean);
    assert!(r.deficit.value.abs() < 1e-10);
    let back = report(&default_bump().unwrap(), Mode::Gaussian).unwrap();
    assert_eq!(back.mode, Mode::Gaussian);
}

#[test]
fn ckp_bound() {
    let r = rep(&make_constant_one(1).unwrap());
    assert!(ckp_lower_bound(&r).unwrap().abs() < 1e-20);
    for p in [make_gaussian_optimizer(&[0.5]).unwrap(), make_prop42(1.0, 10).unwrap()] {
        let r = rep(&p);
        assert!(ckp_lower_bound(&r).unwrap() <= r.entropy.value);
    }
    let e = rep(&default_bump().unwrap());
    assert!(matches!(ckp_lower_bound(&e), Err(Error::ModeMismatch { .. })));
}

#[test]
fn w2_values() {
    assert!(w2_distance_1d(&make_constant_one(1).unwrap()).unwrap() < 1e-5);
    let w = w2_distance_1d(&make_gaussian_optimizer(&[1.0]).unwrap()).unwrap();
    assert_relative_eq!(w, 2.0, epsilon = 1e-7);
    // mpmath oracle from m₂ + 1 - 2∫x Φ⁻¹(F(x)) dp with the closed-form CDF
    for (n, want) in [(10, 0.508_724_612_433_760_93), (20, 0.697_191_696_145_913_86), (40, 0.824_628_096_625_465_79)] {
        let w = w2_distance_1d(&make_prop42(1.0, n).unwrap()).unwrap();
        assert!((w * w - want).abs() < 1e-9, "n={n}: {} vs {want}", w * w);
    }
    assert!(w2_distance_1d(&default_bump().unwrap()).is_err());
}

#[test]
fn example2_entropy_diverges() {
    let p = make_example2(1.5, 1).unwrap();
    let r = rep(&p);
    assert!(r.l2_norm2.converged && r.fisher.converged);
    assert!(r.l2_norm2.value.is_finite() && r.fisher.value.is_finite());
    assert!(r.is_divergent("entropy") && r.is_divergent("second_moment") && r.is_divergent("deficit"));
    assert!(!r.is_divergent("l2_norm2") && !r.is_divergent("fisher"));
    let partials = &r.partials["entropy"];
    assert!(partials.windows(2).all(|w| w[1].1 < w[0].1));
    let r10 = report_truncated(&p, 10.0, &ReportOptions::default()).unwrap();
    let r100 = report_truncated(&p, 100.0, &ReportOptions::default()).unwrap();
    assert!(r100.entropy_raw.value < r10.entropy_raw.value);
    // the log-radius tail reproduces a direct truncation at e^8
    let direct = report_truncated(&p, 8f64.exp(), &ReportOptions::default()).unwrap();
    assert!((partials[1].1 - direct.entropy_raw.value).abs() < 1e-8);
}

#[test]
fn example2_norm_converges_in_higher_dimension() {
    let r = rep(&make_example2(1.5, 3).unwrap());
    assert!(r.l2_norm2.converged && r.fisher.converged);
    assert!(r.is_divergent("entropy"));
}

#[test]
fn example1_entropy_shift() {
    let base = default_bump().unwrap();
    let r1 = rep(&base);
    for n in [2usize, 4, 8] {
        let r = rep(&make_example1(&base, n).unwrap());
        let want = r1.entropy.value - r1.l2_norm2.value * (n as f64).ln();
        assert!((r.entropy.value - want).abs() < 1e-8);
        assert!((r.l2_norm2.value - 1.0).abs() < 1e-10);
        assert!((r.fisher.value - r1.fisher.value).abs() < 1e-8);
    }
}

#[test]
fn lp_integrals() {
    let e = lp_integral(&make_constant_one(2).unwrap(), 1.3, &ReportOptions::default()).unwrap();
    assert_relative_eq!(e.value, 1.0, epsilon = 1e-12);
    // ∫|e^{bx-b²}|^p dγ = e^{(p²/2 - p) b²}
    let b: f64 = 0.7;
    let p = 1.5;
    let e = lp_integral(&make_gaussian_optimizer(&[b]).unwrap(), p, &ReportOptions::default()).unwrap();
    assert_relative_eq!(e.value, ((p * p / 2.0 - p) * b * b).exp(), max_relative = 1e-11);
    let d3 = make_gaussian_density(0.5, 3).unwrap();
    let l1 = lp_integral(&d3, 1.0, &ReportOptions::default()).unwrap();
    // ∫ v dγ = (2σ/(1+σ²))^{d/2} for |v|²γ = N(0, σ² I)
    let s2: f64 = 0.5;
    assert_relative_eq!(l1.value, (2.0 * s2.sqrt() / (1.0 + s2)).powf(1.5), max_relative = 1e-11);
}

#[test]
fn moment_bound_for_mean_zero_probes() {
    for k in 1..=3 {
        let r = rep(&make_hermite(k).unwrap());
        assert!(r.second_moment.value <= 4.0 * r.fisher.value);
    }
}

fn battery() -> Vec<ProbeFunction> {
    let base = default_bump().unwrap();
    vec![
        make_constant_one(1).unwrap(),
        make_gaussian_optimizer(&[0.5]).unwrap(),
        make_tangent(0.1, 1).unwrap(),
        make_tangent(0.5, 2).unwrap(),
        make_hermite(2).unwrap(),
        make_gaussian_density(0.4, 2).unwrap(),
        make_prop42(2.0, 10).unwrap(),
        euclid_to_gauss(&make_example1(&base, 2).unwrap(), 3.0).unwrap(),
    ]
}

#[test]
fn jensen_and_decomposition_over_battery() {
    for p in battery() {
        let r = rep(&p);
        assert!(r.entropy.value >= -1e-10, "{}", p.label);
        assert!(r.abs_entropy.value + 1e-12 >= r.entropy_raw.value.abs());
        let recon = r.entropy_raw.value + 2.0 * r.entropy_below_one.value;
        assert!((r.abs_entropy.value - recon).abs() < 1e-8, "{}", p.label);
        assert!(r.fisher.value >= 0.0);
        if let Some(c) = closed_form(&p) {
            assert!((c.fisher - r.fisher.value).abs() < 1e-9, "{}", p.label);
            assert!((c.second_moment - r.second_moment.value).abs() < 1e-9, "{}", p.label);
        }
    }
}

#[test]
fn serializes_to_json() {
    let r = rep(&make_example2(1.5, 1).unwrap());
    let s = serde_json::to_string(&r).unwrap();
    let back: FunctionalReport = serde_json::from_str(&s).unwrap();
    assert_eq!(back, r);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn entropy_scaling_law(k in 0.3f64..3.0, eps in -0.5f64..0.5) {
        let u = make_tangent(eps, 1).unwrap().to_euclidean().unwrap();
        let uk = u.dilate(k).unwrap();
        let (a, b) = (rep(&u), rep(&uk));
        let want = a.entropy_raw.value + k.ln() * a.l2_norm2.value;
        prop_assert!((b.entropy_raw.value - want).abs() < 1e-8);
        prop_assert!((b.l2_norm2.value - a.l2_norm2.value).abs() < 1e-10);
    }

    #[test]
    fn normalized_probes_have_unit_mass(b in -2.0f64..2.0, n in 2usize..60) {
        prop_assert!((rep(&make_gaussian_optimizer(&[b]).unwrap()).l2_norm2.value - 1.0).abs() < 1e-10);
        prop_assert!((rep(&make_prop42(1.0, n).unwrap()).l2_norm2.value - 1.0).abs() < 1e-10);
    }
}
