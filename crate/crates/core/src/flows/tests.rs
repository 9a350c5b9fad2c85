use super::*;
use crate::functionals::closed_form;
use crate::probes::{make_gaussian_density, make_gaussian_optimizer};
use approx::assert_relative_eq;
use proptest::prelude::*;

fn ou(triples: &[(f64, f64, f64)]) -> GaussianMixture {
    GaussianMixture::from_triples(Mode::Gaussian, triples).unwrap()
}

fn two_bump() -> GaussianMixture {
    GaussianMixture::two_bump(Mode::Gaussian, 2.0, 0.5).unwrap()
}

fn cross_check_bump() -> GaussianMixture {
    GaussianMixture::two_bump(Mode::Gaussian, 1.5, 0.7).unwrap()
}

#[test]
fn gamma_is_stationary() {
    let g = ou(&[(1.0, 0.0, 1.0)]);
    for t in [0.0, 0.3, 5.0] {
        assert_eq!(g.ou_evolve(t).unwrap(), g);
    }
    let f = g.functionals();
    assert!(f.entropy.abs() < 1e-13 && f.fisher.abs() < 1e-13 && f.remainder.abs() < 1e-13);
    let trace = trace_functionals(&FlowState::Mixture(g), &[0.0, 1.0, 2.0]).unwrap();
    assert!(trace.points.iter().all(|p| p.entropy.abs() < 1e-13 && p.fisher.abs() < 1e-13 && p.remainder.abs() < 1e-13));
}

#[test]
fn mixtures_converge_to_gamma() {
    let m = ou(&[(0.3, -2.0, 0.2), (0.7, 3.0, 4.0)]).ou_evolve(40.0).unwrap();
    for c in &m.components {
        assert!(c.mean.abs() < 1e-15 && (c.variance - 1.0).abs() < 1e-15);
    }
}

#[test]
fn hermite_eigen_rule() {
    let h = HermiteSeries::new(vec![1.0, 0.5, 0.0, 0.0]).unwrap();
    let e = h.ou_evolve(1.0).unwrap();
    assert_eq!(e.coeffs[0], 1.0);
    assert_relative_eq!(e.coeffs[1], 0.5 * (-1.0f64).exp(), max_relative = 1e-15);
    assert_eq!(&e.coeffs[2..], &[0.0, 0.0]);
    assert!(matches!(h.functionals(), Err(Error::DensityFloor(_))));
    assert!(HermiteSeries::new(vec![0.9, 0.1]).is_err());
}

#[test]
fn hermite_coefficients_of_a_gaussian() {
    let (m, s2): (f64, f64) = (0.7, 1.8);
    let c = ou(&[(1.0, m, s2)]).hermite_coefficients(4);
    let a = (s2 - 1.0) / 2.0;
    // √k! Σ_j a^j m^{k-2j} / (j!(k-2j)!)
    let expected =
        [1.0, m, 2f64.sqrt() * (m * m / 2.0 + a), 6f64.sqrt() * (m.powi(3) / 6.0 + a * m), 24f64.sqrt() * (m.powi(4) / 24.0 + a * m * m / 2.0 + a * a / 2.0)];
    for (x, y) in c.iter().zip(expected) {
        assert_relative_eq!(*x, y, max_relative = 1e-14);
    }
    let g = ou(&[(1.0, 0.0, 1.0)]).hermite_coefficients(10);
    assert!(g[1..].iter().all(|&x| x == 0.0));
}

#[test]
fn series_reconstructs_the_density() {
    let mix = cross_check_bump();
    let h = HermiteSeries::from_mixture(&mix, 64).unwrap();
    for x in [-3.0, -1.0, 0.0, 0.4, 2.5] {
        let (lp, d1, _) = mix.log_density(x);
        let rho = (lp + 0.5 * x * x + 0.5 * LN_2PI).exp();
        let (r, r1, _) = h.eval(x);
        assert_relative_eq!(r, rho, max_relative = 1e-8);
        assert_relative_eq!(r1, rho * (d1 + x), epsilon = 1e-8, max_relative = 1e-7);
    }
}

#[test]
fn mixture_and_hermite_traces_agree() {
    let mix = cross_check_bump();
    let times = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0];
    let a = trace_functionals(&FlowState::Mixture(mix.clone()), &times).unwrap();
    let b = trace_functionals(&FlowState::Hermite(HermiteSeries::from_mixture(&mix, 64).unwrap()), &times).unwrap();
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!((p.entropy - q.entropy).abs() < 1e-5, "{p:?} {q:?}");
        assert!((p.fisher - q.fisher).abs() < 1e-5, "{p:?} {q:?}");
    }
    assert_eq!(b.method, Method::Hermite);
}

#[test]
fn narrow_two_bump_series_breaches_the_floor_at_time_zero() {
    let mix = two_bump();
    assert!(matches!(HermiteSeries::from_mixture(&mix, 64), Err(Error::DensityFloor(_))));
    let later = mix.ou_evolve(0.5).unwrap();
    let h = HermiteSeries::from_mixture(&later, 64).unwrap();
    let (f, g) = (later.functionals(), h.functionals().unwrap());
    assert!((f.entropy - g.entropy).abs() < 1e-5 && (f.fisher - g.fisher).abs() < 1e-5);
}

#[test]
fn gaussian_law_matches_probe_functionals() {
    for var in [0.3, 0.8, 2.5] {
        let f = ou(&[(1.0, 0.0, var)]).functionals();
        let c = closed_form(&make_gaussian_density(var, 1).unwrap()).unwrap();
        assert_relative_eq!(f.entropy, c.entropy.unwrap(), max_relative = 1e-11);
        assert_relative_eq!(f.fisher, c.fisher, max_relative = 1e-11);
        assert_relative_eq!(f.deficit(), c.deficit.unwrap(), epsilon = 1e-12, max_relative = 1e-9);
    }
}

#[test]
fn entropy_identity_on_two_bump() {
    let rows = identity_rows(&FlowState::Mixture(two_bump()), Identity::EntropyDecay, &interior_times(2.0, 10)).unwrap();
    assert_eq!(rows.len(), 10);
    for r in rows {
        assert!(r.rel_err <= 1e-4, "{r:?}");
    }
}

#[test]
fn fisher_identity_constant_is_one_half() {
    let state = FlowState::Mixture(two_bump());
    let rows = identity_rows(&state, Identity::FisherDecay, &interior_times(2.0, 6)).unwrap();
    for r in &rows {
        assert!(r.rel_err <= 1e-3, "{r:?}");
    }
    // with the factor 2 in place of ½ the right side would be four times larger
    for r in &rows {
        assert!((r.lhs - 4.0 * r.rhs).abs() > 0.5 * r.rhs.abs());
    }
}

#[test]
fn remainder_is_positive_and_decreasing() {
    let trace = trace_functionals(&FlowState::Mixture(two_bump()), &[0.0, 0.5, 1.0, 2.0, 4.0]).unwrap();
    let r: Vec<f64> = trace.points.iter().map(|p| p.remainder).collect();
    assert!(r.iter().all(|&x| x > 0.0));
    assert!(r.windows(2).all(|w| w[1] < w[0]));
    assert!(trace.points.iter().all(|p| p.fisher >= 0.0));
}

#[test]
fn entropy_contracts_exponentially() {
    for mix in [two_bump(), cross_check_bump(), ou(&[(0.2, -1.0, 0.3), (0.8, 0.5, 2.0)])] {
        let trace = trace_functionals(&FlowState::Mixture(mix), &[0.0, 0.5, 1.0, 2.0, 3.0]).unwrap();
        let e0 = trace.points[0].entropy;
        for p in &trace.points {
            assert!(p.entropy <= e0 * (-2.0 * p.t).exp() * (1.0 + 1e-9), "{p:?}");
        }
    }
}

#[test]
fn deficit_equals_integrated_remainder() {
    let g = deficit_via_flow(&FlowState::Mixture(ou(&[(1.0, 0.0, 1.0)])), 8.0, Slack::default()).unwrap();
    assert!(g.lhs.abs() < 1e-13 && g.rhs.abs() < 1e-12 && g.passed);
    let state = FlowState::Mixture(two_bump());
    let c8 = deficit_via_flow(&state, 8.0, Slack::default()).unwrap();
    assert!(c8.passed, "{c8:?}");
    assert!(c8.margin < c8.lhs / 10.0);
    let margins: Vec<f64> = [1.0, 2.0, 8.0].iter().map(|&t| deficit_via_flow(&state, t, Slack::default()).unwrap().margin).collect();
    assert!(margins.windows(2).all(|w| w[1] < w[0]));
    assert!(margins[2].abs() < 1e-7);
}

#[test]
fn manifold_density_has_zero_deficit_and_remainder() {
    for b in [0.3, -0.8] {
        let law = ou(&[(1.0, 2.0 * b, 1.0)]);
        let f = law.functionals();
        assert!(f.remainder.abs() < 1e-14);
        assert!(f.deficit().abs() < 1e-11);
        let c = closed_form(&make_gaussian_optimizer(&[b]).unwrap()).unwrap();
        assert_relative_eq!(f.entropy, c.entropy.unwrap(), max_relative = 1e-11);
        let check = deficit_via_flow(&FlowState::Mixture(law), 8.0, Slack::default()).unwrap();
        assert!(check.lhs.abs() < 1e-11 && check.rhs.abs() < 1e-12);
    }
}

#[test]
fn heat_monitor_single_gaussian_is_constant() {
    let g = GaussianMixture::gaussian(Mode::Euclidean, 0.4, 0.6).unwrap();
    let times: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
    let m = heat_renyi_monitor(&g, &times).unwrap().monitor();
    let expected = (std::f64::consts::PI * std::f64::consts::E / 2.0).ln();
    for x in &m {
        assert!((x - expected).abs() < 1e-9, "{x}");
    }
}

#[test]
fn heat_monitor_two_bump_strictly_decreases() {
    let g = GaussianMixture::two_bump(Mode::Euclidean, 2.0, 0.5).unwrap();
    let times: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
    let trace = heat_renyi_monitor(&g, &times).unwrap();
    let m = trace.monitor();
    assert!(m.windows(2).all(|w| w[1] < w[0]));
    assert!(is_non_increasing(&m, 1e-9));
}

#[test]
fn heat_identities() {
    let state = FlowState::Mixture(GaussianMixture::two_bump(Mode::Euclidean, 2.0, 0.5).unwrap());
    for r in identity_rows(&state, Identity::EntropyDecay, &interior_times(2.0, 10)).unwrap() {
        assert!(r.rel_err <= 1e-4, "{r:?}");
    }
    for r in identity_rows(&state, Identity::FisherDecay, &interior_times(2.0, 5)).unwrap() {
        assert!(r.rel_err <= 1e-3, "{r:?}");
    }
}

#[test]
fn heat_monitor_derivative() {
    let g = GaussianMixture::two_bump(Mode::Euclidean, 1.0, 0.4).unwrap();
    let t = 0.3;
    let f = |s: f64| g.heat_evolve(s).unwrap().functionals();
    let fd = (f(t + TIME_STEP).renyi_monitor() - f(t - TIME_STEP).renyi_monitor()) / (2.0 * TIME_STEP);
    let c = f(t);
    // -(1/(2𝓘)) [∫p|H|² - (∫p|∇log p|²)²], with ∫p|H|² = 2𝓡 and ∫p|∇log p|² = 4𝓘
    let exact = -(2.0 * c.remainder - 16.0 * c.fisher * c.fisher) / (2.0 * c.fisher);
    assert_relative_eq!(fd, exact, max_relative = 1e-5);
    assert!(exact < 0.0);
}

#[test]
fn frames_are_not_mixed() {
    let heat = GaussianMixture::gaussian(Mode::Euclidean, 0.0, 1.0).unwrap();
    assert!(matches!(heat.ou_evolve(1.0), Err(Error::ModeMismatch { .. })));
    assert!(ou_evolve(&FlowState::Mixture(heat.clone()), 1.0).is_err());
    assert!(HermiteSeries::from_mixture(&heat, 8).is_err());
    assert!(deficit_via_flow(&FlowState::Mixture(heat), 1.0, Slack::default()).is_err());
    let o = two_bump();
    assert!(heat_renyi_monitor(&o, &[0.0]).is_err());
    assert!(o.heat_evolve(1.0).is_err());
}

#[test]
fn validation() {
    assert!(GaussianMixture::from_triples(Mode::Gaussian, &[]).is_err());
    assert!(GaussianMixture::from_triples(Mode::Gaussian, &[(0.5, 0.0, 1.0)]).is_err());
    assert!(GaussianMixture::from_triples(Mode::Gaussian, &[(1.0, 0.0, 0.0)]).is_err());
    assert!(GaussianMixture::from_triples(Mode::Gaussian, &[(1.2, 0.0, 1.0), (-0.2, 0.0, 1.0)]).is_err());
    assert!(two_bump().ou_evolve(-1.0).is_err());
    assert!(identity_rows(&FlowState::Mixture(two_bump()), Identity::EntropyDecay, &[0.0]).is_err());
}

#[test]
fn csv_output() {
    let trace = trace_functionals(&FlowState::Mixture(two_bump()), &[0.0, 1.0]).unwrap();
    let csv = trace.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,E,I,R,G");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.00000000000e0,") && lines[1].ends_with(','));
    assert_eq!(trace_functionals(&FlowState::Mixture(two_bump()), &[0.0, 1.0]).unwrap().to_csv(), csv);
    let heat = heat_renyi_monitor(&GaussianMixture::two_bump(Mode::Euclidean, 1.0, 0.5).unwrap(), &[0.0]).unwrap();
    assert!(!heat.to_csv().lines().nth(1).unwrap().ends_with(','));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn functionals_are_nonnegative(w in 0.05f64..0.95, m1 in -3.0f64..3.0, m2 in -3.0f64..3.0, v1 in 0.2f64..3.0, v2 in 0.2f64..3.0, t in 0.0f64..2.0) {
        let mix = ou(&[(w, m1, v1), (1.0 - w, m2, v2)]).ou_evolve(t).unwrap();
        let f = mix.functionals();
        prop_assert!(f.fisher >= 0.0 && f.remainder >= 0.0 && f.entropy >= -1e-12);
        prop_assert!(f.deficit() >= -1e-10);
    }
}
