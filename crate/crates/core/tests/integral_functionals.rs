use std::f64::consts::PI;

use ancientflow::flow::{curvature_fields, fit_order, run, Fixture, RunConfig};
use ancientflow::functionals::{
    decay_monitor_2d, gauss_bonnet_combination, gauss_bonnet_residual, integrals, regularised_divergence_check,
    sobolev_check, u_moment_monitor, SectionFourConstants, U_EPSILONS,
};
use ancientflow::SpaceForm;
use num_rational::Ratio;

/// Composite Simpson rule on `[lo, hi]`.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, m: usize) -> f64 {
    let h = (hi - lo) / m as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..m {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `(area, ∫|h̊|², ∫|H|²)` of the spheroid with equatorial radius `a` and
/// polar radius `c`, integrated in the parameter `φ` of `(a sin φ, c cos φ)`.
fn spheroid_oracle(a: f64, c: f64) -> (f64, f64, f64) {
    let q = |p: f64| (a * a * p.cos().powi(2) + c * c * p.sin().powi(2)).sqrt();
    let k = |p: f64| (a * c / q(p).powi(3), c / (a * q(p)));
    let da = |p: f64| 2.0 * PI * a * p.sin() * q(p);
    let area = simpson(da, 0.0, PI, 20_000);
    let ring = simpson(|p| { let (k1, k2) = k(p); 0.5 * (k1 - k2).powi(2) * da(p) }, 0.0, PI, 20_000);
    let mean = simpson(|p| { let (k1, k2) = k(p); (k1 + k2).powi(2) * da(p) }, 0.0, PI, 20_000);
    (area, ring, mean)
}

#[test]
fn spheroid_area_matches_closed_form() {
    let (a, c) = (1.0f64, 1.2f64);
    let e = (1.0 - a * a / (c * c)).sqrt();
    let closed = 2.0 * PI * a * a * (1.0 + c / (a * e) * e.asin());
    assert!((spheroid_oracle(a, c).0 - closed).abs() < 1e-10 * closed);
}

#[test]
fn spheroid_integrals_match_dense_quadrature() {
    let (a, c) = (1.0, 1.2);
    let (area, ring, mean) = spheroid_oracle(a, c);
    let mut errs = Vec::new();
    for intervals in [16usize, 32, 64, 128] {
        let s = Fixture::Spheroid { equatorial: a, polar: c }.initial_state(SpaceForm::Euclidean, 2, -1.0, intervals).unwrap();
        let f = curvature_fields(&s).unwrap();
        let rec = integrals(&s, &f, &[]).unwrap();
        errs.push((PI / intervals as f64, (rec.ring_l2 - ring).abs() / ring));
        if intervals == 128 {
            assert!((rec.vol - area).abs() < 1e-6 * area);
            assert!((rec.ring_l2 - ring).abs() < 1e-6 * ring, "{} vs {ring}", rec.ring_l2);
            assert!((rec.mean_sq_integral - mean).abs() < 1e-6 * mean);
            assert!(rec.ring_l2 > 0.0);
        }
    }
    let order = fit_order(&errs[..3]).unwrap();
    assert!(order > 1.7, "order {order}: {errs:?}");
}

#[test]
fn gauss_bonnet_on_fixtures() {
    let cases: [(SpaceForm, Fixture<f64>); 5] = [
        (SpaceForm::Euclidean, Fixture::Round { radius: 0.7 }),
        (SpaceForm::Euclidean, Fixture::Spheroid { equatorial: 1.0, polar: 1.2 }),
        (SpaceForm::Euclidean, Fixture::Spheroid { equatorial: 1.0, polar: 0.6 }),
        (SpaceForm::Sphere, Fixture::Round { radius: 1.0 }),
        (SpaceForm::Sphere, Fixture::Perturbed { radius: 1.2, amplitude: 0.05, mode: 2 }),
    ];
    for (space, fixture) in cases {
        let mut residuals = Vec::new();
        for intervals in [64usize, 256] {
            let s = fixture.initial_state(space, 2, -1.0, intervals).unwrap();
            residuals.push(gauss_bonnet_residual(&curvature_fields(&s).unwrap()).unwrap());
        }
        assert!(residuals[1] <= 1e-6, "{space:?} {fixture:?}: {residuals:?}");
        assert!(residuals[1] <= residuals[0].max(1e-10), "{space:?} {fixture:?}: {residuals:?}");
    }
    let s = Fixture::Round { radius: 1.3 }.initial_state(SpaceForm::Euclidean, 2, -1.0, 32).unwrap();
    assert!(gauss_bonnet_residual(&curvature_fields(&s).unwrap()).unwrap() < 1e-12);
}

#[test]
fn gauss_bonnet_combination_reproduces_ring_integral() {
    for space in [SpaceForm::Euclidean, SpaceForm::Sphere] {
        let s = Fixture::Perturbed { radius: 1.0, amplitude: 0.1, mode: 2 }.initial_state(space, 2, -1.0, 256).unwrap();
        let f = curvature_fields(&s).unwrap();
        let rec = integrals(&s, &f, &[]).unwrap();
        let c = space.curvature() as f64;
        let expected = rec.ring_l2 - 4.0 * PI + c * rec.vol;
        assert!((gauss_bonnet_combination(&f).unwrap() - expected).abs() < 1e-6 * (1.0 + expected.abs()));
    }
}

#[test]
fn sobolev_b_sweep() {
    let s = Fixture::Spheroid { equatorial: 1.0f64, polar: 1.2 }.initial_state(SpaceForm::Euclidean, 2, -1.0, 128).unwrap();
    let f = curvature_fields(&s).unwrap();
    // bump concentrated near the north pole
    let bump: Vec<f64> = f.theta.iter().map(|&t| (-(t / 0.4).powi(2)).exp()).collect();
    let slacks: Vec<f64> = [0.01, 0.05, 0.1, 0.5, 1.0]
        .iter()
        .map(|&b| sobolev_check(&f, &bump, b).unwrap().slack)
        .collect();
    for w in slacks.windows(2) {
        assert!(w[1] > w[0]);
    }
    assert!(slacks[0] < 0.0 && *slacks.last().unwrap() > 0.0);
    // sphere ambient uses the composed immersion
    let sph = Fixture::Round { radius: 1.0f64 }.initial_state(SpaceForm::Sphere, 2, -1.0, 64).unwrap();
    let fs = curvature_fields(&sph).unwrap();
    let ones = vec![1.0; fs.len()];
    let r = sobolev_check(&fs, &ones, 1.0).unwrap();
    let expected_h = (fs.mean_sq[0] + 4.0).sqrt();
    assert!((r.mean_term - expected_h * fs.volume()).abs() < 1e-10 * r.mean_term);
}

#[test]
fn decay_monitor_on_small_perturbation() {
    let mut cfg = RunConfig::new(
        SpaceForm::Euclidean,
        2,
        Fixture::Perturbed { radius: 1.0, amplitude: 0.01, mode: 2 },
        -1.0,
        -0.9,
    );
    cfg.intervals = 64;
    cfg.emit_every = 20;
    let out = run(&cfg).unwrap();
    let c = SectionFourConstants::c_surface(SpaceForm::Euclidean, 1.0).unwrap();
    assert!(out.functionals[0].ring_l2 < c);
    let report = decay_monitor_2d(&out.functionals, c, 1e-8).unwrap();
    assert_eq!(report.violations, 0, "min slack {}", report.min_slack);
    assert!(report.rows.iter().all(|r| r.vol_ok && r.log_ok));
    assert!((report.c_bar - (2.0 * c + 16.0 * PI)).abs() < 1e-14);
    assert!(decay_monitor_2d(&out.functionals[..2], c, 1e-8).is_err());
}

#[test]
fn round_sphere_decay_is_trivial() {
    let mut cfg = RunConfig::new(SpaceForm::Euclidean, 2, Fixture::Round { radius: 1.0f64 }, -1.0, -0.9);
    cfg.intervals = 32;
    let out = run(&cfg).unwrap();
    let report = decay_monitor_2d(&out.functionals, 1.0 / 60.0, 1e-8).unwrap();
    assert!(report.rows.iter().all(|r| r.ring_l2.abs() < 1e-20));
    assert_eq!(report.violations, 0);
}

fn three_dim_run(space: SpaceForm, radius: f64, amplitude: f64) -> ancientflow::flow::RunOutput<f64> {
    let mut cfg = RunConfig::new(space, 3, Fixture::Perturbed { radius, amplitude, mode: 2 }, -1.0, -0.95);
    cfg.intervals = 128;
    cfg.emit_every = 25;
    cfg.j_orders = vec![9.0];
    run(&cfg).unwrap()
}

#[test]
fn critical_moment_is_nonincreasing() {
    for (space, radius, amplitude) in [(SpaceForm::Euclidean, 1.0, 0.3), (SpaceForm::Sphere, 1.3, 0.2)] {
        let out = three_dim_run(space, radius, amplitude);
        let j: Vec<f64> = out.functionals.iter().map(|r| r.j_moments[0].value).collect();
        assert!(j[0] > 0.0, "U+ must be active initially");
        for w in j.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{space:?}: {j:?}");
        }
        let q = if space == SpaceForm::Sphere { Ratio::new(3, 2) } else { Ratio::new(9, 2) };
        let report = u_moment_monitor(&out.trajectory, q, 1.0).unwrap();
        assert!(report.critical_max_increase <= 1e-9 * j[0]);
        assert!(report.rows.iter().all(|r| r.moment >= 0.0 && r.critical_moment >= 0.0));
    }
}

#[test]
fn moment_monitor_preconditions() {
    let out = three_dim_run(SpaceForm::Euclidean, 1.0, 0.0);
    let report = u_moment_monitor(&out.trajectory, Ratio::new(3, 2), 1.0).unwrap();
    assert!(report.rows.iter().all(|r| r.moment == 0.0 && r.rhs == 0.0 && r.slack == 0.0));
    let sph = three_dim_run(SpaceForm::Sphere, 1.3, 0.2);
    assert!(u_moment_monitor(&sph.trajectory, Ratio::new(9, 2), 1.0).is_err());
    assert!(u_moment_monitor(&out.trajectory[..2], Ratio::new(3, 2), 1.0).is_err());
}

#[test]
fn regularised_terms_converge_in_eps() {
    let s = Fixture::Perturbed { radius: 1.0, amplitude: 0.3, mode: 2 }.initial_state(SpaceForm::Euclidean, 3, -1.0, 256).unwrap();
    let f = curvature_fields(&s).unwrap();
    let terms = regularised_divergence_check(&f, 1.5, 1.0, &U_EPSILONS).unwrap();
    assert_eq!(terms.len(), 3);
    let d01 = (terms[0].lhs - terms[1].lhs).abs();
    let d12 = (terms[1].lhs - terms[2].lhs).abs();
    assert!(d12 <= d01, "{terms:?}");
    assert!(terms.iter().all(|t| t.gradient_bound <= 0.0));
    let s2 = Fixture::Round { radius: 1.0 }.initial_state(SpaceForm::Euclidean, 2, -1.0, 32).unwrap();
    assert!(regularised_divergence_check(&curvature_fields(&s2).unwrap(), 1.5, 1.0, &U_EPSILONS).is_err());
}

#[test]
fn exact_constant_identities() {
    for n in 3..=12usize {
        let k = SectionFourConstants::new(n);
        let ni = n as i64;
        for q in k.q_candidates().unwrap() {
            assert_eq!(k.a2(q), Ratio::from_integer(ni * ni) / 4 + q * 4 * ni);
            assert_eq!(k.a1_times_b_sq(q), (q - 1) / (q * 8));
        }
        assert_eq!(k.d1(), Ratio::new(3 * ni * ni + 2 * ni, 4));
        assert_eq!(k.d2_times_b_sq(), Ratio::new(ni - 2, 8 * ni));
        assert_eq!(k.d3(), Ratio::new(ni * ni + 10 * ni, 4));
        let b = 0.7f64;
        let expected = ((ni - 2) as f64 / (8.0 * ni as f64 * b * b) / ((ni * ni + 10 * ni) as f64 / 4.0)).powf(n as f64 / 2.0);
        assert!((k.c_sphere(b).unwrap() - expected).abs() < 1e-14 * expected);
        let (cands, min) = k.c_euclidean(b).unwrap();
        assert_eq!(min, cands[0].1.min(cands[1].1));
        assert!(min > 0.0);
    }
    let c: f64 = SectionFourConstants::c_surface(SpaceForm::Sphere, 2.0).unwrap();
    assert!((c - 1.0 / 216.0).abs() < 1e-16);
}
