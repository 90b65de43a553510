use ancientflow::exact::{euclidean_sphere, hyperbolic_sphere, pinching_witness, sphere_cap, WitnessProfile};
use ancientflow::{SpaceForm, UmbilicalSolution};

/// Classical RK4 for `dr/dt = -n cs(r)/sn(r)` from `(t0, r0)` to `t1`.
fn integrate(space: SpaceForm, n: usize, t0: f64, r0: f64, t1: f64, steps: usize) -> f64 {
    let nn = n as f64;
    let rhs = |r: f64| match space {
        SpaceForm::Hyperbolic => -nn / r.tanh(),
        SpaceForm::Sphere => -nn / r.tan(),
        SpaceForm::Euclidean => -nn / r,
    };
    let dt = (t1 - t0) / steps as f64;
    let mut r = r0;
    for _ in 0..steps {
        let k1 = rhs(r);
        let k2 = rhs(r + 0.5 * dt * k1);
        let k3 = rhs(r + 0.5 * dt * k2);
        let k4 = rhs(r + dt * k3);
        r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    r
}

#[test]
fn hyperbolic_radius_matches_integration() {
    for n in [2usize, 3, 5] {
        let (t0, t1) = (-5.0, -0.1);
        let r0 = (n as f64 * -t0).exp().acosh();
        let r = integrate(SpaceForm::Hyperbolic, n, t0, r0, t1, 20_000);
        let (closed, _) = hyperbolic_sphere(t1, n).unwrap();
        assert!((r - closed).abs() < 1e-8, "n = {n}: {r} vs {closed}");
        // naive formula as a second oracle where it is well conditioned
        assert!((closed - (-(n as f64) * t1).exp().acosh()).abs() < 1e-12);
    }
}

#[test]
fn hyperbolic_mean_curvature_values() {
    let (r, mean) = hyperbolic_sphere(-1.0f64, 2).unwrap();
    assert!((mean - 2.0 / r.tanh()).abs() < 1e-12);
    assert!((mean - 2.018_571_138_566_857).abs() < 1e-12);
    assert!((mean - 2.01849).abs() < 1e-3);
    assert!((r - 2.688_536).abs() < 1e-5);
    let mut previous = f64::INFINITY;
    for t in [-0.5, -1.0, -3.0, -10.0, -40.0] {
        let (_, m) = hyperbolic_sphere(t, 3).unwrap();
        assert!(m >= 3.0 && m <= previous);
        previous = m;
    }
    assert!((hyperbolic_sphere(-40.0f64, 3).unwrap().1 - 3.0).abs() < 1e-15);
}

#[test]
fn sphere_cap_matches_integration() {
    for (n, c) in [(2usize, 0.1), (3, 0.3), (4, 0.02)] {
        let sol = UmbilicalSolution::sphere(n, c);
        let t_end = sol.extinction_time();
        let (t0, t1) = (t_end - 2.0, t_end - 0.05);
        let r0 = (c * (n as f64 * t0).exp()).acos();
        let r = integrate(SpaceForm::Sphere, n, t0, r0, t1, 20_000);
        let closed = sphere_cap(t1, n, c).unwrap();
        assert!((r - closed).abs() < 1e-8, "n = {n}: {r} vs {closed}");
    }
}

#[test]
fn euclidean_matches_integration() {
    for n in [2usize, 3, 6] {
        let (t0, t1) = (-2.0, -0.05);
        let r = integrate(SpaceForm::Euclidean, n, t0, (4.0 * n as f64).sqrt(), t1, 20_000);
        let closed = euclidean_sphere(t1, n).unwrap();
        assert!((r - closed).abs() < 1e-8, "n = {n}: {r} vs {closed}");
    }
    assert!((euclidean_sphere(-1.0f64, 2).unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn ode_residuals_vanish() {
    let families = [
        UmbilicalSolution::hyperbolic(2),
        UmbilicalSolution::hyperbolic(4),
        UmbilicalSolution::euclidean(3),
        UmbilicalSolution::sphere(2, 0.5),
    ];
    for sol in families {
        let t_end = sol.extinction_time();
        for k in 1..50 {
            let t = t_end - 0.1 * k as f64;
            let res = sol.ode_residual(t).unwrap();
            assert!(res < 1e-10 * (1.0 + sol.mean_curvature(t).unwrap()), "{sol:?} at {t}: {res}");
        }
    }
}

#[test]
fn witness_holds_along_hyperbolic_family() {
    let sol = UmbilicalSolution::<f64>::hyperbolic(3);
    for t in [-4.0, -1.0, -0.2] {
        let rec = pinching_witness(&sol, t, &WitnessProfile::Hyperbolic { k: 0.1, eps: 0.5 }).unwrap();
        assert!(rec.holds && rec.lhs.abs() < 1e-12);
    }
}

#[test]
fn domain_errors() {
    assert!(hyperbolic_sphere(0.0f64, 2).is_err());
    assert!(euclidean_sphere(1.0f64, 2).is_err());
    assert!(sphere_cap(1.0f64, 2, 0.9).is_err());
    assert!(sphere_cap(-1.0f64, 2, 1.5).is_err());
}

#[test]
fn single_precision_family() {
    let (r, mean) = hyperbolic_sphere(-1.0f32, 2).unwrap();
    assert!((mean - 2.018_571_f32).abs() < 1e-5);
    assert!((r - 2.688_536_f32).abs() < 1e-5);
}
