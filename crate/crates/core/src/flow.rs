//! Mean curvature flow of geodesic spheres (an ODE for the radius) and of
//! rotationally symmetric hypersurfaces (a 1-D PDE for the profile).
//!
//! A rotational hypersurface in a space form with warping function `S` is the
//! radial graph `r = u(θ)`, `θ ∈ [0, π]`, in geodesic polar coordinates
//! `dr² + S(r)²(dθ² + sin²θ dΩ²)`. The profile is sampled at `θ_j = jπ/N`.
//! Every node field is even about both poles. Profile derivatives use
//! fourth-order centered differences and derived fields second-order ones,
//! both with reflected ghost nodes; `cot θ · u_θ` is replaced by its limit
//! `u_θθ` at the poles.
//!
//! With `W = sqrt(1 + u_θ²/S²)` the principal curvatures are
//!
//! ```text
//! κ₁ = S'(S² + 2u_θ²)/(S³W³) - u_θθ/(S²W³)      (profile)
//! κ₂ = (S' - cot θ · u_θ/S)/(SW)                 (rotation, multiplicity n-1)
//! ```
//!
//! and the flow is `u_t = -H W`, `H = κ₁ + (n-1)κ₂`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact::{SpaceForm, UmbilicalSolution};
use crate::functionals::{self, FunctionalRecord};
use crate::pinching::{f_ratio, RatioProfile};
use crate::scalar::Real;

/// Hard limit enforced by [`step`]: `dt <= STABILITY_FACTOR · dx²/n`.
pub const STABILITY_FACTOR: f64 = 0.4;
/// Default fraction of `dx²/n` used by [`TimeStep::Cfl`].
pub const DEFAULT_CFL: f64 = 0.2;
/// A run stops once the smallest radius of curvature spans fewer than this
/// many grid spacings.
pub const EXTINCTION_SPACINGS: f64 = 10.0;
/// A run also stops once the scale falls below this fraction of its start.
pub const COLLAPSE_FRACTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Geometry<T> {
    /// Geodesic sphere of the given radius.
    Umbilical { radius: T },
    /// Radial graph sampled at `θ_j = jπ/N`, `j = 0..=N`.
    Profile { u: Vec<T> },
}

/// Immutable snapshot of the flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState<T> {
    pub space: SpaceForm,
    pub n: usize,
    pub t: T,
    pub geometry: Geometry<T>,
}

impl<T: Real> FlowState<T> {
    pub fn umbilical(space: SpaceForm, n: usize, t: T, radius: T) -> Result<Self> {
        let state = Self { space, n, t, geometry: Geometry::Umbilical { radius } };
        state.validate()?;
        Ok(state)
    }

    pub fn profile(space: SpaceForm, n: usize, t: T, u: Vec<T>) -> Result<Self> {
        let state = Self { space, n, t, geometry: Geometry::Profile { u } };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Shape("dimension n must be at least 1".into()));
        }
        match &self.geometry {
            Geometry::Umbilical { radius } => check_radius(self.space, self.t, 0, *radius),
            Geometry::Profile { u } => {
                if u.len() < 5 {
                    return Err(Error::Shape(format!("profile needs at least 5 nodes, got {}", u.len())));
                }
                u.iter().enumerate().try_for_each(|(j, &r)| check_radius(self.space, self.t, j, r))
            }
        }
    }

    /// Number of grid intervals `N`; zero in umbilical mode.
    pub fn intervals(&self) -> usize {
        match &self.geometry {
            Geometry::Umbilical { .. } => 0,
            Geometry::Profile { u } => u.len() - 1,
        }
    }

    pub fn dtheta(&self) -> T {
        match self.intervals() {
            0 => T::zero(),
            m => T::PI() / T::from_usize_lossy(m),
        }
    }

    pub fn radii(&self) -> Vec<T> {
        match &self.geometry {
            Geometry::Umbilical { radius } => vec![*radius],
            Geometry::Profile { u } => u.clone(),
        }
    }

    /// Smallest geodesic distance of the hypersurface to the rotation
    /// centre (or, in the sphere, to its antipode).
    pub fn scale(&self) -> T {
        self.radii()
            .into_iter()
            .map(|r| if self.space == SpaceForm::Sphere { r.min(T::PI() - r) } else { r })
            .fold(T::infinity(), T::min)
    }

    /// Smallest arc-length spacing `min_j S(u_j) W_j dθ`, or `S(r)` for a
    /// geodesic sphere.
    pub fn min_spacing(&self) -> T {
        match &self.geometry {
            Geometry::Umbilical { radius } => self.space.sn(*radius),
            Geometry::Profile { u } => {
                let h = self.dtheta();
                let (ud, _) = profile_derivatives(u, h);
                u.iter()
                    .zip(&ud)
                    .map(|(&r, &rt)| {
                        let s = self.space.sn(r);
                        (s * s + rt * rt).sqrt() * h
                    })
                    .fold(T::infinity(), T::min)
            }
        }
    }

    /// Largest `dt` accepted by [`step`].
    pub fn stability_limit(&self) -> T {
        let dx = self.min_spacing();
        T::lit(STABILITY_FACTOR) * dx * dx / T::from_usize_lossy(self.n)
    }
}

fn check_radius<T: Real>(space: SpaceForm, t: T, j: usize, r: T) -> Result<()> {
    if space.valid_radius(r) {
        Ok(())
    } else {
        Err(Error::Immersion {
            t: t.to_f64_lossy(),
            detail: format!("node {j}: radius {r} leaves the polar chart of the {} ambient", space.label()),
        })
    }
}

/// Fourth-order centered first difference of an even node field; zero at
/// the poles.
pub fn d_theta<T: Real>(q: &[T], h: T) -> Vec<T> {
    profile_derivatives(q, h).0
}

/// Fourth-order centered second difference with reflected ghost nodes.
pub fn d2_theta<T: Real>(q: &[T], h: T) -> Vec<T> {
    profile_derivatives(q, h).1
}

/// Node `j + k` of an even profile, reflecting across the poles.
fn reflected<T: Copy>(q: &[T], j: usize, k: isize) -> T {
    let m = (q.len() - 1) as isize;
    let mut i = j as isize + k;
    if i < 0 {
        i = -i;
    }
    if i > m {
        i = 2 * m - i;
    }
    q[i as usize]
}

/// Fourth-order centered first and second differences of the profile.
fn profile_derivatives<T: Real>(u: &[T], h: T) -> (Vec<T>, Vec<T>) {
    let m = u.len() - 1;
    let (c8, c12, c16, c30) = (T::lit(8.0), T::lit(12.0), T::lit(16.0), T::lit(30.0));
    let mut d1 = Vec::with_capacity(m + 1);
    let mut d2 = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let (a2, a1) = (reflected(u, j, -2), reflected(u, j, -1));
        let (b1, b2) = (reflected(u, j, 1), reflected(u, j, 2));
        d1.push(if j == 0 || j == m { T::zero() } else { (a2 - c8 * a1 + c8 * b1 - b2) / (c12 * h) });
        d2.push((-a2 + c16 * a1 - c30 * u[j] + c16 * b1 - b2) / (c12 * h * h));
    }
    (d1, d2)
}

/// Area of the unit `k`-sphere.
pub fn unit_sphere_area<T: Real>(k: usize) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    let mut area = if k % 2 == 0 { T::lit(2.0) } else { two_pi };
    let mut j = if k % 2 == 0 { 0 } else { 1 };
    while j < k {
        j += 2;
        area = area * two_pi / T::from_usize_lossy(j - 1);
    }
    area
}

/// Node-wise curvature data of a state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureFields<T> {
    pub n: usize,
    pub c: i32,
    pub dtheta: T,
    pub theta: Vec<T>,
    pub radius: Vec<T>,
    pub kappa_profile: Vec<T>,
    pub kappa_rot: Vec<T>,
    /// Scalar mean curvature, positive on convex spheres; `|H|` is its modulus.
    pub mean: Vec<T>,
    pub mean_sq: Vec<T>,
    pub norm_sq: Vec<T>,
    pub ring_sq: Vec<T>,
    pub grad_norm_sq: Vec<T>,
    pub grad_mean_sq: Vec<T>,
    pub grad_ring_sq: Vec<T>,
    /// `ds/dθ = S W`.
    pub speed: Vec<T>,
    /// `∂_s log ρ` of the orbit radius `ρ = S(u) sin θ`; zero at the poles.
    pub log_rho_s: Vec<T>,
    /// Quadrature weights for `dμ`.
    pub weights: Vec<T>,
}

impl<T: Real> CurvatureFields<T> {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    fn is_umbilical_mode(&self) -> bool {
        self.len() == 1
    }

    pub fn integrate(&self, q: &[T]) -> T {
        q.iter().zip(&self.weights).fold(T::zero(), |acc, (&a, &w)| acc + a * w)
    }

    pub fn volume(&self) -> T {
        self.weights.iter().fold(T::zero(), |acc, &w| acc + w)
    }

    /// Arc-length derivative of a node field.
    pub fn d_s(&self, q: &[T]) -> Vec<T> {
        if self.is_umbilical_mode() {
            return vec![T::zero()];
        }
        d_theta(q, self.dtheta).into_iter().zip(&self.speed).map(|(a, &s)| a / s).collect()
    }

    /// `|∇q|²` of a rotationally invariant node field.
    pub fn grad_sq(&self, q: &[T]) -> Vec<T> {
        self.d_s(q).into_iter().map(|a| a * a).collect()
    }

    /// Laplace–Beltrami operator of a rotationally invariant node field.
    pub fn laplacian(&self, q: &[T]) -> Vec<T> {
        if self.is_umbilical_mode() {
            return vec![T::zero()];
        }
        let h = self.dtheta;
        let m = q.len() - 1;
        let qt = d_theta(q, h);
        let qtt = d2_theta(q, h);
        let st = d_theta(&self.speed, h);
        let rot = T::from_usize_lossy(self.n - 1);
        let nn = T::from_usize_lossy(self.n);
        (0..=m)
            .map(|j| {
                let s = self.speed[j];
                if j == 0 || j == m {
                    nn * qtt[j] / (s * s)
                } else {
                    let q_ss = (qtt[j] - qt[j] * st[j] / s) / (s * s);
                    q_ss + rot * self.log_rho_s[j] * qt[j] / s
                }
            })
            .collect()
    }

    /// Largest node-wise defect of `|h̊|² = |h|² - |H|²/n`.
    pub fn traceless_identity_defect(&self) -> T {
        let nn = T::from_usize_lossy(self.n);
        (0..self.len())
            .map(|j| (self.ring_sq[j] - (self.norm_sq[j] - self.mean_sq[j] / nn)).abs())
            .fold(T::zero(), T::max)
    }
}

fn umbilical_fields<T: Real>(space: SpaceForm, n: usize, radius: T) -> Result<CurvatureFields<T>> {
    let lambda = space.sphere_curvature(radius)?;
    let nn = T::from_usize_lossy(n);
    let mean = nn * lambda;
    let s = space.sn(radius);
    let area = unit_sphere_area::<T>(n) * s.powi(n as i32);
    Ok(CurvatureFields {
        n,
        c: space.curvature(),
        dtheta: T::zero(),
        theta: vec![T::zero()],
        radius: vec![radius],
        kappa_profile: vec![lambda],
        kappa_rot: vec![lambda],
        mean: vec![mean],
        mean_sq: vec![mean * mean],
        norm_sq: vec![nn * lambda * lambda],
        ring_sq: vec![T::zero()],
        grad_norm_sq: vec![T::zero()],
        grad_mean_sq: vec![T::zero()],
        grad_ring_sq: vec![T::zero()],
        speed: vec![s],
        log_rho_s: vec![T::zero()],
        weights: vec![area],
    })
}

/// Principal curvatures and the arc speed `S W` of a profile.
struct ProfileCurvature<T> {
    kappa_profile: Vec<T>,
    kappa_rot: Vec<T>,
    speed: Vec<T>,
    w: Vec<T>,
}

fn profile_curvature<T: Real>(space: SpaceForm, u: &[T], h: T) -> ProfileCurvature<T> {
    let m = u.len() - 1;
    let (ud, udd) = profile_derivatives(u, h);
    let two = T::lit(2.0);
    let mut out = ProfileCurvature {
        kappa_profile: Vec::with_capacity(m + 1),
        kappa_rot: Vec::with_capacity(m + 1),
        speed: Vec::with_capacity(m + 1),
        w: Vec::with_capacity(m + 1),
    };
    for j in 0..=m {
        let s = space.sn(u[j]);
        let cs = space.cs(u[j]);
        let (ut, utt) = (ud[j], udd[j]);
        let slope_sq = ut * ut / (s * s);
        let w = (T::one() + slope_sq).sqrt();
        let w3 = w * w * w;
        let kp = cs / (s * w3) * (T::one() + two * slope_sq) - utt / (s * s * w3);
        let cot_ut = if j == 0 || j == m {
            utt
        } else {
            let theta = T::from_usize_lossy(j) * h;
            ut * theta.cos() / theta.sin()
        };
        let kr = (cs - cot_ut / s) / (s * w);
        out.kappa_profile.push(kp);
        out.kappa_rot.push(kr);
        out.speed.push(s * w);
        out.w.push(w);
    }
    out
}

/// Clenshaw–Curtis weights for `∫₀^π g(θ) sin θ dθ` with `g` even and
/// `2π`-periodic, sampled at `θ_j = jπ/N`.
fn sine_weights<T: Real>(m: usize) -> Vec<T> {
    let mf = m as f64;
    let moments: Vec<f64> = (0..=m)
        .map(|k| if k % 2 == 1 { 0.0 } else { 2.0 / (1.0 - (k * k) as f64) })
        .collect();
    let table: Vec<f64> = (0..2 * m).map(|i| (i as f64 * std::f64::consts::PI / mf).cos()).collect();
    (0..=m)
        .map(|j| {
            let mut acc = 0.0;
            for (k, &mk) in moments.iter().enumerate() {
                let half = if k == 0 || k == m { 0.5 } else { 1.0 };
                acc += half * mk * table[(k * j) % (2 * m)];
            }
            let half = if j == 0 || j == m { 0.5 } else { 1.0 };
            T::lit(2.0 / mf * half * acc)
        })
        .collect()
}

/// Weights for `∫₀^π g(θ) sin^{n-1}θ dθ`: trapezoid for odd `n` (the
/// integrand is smooth and periodic), Clenshaw–Curtis in `sin θ` for even `n`.
fn rotational_weights<T: Real>(n: usize, m: usize) -> Vec<T> {
    let h = T::PI() / T::from_usize_lossy(m);
    if n % 2 == 1 {
        (0..=m)
            .map(|j| {
                let theta = T::from_usize_lossy(j) * h;
                let end = if j == 0 || j == m { T::lit(0.5) } else { T::one() };
                end * h * theta.sin().powi(n as i32 - 1)
            })
            .collect()
    } else {
        sine_weights::<T>(m)
            .into_iter()
            .enumerate()
            .map(|(j, w)| w * (T::from_usize_lossy(j) * h).sin().powi(n as i32 - 2))
            .collect()
    }
}

/// Fills every derived field of a state.
pub fn curvature_fields<T: Real>(state: &FlowState<T>) -> Result<CurvatureFields<T>> {
    state.validate()?;
    let u = match &state.geometry {
        Geometry::Umbilical { radius } => return umbilical_fields(state.space, state.n, *radius),
        Geometry::Profile { u } => u,
    };
    let space = state.space;
    let n = state.n;
    let m = u.len() - 1;
    let h = state.dtheta();
    let nn = T::from_usize_lossy(n);
    let rot = T::from_usize_lossy(n - 1);
    let two = T::lit(2.0);
    let pc = profile_curvature(space, u, h);
    let (ud, _) = profile_derivatives(u, h);

    let theta: Vec<T> = (0..=m).map(|j| T::from_usize_lossy(j) * h).collect();
    let mean: Vec<T> = (0..=m).map(|j| pc.kappa_profile[j] + rot * pc.kappa_rot[j]).collect();
    let mean_sq: Vec<T> = mean.iter().map(|&x| x * x).collect();
    let norm_sq: Vec<T> = (0..=m)
        .map(|j| pc.kappa_profile[j] * pc.kappa_profile[j] + rot * pc.kappa_rot[j] * pc.kappa_rot[j])
        .collect();
    let ring_sq: Vec<T> = (0..=m)
        .map(|j| {
            let a = pc.kappa_profile[j] - mean[j] / nn;
            let b = pc.kappa_rot[j] - mean[j] / nn;
            a * a + rot * b * b
        })
        .collect();
    let log_rho_s: Vec<T> = (0..=m)
        .map(|j| {
            if j == 0 || j == m {
                T::zero()
            } else {
                let s = space.sn(u[j]);
                (space.cs(u[j]) * ud[j] / s + theta[j].cos() / theta[j].sin()) / pc.speed[j]
            }
        })
        .collect();

    let ds = |q: &[T]| -> Vec<T> { d_theta(q, h).into_iter().zip(&pc.speed).map(|(a, &s)| a / s).collect() };
    let a = ds(&pc.kappa_profile);
    let b = ds(&pc.kappa_rot);
    let hs = ds(&mean);
    let mut grad_norm_sq = Vec::with_capacity(m + 1);
    let mut grad_mean_sq = Vec::with_capacity(m + 1);
    let mut grad_ring_sq = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let x = (pc.kappa_profile[j] - pc.kappa_rot[j]) * log_rho_s[j];
        let cross = two * rot * x * x;
        grad_norm_sq.push(a[j] * a[j] + rot * b[j] * b[j] + cross);
        grad_mean_sq.push(hs[j] * hs[j]);
        let ra = a[j] - hs[j] / nn;
        let rb = b[j] - hs[j] / nn;
        grad_ring_sq.push(ra * ra + rot * rb * rb + cross);
    }

    let omega = unit_sphere_area::<T>(n - 1);
    let weights: Vec<T> = rotational_weights::<T>(n, m)
        .into_iter()
        .enumerate()
        .map(|(j, w)| omega * space.sn(u[j]).powi(n as i32 - 1) * pc.speed[j] * w)
        .collect();

    Ok(CurvatureFields {
        n,
        c: space.curvature(),
        dtheta: h,
        theta,
        radius: u.clone(),
        kappa_profile: pc.kappa_profile,
        kappa_rot: pc.kappa_rot,
        mean,
        mean_sq,
        norm_sq,
        ring_sq,
        grad_norm_sq,
        grad_mean_sq,
        grad_ring_sq,
        speed: pc.speed,
        log_rho_s,
        weights,
    })
}

/// `∂_t` of the geometry payload: `-H W` per node, or `-nλ(r)`.
pub fn velocity<T: Real>(state: &FlowState<T>) -> Result<Vec<T>> {
    let space = state.space;
    let nn = T::from_usize_lossy(state.n);
    match &state.geometry {
        Geometry::Umbilical { radius } => Ok(vec![-nn * space.sphere_curvature(*radius)?]),
        Geometry::Profile { u } => {
            let pc = profile_curvature(space, u, state.dtheta());
            let rot = T::from_usize_lossy(state.n - 1);
            Ok((0..u.len()).map(|j| -(pc.kappa_profile[j] + rot * pc.kappa_rot[j]) * pc.w[j]).collect())
        }
    }
}

fn with_radii<T: Real>(state: &FlowState<T>, t: T, radii: Vec<T>) -> Result<FlowState<T>> {
    let geometry = match state.geometry {
        Geometry::Umbilical { .. } => Geometry::Umbilical { radius: radii[0] },
        Geometry::Profile { .. } => Geometry::Profile { u: radii },
    };
    let next = FlowState { space: state.space, n: state.n, t, geometry };
    next.validate()?;
    Ok(next)
}

/// One classical fourth-order Runge–Kutta step of the method of lines.
pub fn step<T: Real>(state: &FlowState<T>, dt: T) -> Result<FlowState<T>> {
    let bound = state.stability_limit();
    if !(dt > T::zero()) || dt > bound {
        return Err(Error::Unstable { dt: dt.to_f64_lossy(), bound: bound.to_f64_lossy() });
    }
    let half = T::lit(0.5);
    let x0 = state.radii();
    let axpy = |k: &[T], a: T| -> Vec<T> { x0.iter().zip(k).map(|(&x, &v)| x + a * v).collect() };
    let k1 = velocity(state)?;
    let k2 = velocity(&with_radii(state, state.t + half * dt, axpy(&k1, half * dt))?)?;
    let k3 = velocity(&with_radii(state, state.t + half * dt, axpy(&k2, half * dt))?)?;
    let k4 = velocity(&with_radii(state, state.t + dt, axpy(&k3, dt))?)?;
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let next: Vec<T> = (0..x0.len())
        .map(|j| x0[j] + sixth * (k1[j] + two * k2[j] + two * k3[j] + k4[j]))
        .collect();
    if let Some(j) = next.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(j));
    }
    with_radii(state, state.t + dt, next)
}

/// `steps` consecutive states at fixed `dt`, including the initial one.
pub fn evolve_steps<T: Real>(state: &FlowState<T>, dt: T, steps: usize) -> Result<Vec<FlowState<T>>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state.clone());
    for _ in 0..steps {
        let next = step(out.last().expect("non-empty"), dt)?;
        out.push(next);
    }
    Ok(out)
}

/// Time-step policy of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum TimeStep<T> {
    Fixed { dt: T },
    /// `dt = cfl · dx²/n`, re-evaluated every step.
    Cfl { cfl: T },
}

impl<T: Real> Default for TimeStep<T> {
    fn default() -> Self {
        TimeStep::Cfl { cfl: T::lit(DEFAULT_CFL) }
    }
}

/// Initial data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fixture", rename_all = "kebab-case")]
pub enum Fixture<T> {
    /// Geodesic sphere, integrated as a radius ODE.
    Umbilical { radius: T },
    /// Geodesic sphere with the radius of the closed-form solution at `t0`.
    /// `cap_constant` is `C` in `cos r = C e^{nt}` (sphere ambient only).
    Exact { cap_constant: Option<T> },
    /// Geodesic sphere sampled as a profile.
    Round { radius: T },
    /// `u = r(1 + amplitude · cos(mode · θ))`.
    Perturbed { radius: T, amplitude: T, mode: u32 },
    /// Radial graph of the ellipsoid of revolution with the given semi-axes.
    Spheroid { equatorial: T, polar: T },
}

impl<T: Real> Fixture<T> {
    pub fn exact_solution(&self, space: SpaceForm, n: usize) -> Result<Option<UmbilicalSolution<T>>> {
        match *self {
            Fixture::Exact { cap_constant } => Ok(Some(match space {
                SpaceForm::Hyperbolic => UmbilicalSolution::hyperbolic(n),
                SpaceForm::Euclidean => UmbilicalSolution::euclidean(n),
                SpaceForm::Sphere => UmbilicalSolution::sphere(
                    n,
                    cap_constant.ok_or_else(|| domain("fixture", "sphere exact fixture needs cap_constant"))?,
                ),
            })),
            _ => Ok(None),
        }
    }

    pub fn initial_state(&self, space: SpaceForm, n: usize, t0: T, intervals: usize) -> Result<FlowState<T>> {
        let profile = |f: &dyn Fn(T) -> T| -> Result<FlowState<T>> {
            if intervals < 4 {
                return Err(Error::Shape(format!("need at least 4 grid intervals, got {intervals}")));
            }
            let h = T::PI() / T::from_usize_lossy(intervals);
            let u = (0..=intervals).map(|j| f(T::from_usize_lossy(j) * h)).collect();
            FlowState::profile(space, n, t0, u)
        };
        match *self {
            Fixture::Umbilical { radius } => FlowState::umbilical(space, n, t0, radius),
            Fixture::Exact { .. } => {
                let sol = self.exact_solution(space, n)?.expect("exact fixture");
                FlowState::umbilical(space, n, t0, sol.radius(t0)?)
            }
            Fixture::Round { radius } => profile(&|_| radius),
            Fixture::Perturbed { radius, amplitude, mode } => {
                profile(&|th| radius * (T::one() + amplitude * (T::lit(mode as f64) * th).cos()))
            }
            Fixture::Spheroid { equatorial, polar } => profile(&|th| {
                let (s, c) = (th.sin() / equatorial, th.cos() / polar);
                T::one() / (s * s + c * c).sqrt()
            }),
        }
    }
}

/// Quantity whose node-wise maximum is tracked.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "monitor", rename_all = "kebab-case")]
pub enum Monitor<T> {
    /// `f = |h̊|²/D(|H|²)`.
    Ratio { profile: RatioProfile<T> },
    /// `|h̊|²/|H|²`, set to zero where both vanish.
    RingOverMean,
}

impl<T: Real> Monitor<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Monitor::Ratio { profile } => match profile {
                RatioProfile::SphereCodimOne { .. } => "f-sphere-codim-one",
                RatioProfile::SphereHighCodim { .. } => "f-sphere-high-codim",
                RatioProfile::SphereFixed { .. } => "f-sphere-fixed",
                RatioProfile::Hyperbolic { .. } => "f-hyperbolic",
            },
            Monitor::RingOverMean => "ring-over-mean",
        }
    }

    pub fn max_over(&self, fields: &CurvatureFields<T>) -> Result<T> {
        let mut best = T::zero();
        for j in 0..fields.len() {
            let (ring, mean) = (fields.ring_sq[j], fields.mean_sq[j]);
            let v = match self {
                Monitor::Ratio { profile } => f_ratio(ring.max(T::zero()), mean, profile)?,
                Monitor::RingOverMean => {
                    if ring <= T::zero() {
                        T::zero()
                    } else if mean > T::zero() {
                        ring / mean
                    } else {
                        T::infinity()
                    }
                }
            };
            best = best.max(v);
        }
        Ok(best)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorValue<T> {
    pub name: String,
    pub max: T,
    /// `-d log(max f)/dt` fitted by least squares over the records so far.
    pub decay_rate: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinchingRecord<T> {
    pub t: T,
    pub monitors: Vec<MonitorValue<T>>,
    /// `sup(|h̊|² - 2n/3)` at this time.
    pub ring_excess_sup: T,
    /// `-ring_excess_sup` of the first record.
    pub delta_initial: T,
    /// `-sup` of `ring_excess_sup` over all records so far.
    pub delta_running: T,
    pub max_mean: T,
}

#[derive(Clone, Copy, Debug, Default)]
struct LineFit {
    count: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
}

impl LineFit {
    fn push(&mut self, x: f64, y: f64) {
        self.count += 1.0;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.sxy += x * y;
    }

    fn slope(&self) -> Option<f64> {
        let det = self.count * self.sxx - self.sx * self.sx;
        (self.count >= 2.0 && det > 0.0).then(|| (self.count * self.sxy - self.sx * self.sy) / det)
    }
}

/// Least-squares exponential decay rate of positive samples `(t, y)`.
pub fn fit_decay_rate<T: Real>(samples: &[(T, T)]) -> Option<T> {
    let mut fit = LineFit::default();
    for &(t, y) in samples {
        if y > T::zero() && y.is_finite() {
            fit.push(t.to_f64_lossy(), y.to_f64_lossy().ln());
        }
    }
    fit.slope().map(|s| T::lit(-s))
}

/// Least-squares slope of `log err` against `log h`.
pub fn fit_order<T: Real>(samples: &[(T, T)]) -> Option<T> {
    let mut fit = LineFit::default();
    for &(h, e) in samples {
        if h > T::zero() && e > T::zero() {
            fit.push(h.to_f64_lossy().ln(), e.to_f64_lossy().ln());
        }
    }
    fit.slope().map(T::lit)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig<T> {
    pub space: SpaceForm,
    pub n: usize,
    pub fixture: Fixture<T>,
    /// Grid intervals `N` for profile fixtures.
    pub intervals: usize,
    pub t0: T,
    pub t1: T,
    pub time_step: TimeStep<T>,
    /// Emit a record every this many steps (the first and last state are
    /// always emitted).
    pub emit_every: usize,
    pub monitors: Vec<Monitor<T>>,
    /// Orders `r` of the moments `J_r = ∫U₊^{r/2}`.
    pub j_orders: Vec<T>,
    pub max_steps: usize,
}

impl<T: Real> RunConfig<T> {
    pub fn new(space: SpaceForm, n: usize, fixture: Fixture<T>, t0: T, t1: T) -> Self {
        Self {
            space,
            n,
            fixture,
            intervals: 128,
            t0,
            t1,
            time_step: TimeStep::default(),
            emit_every: 10,
            monitors: Vec::new(),
            j_orders: Vec::new(),
            max_steps: 10_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaltReason {
    Horizon,
    Extinction,
    StepLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput<T> {
    pub trajectory: Vec<FlowState<T>>,
    pub pinching: Vec<PinchingRecord<T>>,
    pub functionals: Vec<FunctionalRecord<T>>,
    pub halt: HaltReason,
    pub steps: usize,
}

struct Recorder<T> {
    fits: Vec<LineFit>,
    delta_initial: Option<T>,
    excess_max: T,
}

impl<T: Real> Recorder<T> {
    fn new(monitors: usize) -> Self {
        Self { fits: vec![LineFit::default(); monitors], delta_initial: None, excess_max: T::neg_infinity() }
    }

    fn record(&mut self, cfg: &RunConfig<T>, state: &FlowState<T>, out: &mut RunOutput<T>) -> Result<()> {
        let fields = curvature_fields(state)?;
        let nn = T::from_usize_lossy(state.n);
        let excess = fields
            .ring_sq
            .iter()
            .map(|&r| r - T::lit(2.0) * nn / T::lit(3.0))
            .fold(T::neg_infinity(), T::max);
        self.excess_max = self.excess_max.max(excess);
        let delta_initial = *self.delta_initial.get_or_insert(-excess);
        let mut monitors = Vec::with_capacity(cfg.monitors.len());
        for (m, fit) in cfg.monitors.iter().zip(self.fits.iter_mut()) {
            let max = m.max_over(&fields)?;
            if max > T::zero() && max.is_finite() {
                fit.push(state.t.to_f64_lossy(), max.to_f64_lossy().ln());
            }
            monitors.push(MonitorValue { name: m.name().to_string(), max, decay_rate: fit.slope().map(|s| T::lit(-s)) });
        }
        out.pinching.push(PinchingRecord {
            t: state.t,
            monitors,
            ring_excess_sup: excess,
            delta_initial,
            delta_running: -self.excess_max,
            max_mean: fields.mean.iter().map(|x| x.abs()).fold(T::zero(), T::max),
        });
        out.functionals.push(functionals::integrals(state, &fields, &cfg.j_orders)?);
        out.trajectory.push(state.clone());
        Ok(())
    }
}

/// Integrates from `t0` to `t1`, emitting states and monitor records.
pub fn run<T: Real>(cfg: &RunConfig<T>) -> Result<RunOutput<T>> {
    if !(cfg.t1 > cfg.t0) {
        return Err(domain("run", format!("need t1 > t0, got [{}, {}]", cfg.t0, cfg.t1)));
    }
    if cfg.emit_every == 0 {
        return Err(domain("run", "emit_every must be positive"));
    }
    let mut state = cfg.fixture.initial_state(cfg.space, cfg.n, cfg.t0, cfg.intervals)?;
    let mut out = RunOutput {
        trajectory: Vec::new(),
        pinching: Vec::new(),
        functionals: Vec::new(),
        halt: HaltReason::Horizon,
        steps: 0,
    };
    let mut recorder = Recorder::new(cfg.monitors.len());
    recorder.record(cfg, &state, &mut out)?;

    let collapse_scale = T::lit(COLLAPSE_FRACTION) * state.scale();
    let eps_t = T::lit(64.0) * T::epsilon() * (T::one() + cfg.t1.abs());
    let mut emitted_last = true;
    while cfg.t1 - state.t > eps_t {
        if state.scale() < collapse_scale || under_resolved(&state)? {
            out.halt = HaltReason::Extinction;
            break;
        }
        if out.steps >= cfg.max_steps {
            out.halt = HaltReason::StepLimit;
            break;
        }
        let dt = match cfg.time_step {
            TimeStep::Fixed { dt } => dt,
            TimeStep::Cfl { cfl } => {
                let dx = state.min_spacing();
                cfl * dx * dx / T::from_usize_lossy(cfg.n)
            }
        };
        let dt = dt.min(cfg.t1 - state.t);
        state = step(&state, dt).map_err(|e| contextualise(e, state.t))?;
        out.steps += 1;
        emitted_last = out.steps % cfg.emit_every == 0;
        if emitted_last {
            recorder.record(cfg, &state, &mut out)?;
        }
    }
    if !emitted_last {
        recorder.record(cfg, &state, &mut out)?;
    }
    Ok(out)
}

/// Whether some principal radius of curvature is shorter than
/// [`EXTINCTION_SPACINGS`] arc-length grid spacings.
pub fn under_resolved<T: Real>(state: &FlowState<T>) -> Result<bool> {
    let u = match &state.geometry {
        Geometry::Umbilical { .. } => return Ok(false),
        Geometry::Profile { u } => u,
    };
    let h = state.dtheta();
    let pc = profile_curvature(state.space, u, h);
    let limit = T::one() / T::lit(EXTINCTION_SPACINGS);
    Ok((0..u.len()).any(|j| pc.kappa_profile[j].abs().max(pc.kappa_rot[j].abs()) * pc.speed[j] * h > limit))
}

fn contextualise<T: Real>(e: Error, t: T) -> Error {
    match e {
        Error::Immersion { .. } | Error::Unstable { .. } => e,
        other => Error::Immersion { t: t.to_f64_lossy(), detail: other.to_string() },
    }
}

/// Slack of the gradient estimates, minimised over nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientSlack<T> {
    /// `min(|∇h|² - 3/(n+2)|∇H|²)`.
    pub huisken: T,
    /// `min(|∇h̊|² - 2(n-1)/(n(n+2))|∇H|²)`.
    pub traceless: T,
    /// `max||∇h̊|² - |∇h|² + |∇H|²/n|`.
    pub identity_defect: T,
}

pub fn verify_gradient_estimates<T: Real>(fields: &CurvatureFields<T>) -> GradientSlack<T> {
    let nn = T::from_usize_lossy(fields.n);
    let c1 = T::lit(3.0) / (nn + T::lit(2.0));
    let c2 = T::lit(2.0) * (nn - T::one()) / (nn * (nn + T::lit(2.0)));
    let mut out = GradientSlack { huisken: T::infinity(), traceless: T::infinity(), identity_defect: T::zero() };
    for j in 0..fields.len() {
        let (gh, gm, gr) = (fields.grad_norm_sq[j], fields.grad_mean_sq[j], fields.grad_ring_sq[j]);
        out.huisken = out.huisken.min(gh - c1 * gm);
        out.traceless = out.traceless.min(gr - c2 * gm);
        out.identity_defect = out.identity_defect.max((gr - gh + gm / nn).abs());
    }
    out
}

/// Residuals of the evolution equations of `|h|²`, `|H|²` and `|h̊|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResidual<T> {
    pub intervals: usize,
    pub dtheta: T,
    pub dt: T,
    /// Times at which residuals were evaluated.
    pub times: Vec<T>,
    /// Max-norm residuals of `[|h|², |H|², |h̊|²]`.
    pub linf: [T; 3],
    /// `dμ`-weighted root-mean-square residuals.
    pub l2: [T; 3],
    /// Largest `|∂_t q|` seen, for relative reporting.
    pub scale: [T; 3],
    pub gradient: GradientSlack<T>,
}

/// Central differences in time of `|h|²`, `|H|²`, `|h̊|²` against the
/// right-hand sides
///
/// ```text
/// Δ|h|² - 2|∇h|² + 2R₁ + 4c|H|² - 2nc|h|²
/// Δ|H|² - 2|∇H|² + 2R₂ + 2nc|H|²
/// Δ|h̊|² - 2|∇h̊|² + 2R₁ - (2/n)R₂ - 2nc|h̊|²
/// ```
///
/// with `R₁ = |h|⁴`, `R₂ = |H|²|h|²`. The parametrisation moves along
/// radial lines, so the tangential part of the velocity is removed before
/// comparing.
pub fn verify_evolution<T: Real>(states: &[FlowState<T>]) -> Result<EvolutionResidual<T>> {
    if states.len() < 3 {
        return Err(Error::Insufficient(format!("need at least 3 states, got {}", states.len())));
    }
    let dt = states[1].t - states[0].t;
    if !(dt > T::zero()) {
        return Err(Error::Insufficient("states must advance in time".into()));
    }
    for w in states.windows(2) {
        let d = w[1].t - w[0].t;
        if (d - dt).abs() > T::lit(1e-9) * dt {
            return Err(Error::Insufficient(format!("time steps differ: {dt} vs {d}")));
        }
        if w[1].intervals() != w[0].intervals() || w[1].n != w[0].n || w[1].space != w[0].space {
            return Err(Error::Insufficient("states do not share a grid".into()));
        }
    }
    let fields: Vec<CurvatureFields<T>> = states.iter().map(curvature_fields).collect::<Result<_>>()?;
    let n = states[0].n;
    let nn = T::from_usize_lossy(n);
    let c = T::lit(states[0].space.curvature() as f64);
    let two = T::lit(2.0);
    let mut linf = [T::zero(); 3];
    let mut sq = [T::zero(); 3];
    let mut scale = [T::zero(); 3];
    let mut vol = T::zero();
    let mut gradient = GradientSlack { huisken: T::infinity(), traceless: T::infinity(), identity_defect: T::zero() };
    let mut times = Vec::new();
    for k in 1..states.len() - 1 {
        let f = &fields[k];
        times.push(states[k].t);
        let g = verify_gradient_estimates(f);
        gradient.huisken = gradient.huisken.min(g.huisken);
        gradient.traceless = gradient.traceless.min(g.traceless);
        gradient.identity_defect = gradient.identity_defect.max(g.identity_defect);

        let quantities = [
            (&fields[k - 1].norm_sq, &f.norm_sq, &fields[k + 1].norm_sq),
            (&fields[k - 1].mean_sq, &f.mean_sq, &fields[k + 1].mean_sq),
            (&fields[k - 1].ring_sq, &f.ring_sq, &fields[k + 1].ring_sq),
        ];
        // tangential correction H u_θ q_θ/(S²W) = H W u_s q_s
        let u_s: Vec<T> = if f.len() == 1 {
            vec![T::zero()]
        } else {
            let (ud, _) = profile_derivatives(&f.radius, f.dtheta);
            ud.into_iter().zip(&f.speed).map(|(a, &s)| a / s).collect()
        };
        for (idx, (before, now, after)) in quantities.into_iter().enumerate() {
            let lap = f.laplacian(now);
            let q_s = f.d_s(now);
            for j in 0..f.len() {
                let w = f.speed[j] / states[k].space.sn(f.radius[j]);
                let dq = (after[j] - before[j]) / (two * dt) + f.mean[j] * w * u_s[j] * q_s[j];
                let (h2, m2, r2) = (f.norm_sq[j], f.mean_sq[j], f.ring_sq[j]);
                let r1 = h2 * h2;
                let rr2 = m2 * h2;
                let rhs = match idx {
                    0 => lap[j] - two * f.grad_norm_sq[j] + two * r1 + T::lit(4.0) * c * m2 - two * nn * c * h2,
                    1 => lap[j] - two * f.grad_mean_sq[j] + two * rr2 + two * nn * c * m2,
                    _ => lap[j] - two * f.grad_ring_sq[j] + two * r1 - two / nn * rr2 - two * nn * c * r2,
                };
                let res = (dq - rhs).abs();
                linf[idx] = linf[idx].max(res);
                sq[idx] = sq[idx] + res * res * f.weights[j];
                scale[idx] = scale[idx].max(dq.abs());
            }
        }
        vol = vol + f.volume();
    }
    let l2 = sq.map(|s| (s / vol).sqrt());
    Ok(EvolutionResidual {
        intervals: states[0].intervals(),
        dtheta: states[0].dtheta(),
        dt,
        times,
        linf,
        l2,
        scale,
        gradient,
    })
}

/// Three consecutive states centred at `t_center`, reached from `initial`
/// with the largest uniform step not exceeding `cfl · dx²/n`.
pub fn triplet_at<T: Real>(initial: &FlowState<T>, t_center: T, cfl: T) -> Result<Vec<FlowState<T>>> {
    if !(t_center > initial.t) {
        return Err(domain("triplet_at", "centre must lie after the initial time"));
    }
    let dx = initial.min_spacing();
    let dt_max = cfl * dx * dx / T::from_usize_lossy(initial.n);
    let span = t_center - initial.t;
    let steps = (span / dt_max).ceil().to_usize().unwrap_or(1).max(1);
    let dt = span / T::from_usize_lossy(steps);
    let mut states = evolve_steps(initial, dt, steps + 1)?;
    states.drain(..steps - 1);
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert_relative_eq!(unit_sphere_area::<f64>(0), 2.0);
        assert_relative_eq!(unit_sphere_area::<f64>(1), 2.0 * PI);
        assert_relative_eq!(unit_sphere_area::<f64>(2), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(unit_sphere_area::<f64>(3), 2.0 * PI * PI, max_relative = 1e-15);
        assert_relative_eq!(unit_sphere_area::<f64>(4), 8.0 * PI * PI / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn sine_weights_integrate_trig_polynomials() {
        let w = sine_weights::<f64>(16);
        let h = std::f64::consts::PI / 16.0;
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
        let cos2: f64 = w.iter().enumerate().map(|(j, wj)| wj * (2.0 * j as f64 * h).cos()).sum();
        assert_relative_eq!(cos2, -2.0 / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn round_profile_is_umbilical() {
        let s = Fixture::Round { radius: 2.0f64 }.initial_state(SpaceForm::Euclidean, 2, -1.0, 32).unwrap();
        let f = curvature_fields(&s).unwrap();
        for j in 0..f.len() {
            assert_relative_eq!(f.mean[j], 1.0, max_relative = 1e-14);
            assert!(f.ring_sq[j].abs() < 1e-28);
        }
        assert_relative_eq!(f.volume(), 16.0 * std::f64::consts::PI, max_relative = 1e-13);
    }

    #[test]
    fn rejects_bad_steps_and_geometry() {
        let s = Fixture::Round { radius: 1.0 }.initial_state(SpaceForm::Euclidean, 2, -1.0, 32).unwrap();
        assert!(matches!(step(&s, 1.0), Err(Error::Unstable { .. })));
        assert!(FlowState::profile(SpaceForm::Sphere, 2, 0.0, vec![1.0, 1.0, 4.0, 1.0, 1.0]).is_err());
        assert!(FlowState::umbilical(SpaceForm::Euclidean, 2, 0.0, -1.0).is_err());
    }

    #[test]
    fn fits() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 0.1, (-3.0 * i as f64 * 0.1).exp())).collect();
        assert_relative_eq!(fit_decay_rate(&pts).unwrap(), 3.0, max_relative = 1e-12);
        let pts = [(0.1f64, 0.01f64), (0.05, 0.0025), (0.025, 0.000625)];
        assert_relative_eq!(fit_order(&pts).unwrap(), 2.0, max_relative = 1e-12);
        assert!(fit_decay_rate::<f64>(&[]).is_none());
    }
}
