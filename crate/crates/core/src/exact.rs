//! Closed-form umbilical ancient solutions in the three space forms.
//!
//! Geodesic spheres of radius `r` have principal curvature `cs(r)/sn(r)`
//! (`cot r`, `1/r`, `coth r`) and move by `dr/dt = -n λ(r)` under the flow.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::tensor::FundamentalForm;

/// Simply connected space form of curvature `+1`, `0` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceForm {
    Sphere,
    Euclidean,
    Hyperbolic,
}

impl SpaceForm {
    pub fn curvature(self) -> i32 {
        match self {
            SpaceForm::Sphere => 1,
            SpaceForm::Euclidean => 0,
            SpaceForm::Hyperbolic => -1,
        }
    }

    pub fn from_curvature(c: i32) -> Option<Self> {
        match c {
            1 => Some(SpaceForm::Sphere),
            0 => Some(SpaceForm::Euclidean),
            -1 => Some(SpaceForm::Hyperbolic),
            _ => None,
        }
    }

    /// Warping function: `sin r`, `r`, `sinh r`.
    pub fn sn<T: Real>(self, r: T) -> T {
        match self {
            SpaceForm::Sphere => r.sin(),
            SpaceForm::Euclidean => r,
            SpaceForm::Hyperbolic => r.sinh(),
        }
    }

    /// Derivative of [`Self::sn`]: `cos r`, `1`, `cosh r`.
    pub fn cs<T: Real>(self, r: T) -> T {
        match self {
            SpaceForm::Sphere => r.cos(),
            SpaceForm::Euclidean => T::one(),
            SpaceForm::Hyperbolic => r.cosh(),
        }
    }

    /// Whether `r` is a valid geodesic radius.
    pub fn valid_radius<T: Real>(self, r: T) -> bool {
        r.is_finite() && r > T::zero() && (self != SpaceForm::Sphere || r < T::PI())
    }

    /// Principal curvature of the geodesic sphere of radius `r`.
    pub fn sphere_curvature<T: Real>(self, r: T) -> Result<T> {
        if !self.valid_radius(r) {
            return Err(domain("sphere_curvature", format!("radius {r} invalid in {self:?}")));
        }
        Ok(self.cs(r) / self.sn(r))
    }

    pub fn label(self) -> &'static str {
        match self {
            SpaceForm::Sphere => "sphere",
            SpaceForm::Euclidean => "euclidean",
            SpaceForm::Hyperbolic => "hyperbolic",
        }
    }
}

/// Geodesic spheres in hyperbolic space with `cosh r = e^{-nt}`, `t < 0`.
///
/// Returns `(r, |H|)`. Both are evaluated in forms that stay accurate for
/// very negative `t` and for `t` close to zero.
pub fn hyperbolic_sphere<T: Real>(t: T, n: usize) -> Result<(T, T)> {
    if !(t < T::zero()) || !t.is_finite() {
        return Err(domain("hyperbolic_sphere", format!("need t < 0, got {t}")));
    }
    let nn = T::from_usize_lossy(n);
    // 1 - e^{2nt}
    let gap = -(T::lit(2.0) * nn * t).exp_m1();
    let root = gap.sqrt();
    // arccosh z = ln z + ln(1 + sqrt(1 - z^{-2})) with z = e^{-nt}
    let r = -nn * t + (T::one() + root).ln();
    let mean = nn / root;
    Ok((r, mean))
}

/// Time derivative of the hyperbolic radius, differentiated in closed form.
pub fn hyperbolic_sphere_rate<T: Real>(t: T, n: usize) -> Result<T> {
    hyperbolic_sphere(t, n).map(|(_, mean)| -mean)
}

/// Shrinking geodesic sphere in the unit sphere: `cos r = C e^{nt}`.
pub fn sphere_cap<T: Real>(t: T, n: usize, c: T) -> Result<T> {
    let z = cap_cosine(t, n, c)?;
    Ok(z.acos())
}

fn cap_cosine<T: Real>(t: T, n: usize, c: T) -> Result<T> {
    if !(c > T::zero() && c < T::one()) {
        return Err(domain("sphere_cap", format!("need 0 < C < 1, got {c}")));
    }
    let z = c * (T::from_usize_lossy(n) * t).exp();
    if !(z < T::one()) {
        return Err(domain("sphere_cap", format!("C e^(nt) = {z} >= 1 at t = {t}")));
    }
    Ok(z)
}

pub fn sphere_cap_rate<T: Real>(t: T, n: usize, c: T) -> Result<T> {
    let z = cap_cosine(t, n, c)?;
    Ok(-T::from_usize_lossy(n) * z / (T::one() - z * z).sqrt())
}

/// Shrinking round sphere in Euclidean space: `r = sqrt(-2nt)`.
pub fn euclidean_sphere<T: Real>(t: T, n: usize) -> Result<T> {
    if !(t < T::zero()) || !t.is_finite() {
        return Err(domain("euclidean_sphere", format!("need t < 0, got {t}")));
    }
    Ok((-T::lit(2.0) * T::from_usize_lossy(n) * t).sqrt())
}

pub fn euclidean_sphere_rate<T: Real>(t: T, n: usize) -> Result<T> {
    let r = euclidean_sphere(t, n)?;
    Ok(-T::from_usize_lossy(n) / r)
}

/// Codimension-one form `λ(r)·I` of a geodesic sphere.
pub fn umbilical_form<T: Real>(r: T, space: SpaceForm, n: usize) -> Result<FundamentalForm<T>> {
    Ok(FundamentalForm::umbilical(n, space.sphere_curvature(r)?))
}

/// One of the three exact families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UmbilicalSolution<T> {
    pub space: SpaceForm,
    pub n: usize,
    /// `C` in `cos r = C e^{nt}`; ignored outside the sphere.
    pub cap_constant: T,
}

impl<T: Real> UmbilicalSolution<T> {
    pub fn hyperbolic(n: usize) -> Self {
        Self { space: SpaceForm::Hyperbolic, n, cap_constant: T::zero() }
    }

    pub fn euclidean(n: usize) -> Self {
        Self { space: SpaceForm::Euclidean, n, cap_constant: T::zero() }
    }

    pub fn sphere(n: usize, cap_constant: T) -> Self {
        Self { space: SpaceForm::Sphere, n, cap_constant }
    }

    pub fn radius(&self, t: T) -> Result<T> {
        match self.space {
            SpaceForm::Hyperbolic => hyperbolic_sphere(t, self.n).map(|(r, _)| r),
            SpaceForm::Sphere => sphere_cap(t, self.n, self.cap_constant),
            SpaceForm::Euclidean => euclidean_sphere(t, self.n),
        }
    }

    /// `dr/dt` by analytic differentiation of the radius law.
    pub fn radius_rate(&self, t: T) -> Result<T> {
        match self.space {
            SpaceForm::Hyperbolic => hyperbolic_sphere_rate(t, self.n),
            SpaceForm::Sphere => sphere_cap_rate(t, self.n, self.cap_constant),
            SpaceForm::Euclidean => euclidean_sphere_rate(t, self.n),
        }
    }

    pub fn principal_curvature(&self, t: T) -> Result<T> {
        self.space.sphere_curvature(self.radius(t)?)
    }

    /// `|H| = n λ(r(t))`.
    pub fn mean_curvature(&self, t: T) -> Result<T> {
        Ok(T::from_usize_lossy(self.n) * self.principal_curvature(t)?)
    }

    /// `|dr/dt + n λ(r)|`.
    pub fn ode_residual(&self, t: T) -> Result<T> {
        Ok((self.radius_rate(t)? + self.mean_curvature(t)?).abs())
    }

    pub fn form(&self, t: T) -> Result<FundamentalForm<T>> {
        umbilical_form(self.radius(t)?, self.space, self.n)
    }

    /// Right end of the existence interval.
    pub fn extinction_time(&self) -> T {
        match self.space {
            SpaceForm::Sphere => -self.cap_constant.ln() / T::from_usize_lossy(self.n),
            _ => T::zero(),
        }
    }
}

/// Pinching hypothesis evaluated along an exact solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WitnessProfile<T> {
    /// `|h̊|² <= k|H|²(1 - n²/|H|²)^{2+ε}` with `|H| > n`.
    Hyperbolic { k: T, eps: T },
    /// `|h|² < bound`.
    NormBound { bound: T },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord<T> {
    pub t: T,
    pub lhs: T,
    pub rhs: T,
    /// `rhs - lhs`.
    pub margin: T,
    pub holds: bool,
}

pub fn pinching_witness<T: Real>(
    solution: &UmbilicalSolution<T>,
    t: T,
    profile: &WitnessProfile<T>,
) -> Result<WitnessRecord<T>> {
    let h = solution.form(t)?;
    let nn = T::from_usize_lossy(solution.n);
    let (lhs, rhs, holds) = match *profile {
        WitnessProfile::Hyperbolic { k, eps } => {
            let mean_sq = h.mean_curvature_sq();
            let lhs = h.traceless_norm_sq();
            if mean_sq <= nn * nn {
                return Err(domain("pinching_witness", format!("|H|^2 = {mean_sq} <= n^2")));
            }
            let rhs = k * mean_sq * (T::one() - nn * nn / mean_sq).powf(T::lit(2.0) + eps);
            (lhs, rhs, lhs <= rhs)
        }
        WitnessProfile::NormBound { bound } => {
            let lhs = h.norm_sq();
            (lhs, bound, lhs < bound)
        }
    };
    Ok(WitnessRecord { t, lhs, rhs, margin: rhs - lhs, holds })
}

/// `|h|²` of the Clifford minimal hypersurfaces, a static solution in `S^{n+1}`.
pub fn clifford_norm_sq(n: usize) -> Ratio<i64> {
    crate::pinching::clifford_norm_sq(n)
}

/// `|h|²` of the Veronese surface in `S⁴`.
pub fn veronese_norm_sq() -> Ratio<i64> {
    let (a, b) = crate::pinching::VERONESE_NORM_SQ;
    Ratio::new(a, b)
}
