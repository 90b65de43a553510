//! Scalar auxiliary functions behind the pointwise pinching arguments:
//! the ratio functions `f`, the two-variable function `G`, the weight `φ`
//! with its companions `ψ`, `θ`, and the pinching thresholds themselves.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ratio_to;
use crate::scalar::Real;

/// `γ = 2(n-1)/(n(n+2))`, the gradient-estimate constant for `|∇h̊|²`.
pub fn gamma_exact(n: usize) -> Ratio<i64> {
    let n = n as i64;
    Ratio::new(2 * (n - 1), n * (n + 2))
}

/// Codimension-one sphere profile: `f = |h̊|²/(γ|H|² + a)` with `0 < a < n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereCodimOneProfile<T> {
    pub n: usize,
    pub a: T,
    pub gamma: T,
    pub k: T,
}

impl<T: Real> SphereCodimOneProfile<T> {
    pub fn new(n: usize, a: T) -> Result<Self> {
        let nn = T::from_usize_lossy(n);
        if n < 1 || !(a > T::zero() && a < nn) {
            return Err(domain("sphere codim-one profile", format!("need 0 < a < n, got a = {a}, n = {n}")));
        }
        let g = gamma_exact(n);
        let k = g.min(g * 2 - Ratio::new(1, n as i64));
        Ok(Self { n, a, gamma: ratio_to(g), k: ratio_to(k) })
    }

    /// Smallest admissible `a`, scaled by `1 + margin`, for a pinching value
    /// `sup(|h̊|² - k|H|²)`.
    pub fn from_pinching(n: usize, sup_pinching: T, margin: T) -> Result<Self> {
        Self::new(n, sup_pinching.max(T::min_positive_value()) * (T::one() + margin))
    }

    /// `k = min{γ, 2γ - 1/n}` without fixing `a`.
    pub fn k_for(n: usize) -> T {
        let g = gamma_exact(n);
        ratio_to(g.min(g * 2 - Ratio::new(1, n as i64)))
    }

    /// Guaranteed exponential rate for `max f` is `2δ`, `δ = n - a`.
    pub fn delta(&self) -> T {
        T::from_usize_lossy(self.n) - self.a
    }

    /// The pinched quantity `|h̊|² - k|H|²`.
    pub fn pinching(&self, ring_sq: T, mean_sq: T) -> T {
        ring_sq - self.k * mean_sq
    }
}

/// Parameters `(b, ξ)` of `G`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GParams<T> {
    pub b: T,
    pub xi: T,
}

impl<T: Real> GParams<T> {
    /// Checks the window `1/2 <= ξ < 1/b - 1`.
    pub fn new(b: T, xi: T) -> Result<Self> {
        let p = Self::unchecked(b, xi);
        if p.is_admissible() {
            Ok(p)
        } else {
            Err(domain("G parameters", format!("need b > 0 and 1/2 <= xi < 1/b - 1, got b = {b}, xi = {xi}")))
        }
    }

    pub fn unchecked(b: T, xi: T) -> Self {
        Self { b, xi }
    }

    pub fn is_admissible(&self) -> bool {
        self.b > T::zero() && self.xi >= T::lit(0.5) && self.xi < T::one() / self.b - T::one()
    }

    /// `G(x, y)` as displayed.
    pub fn g(&self, x: T, y: T) -> T {
        let (b, xi) = (self.b, self.xi);
        let two = T::lit(2.0);
        let third = T::one() / T::lit(3.0);
        (two * b * (T::lit(4.0) * third * x + b) + x * (y - T::one())) / (x + two * b)
            - (x * y + y * y / xi) / (third * x + b)
            + two * y
            - T::one()
    }

    /// `sup_y G(x, y)` from the vertex of the quadratic in `y`.
    pub fn g_sup_y(&self, x: T) -> T {
        let (b, xi) = (self.b, self.xi);
        let two = T::lit(2.0);
        let lead = (two * b * (T::lit(4.0) / T::lit(3.0) * x + b) - x) / (x + two * b) - T::one();
        let bracket = b * (T::lit(7.0) * x + T::lit(12.0) * b) / (x + two * b);
        lead + xi / (T::lit(12.0) * (x + T::lit(3.0) * b)) * bracket * bracket
    }

    /// Maximiser in `y` (always `>= 0`).
    pub fn g_argmax_y(&self, x: T) -> T {
        let (b, xi) = (self.b, self.xi);
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let linear = b * (T::lit(7.0) * x + T::lit(12.0) * b) / ((x + two * b) * (x + three * b));
        linear * xi * (x + three * b) / T::lit(6.0)
    }

    /// Coefficients `[c0, c1, c2, c3]` of the cubic numerator of
    /// `sup_y G = (c0 + c1 x + c2 x² + c3 x³) / (12 (x+2b)² (x+3b))`.
    pub fn sup_cubic_coefficients(&self) -> [T; 4] {
        let (b, xi) = (self.b, self.xi);
        let l = T::lit;
        [
            l(144.0) * b * b * b * (b * xi + b - T::one()),
            l(24.0) * b * b * (l(7.0) * b * xi + l(13.0) * b - l(11.0)),
            b * (l(49.0) * b * xi + l(184.0) * b - l(144.0)),
            l(8.0) * (l(4.0) * b - l(3.0)),
        ]
    }

    /// `sup_y G` evaluated through the cubic numerator.
    pub fn g_sup_y_cubic(&self, x: T) -> T {
        let [c0, c1, c2, c3] = self.sup_cubic_coefficients();
        let b = self.b;
        let den = T::lit(12.0) * (x + T::lit(2.0) * b) * (x + T::lit(2.0) * b) * (x + T::lit(3.0) * b);
        (c0 + x * (c1 + x * (c2 + x * c3))) / den
    }

    /// Certifies `sup_{x,y >= 0} G < 0`: a sign check of the four cubic
    /// coefficients (which settles every `x >= 0` at once, including the
    /// unbounded tail), cross-checked by evaluating `g_sup_y` on `grid`.
    pub fn certify_negative(&self, grid: &[T]) -> GCertificate<T> {
        let coefficients = self.sup_cubic_coefficients();
        let all_negative = coefficients.iter().all(|&c| c < T::zero());
        let (grid_max, grid_argmax) = grid
            .iter()
            .map(|&x| (self.g_sup_y(x), x))
            .fold((T::neg_infinity(), T::zero()), |acc, v| if v.0 > acc.0 { v } else { acc });
        let at_zero = self.g_sup_y(T::zero());
        // leading behaviour for x -> ∞: sup_y G -> c3 / 12
        let tail_limit = coefficients[3] / T::lit(12.0);
        GCertificate {
            coefficients,
            all_coefficients_negative: all_negative,
            grid_max,
            grid_argmax,
            at_zero,
            tail_limit,
            certified: all_negative && grid_max < T::zero() && at_zero < T::zero() && tail_limit < T::zero(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GCertificate<T> {
    pub coefficients: [T; 4],
    pub all_coefficients_negative: bool,
    pub grid_max: T,
    pub grid_argmax: T,
    pub at_zero: T,
    pub tail_limit: T,
    pub certified: bool,
}

/// Log-spaced grid `lo ..= hi` with `count` points.
pub fn log_grid<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    assert!(lo > T::zero() && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    let last = T::from_usize_lossy(count - 1);
    (0..count).map(|i| (a + (b - a) * T::from_usize_lossy(i) / last).exp()).collect()
}

/// `φ(x) = x (1 - n²/x)^{2+ε}` on `x > n²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiParams<T> {
    pub n: usize,
    pub eps: T,
}

impl<T: Real> PhiParams<T> {
    pub fn new(n: usize, eps: T) -> Result<Self> {
        if n < 1 || !(eps > T::zero()) {
            return Err(domain("phi parameters", format!("need n >= 1 and eps > 0, got n = {n}, eps = {eps}")));
        }
        Ok(Self { n, eps })
    }

    fn n_sq(&self) -> T {
        let n = T::from_usize_lossy(self.n);
        n * n
    }

    fn check(&self, op: &'static str, x: T) -> Result<T> {
        let n2 = self.n_sq();
        if x > n2 && x.is_finite() {
            Ok(T::one() - n2 / x)
        } else {
            Err(domain(op, format!("need x > n^2 = {n2}, got {x}")))
        }
    }

    pub fn phi(&self, x: T) -> Result<T> {
        let s = self.check("phi", x)?;
        Ok(x * s.powf(T::lit(2.0) + self.eps))
    }

    pub fn phi_prime(&self, x: T) -> Result<T> {
        let s = self.check("phi'", x)?;
        Ok((x + self.n_sq() * (T::one() + self.eps)) / x * s.powf(T::one() + self.eps))
    }

    pub fn phi_double_prime(&self, x: T) -> Result<T> {
        let s = self.check("phi''", x)?;
        let n2 = self.n_sq();
        let e = self.eps;
        Ok(n2 * n2 * (T::one() + e) * (T::lit(2.0) + e) / (x * x * x) * s.powf(e))
    }

    /// `1 - x φ'(x)/φ(x)`.
    pub fn log_derivative_defect(&self, x: T) -> Result<T> {
        Ok(T::one() - x * self.phi_prime(x)? / self.phi(x)?)
    }

    /// Closed form `-(2+ε) n²/(x - n²)` of [`Self::log_derivative_defect`].
    pub fn log_derivative_defect_closed(&self, x: T) -> Result<T> {
        self.check("phi identity", x)?;
        let n2 = self.n_sq();
        Ok(-(T::lit(2.0) + self.eps) * n2 / (x - n2))
    }

    /// `φ' + 2xφ''`.
    pub fn combination(&self, x: T) -> Result<T> {
        Ok(self.phi_prime(x)? + T::lit(2.0) * x * self.phi_double_prime(x)?)
    }

    /// Expanded form `(n⁴(1+ε)(3+2ε) + n²εx + x²)/x² (1-n²/x)^ε` of
    /// [`Self::combination`].
    pub fn combination_expanded(&self, x: T) -> Result<T> {
        let s = self.check("phi combination", x)?;
        let n2 = self.n_sq();
        let e = self.eps;
        let num = n2 * n2 * (T::one() + e) * (T::lit(3.0) + T::lit(2.0) * e) + n2 * e * x + x * x;
        Ok(num / (x * x) * s.powf(e))
    }

    /// `4 - (φ' + 2xφ'')`, positive on the whole domain.
    pub fn combination_bound(&self, x: T) -> Result<T> {
        Ok(T::lit(4.0) - self.combination(x)?)
    }
}

/// `ψ(y) = [(1+ε)(3+2ε)y² + εy + 1](1-y)^ε` on `0 < y < 1`.
pub fn psi<T: Real>(y: T, eps: T) -> Result<T> {
    if !(y > T::zero() && y < T::one()) || !(eps > T::zero()) {
        return Err(domain("psi", format!("need 0 < y < 1 and eps > 0, got y = {y}, eps = {eps}")));
    }
    let one = T::one();
    let quad = (one + eps) * (T::lit(3.0) + T::lit(2.0) * eps) * y * y + eps * y + one;
    Ok(quad * (one - y).powf(eps))
}

/// `ψ'(y) = (1+ε)(2+ε) y (1-y)^{ε-1} [3 - (3+2ε) y]`.
pub fn psi_prime<T: Real>(y: T, eps: T) -> Result<T> {
    psi(y, eps)?;
    let one = T::one();
    let three = T::lit(3.0);
    Ok((one + eps) * (T::lit(2.0) + eps) * y * (one - y).powf(eps - one) * (three - (three + T::lit(2.0) * eps) * y))
}

/// Maximiser `3/(3+2ε)` of `ψ`.
pub fn psi_argmax<T: Real>(eps: T) -> T {
    T::lit(3.0) / (T::lit(3.0) + T::lit(2.0) * eps)
}

/// `sup ψ = [2(7ε+6)/(2ε+3)] (2ε/(2ε+3))^ε`.
pub fn psi_sup<T: Real>(eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return Err(domain("psi_sup", format!("need eps > 0, got {eps}")));
    }
    let two = T::lit(2.0);
    let d = two * eps + T::lit(3.0);
    Ok(two * (T::lit(7.0) * eps + T::lit(6.0)) / d * (two * eps / d).powf(eps))
}

/// `θ(ε) = log sup ψ`.
pub fn theta<T: Real>(eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return Err(domain("theta", format!("need eps > 0, got {eps}")));
    }
    let two = T::lit(2.0);
    let d = two * eps + T::lit(3.0);
    Ok((two * (T::lit(7.0) * eps + T::lit(6.0)) / d).ln() + eps * (two * eps / d).ln())
}

pub fn theta_prime<T: Real>(eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return Err(domain("theta'", format!("need eps > 0, got {eps}")));
    }
    let two = T::lit(2.0);
    let seven = T::lit(7.0);
    let d = two * eps + T::lit(3.0);
    Ok(T::lit(3.0) * (seven * eps + T::lit(9.0)) / (d * (seven * eps + T::lit(6.0))) + (two * eps / d).ln())
}

pub fn theta_double_prime<T: Real>(eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return Err(domain("theta''", format!("need eps > 0, got {eps}")));
    }
    let d = T::lit(2.0) * eps + T::lit(3.0);
    let e = T::lit(7.0) * eps + T::lit(6.0);
    Ok(T::lit(27.0) * (T::lit(7.0) * eps * eps + T::lit(17.0) * eps + T::lit(12.0)) / (eps * d * d * e * e))
}

/// Denominator family for the ratio `f = |h̊|² / D(|H|²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RatioProfile<T> {
    /// `γ|H|² + a`, codimension one in the sphere.
    SphereCodimOne { gamma: T, a: T },
    /// `|H|² + 2bn²`, codimension `>= 2` in the sphere.
    SphereHighCodim { n: usize, b: T },
    /// `|H|² + (5/3)n²`, codimension `>= 3` in the sphere.
    SphereFixed { n: usize },
    /// `φ(|H|²)`, hyperbolic space.
    Hyperbolic { n: usize, eps: T },
}

impl<T: Real> RatioProfile<T> {
    pub fn denominator(&self, mean_sq: T) -> Result<T> {
        let d = match *self {
            RatioProfile::SphereCodimOne { gamma, a } => gamma * mean_sq + a,
            RatioProfile::SphereHighCodim { n, b } => {
                let n = T::from_usize_lossy(n);
                mean_sq + T::lit(2.0) * b * n * n
            }
            RatioProfile::SphereFixed { n } => {
                let n = T::from_usize_lossy(n);
                mean_sq + T::lit(5.0) / T::lit(3.0) * n * n
            }
            RatioProfile::Hyperbolic { n, eps } => PhiParams::new(n, eps)?.phi(mean_sq)?,
        };
        if d > T::zero() {
            Ok(d)
        } else {
            Err(domain("f_ratio", format!("non-positive denominator {d}")))
        }
    }

    /// Upper bound for `f` implied by the profile's pinching hypothesis, when
    /// one exists in closed form.
    pub fn implied_bound(&self) -> Option<T> {
        match *self {
            RatioProfile::SphereCodimOne { .. } => Some(T::one()),
            RatioProfile::SphereHighCodim { n, .. } => Some(T::one() / (T::lit(2.0) * T::from_usize_lossy(n))),
            RatioProfile::SphereFixed { n } => Some(T::lit(2.0) / (T::lit(5.0) * T::from_usize_lossy(n))),
            RatioProfile::Hyperbolic { .. } => None,
        }
    }
}

/// `f = |h̊|² / D(|H|²)`.
pub fn f_ratio<T: Real>(ring_sq: T, mean_sq: T, profile: &RatioProfile<T>) -> Result<T> {
    if ring_sq < T::zero() || mean_sq < T::zero() {
        return Err(domain("f_ratio", "squared norms must be non-negative"));
    }
    Ok(ring_sq / profile.denominator(mean_sq)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ambient {
    Sphere,
    Hyperbolic,
}

/// A pinching pair `sup(|h|² - κ|H|²) < α`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PinchingPair {
    pub kappa: Ratio<i64>,
    pub alpha: Ratio<i64>,
}

/// All applicable pinching constants for one `(n, p)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdRow {
    pub n: usize,
    pub p: usize,
    pub ambient: Ambient,
    /// Bound on `limsup max |h|²` for the sphere: `n/(1 + sgn(p-1)/2)`.
    pub sphere_bound: Option<Ratio<i64>>,
    /// `(κ, α)` pairs for the sphere.
    pub sphere_pairs: Vec<PinchingPair>,
    /// `γ` and `k = min{γ, 2γ - 1/n}` of the codimension-one argument.
    pub gamma: Ratio<i64>,
    pub codim_one_k: Ratio<i64>,
    /// `ξ`, `ξ̃`, and `n/(ξ+1)` for `p >= 2`.
    pub xi: Option<Ratio<i64>>,
    pub xi_tilde: Option<Ratio<i64>>,
    pub n_over_xi_plus_one: Option<Ratio<i64>>,
    /// Hyperbolic coefficient `k`.
    pub hyperbolic_k: Option<Ratio<i64>>,
    pub warnings: Vec<String>,
}

impl ThresholdRow {
    /// True when every constant in the row is positive.
    pub fn all_positive(&self) -> bool {
        let zero = Ratio::from_integer(0);
        let opt = |v: &Option<Ratio<i64>>| v.map_or(true, |r| r > zero);
        opt(&self.sphere_bound)
            && self.sphere_pairs.iter().all(|pp| pp.kappa > zero && pp.alpha > zero)
            && opt(&self.xi)
            && opt(&self.xi_tilde)
            && opt(&self.n_over_xi_plus_one)
            && opt(&self.hyperbolic_k)
    }
}

/// Pinching thresholds for dimension `n`, codimension `p`.
pub fn thresholds(n: usize, p: usize, ambient: Ambient) -> ThresholdRow {
    let ni = n.max(1) as i64;
    let r = |a: i64, b: i64| Ratio::new(a, b);
    let mut warnings = Vec::new();
    if n < 2 {
        warnings.push(format!("n = {n} is below the supported range n >= 2"));
    }
    let gamma = gamma_exact(n.max(1));
    let codim_one_k = gamma.min(gamma * 2 - r(1, ni));
    let (xi, xi_tilde) = if p >= 2 {
        (crate::tensor::xi_exact(p).ok(), crate::tensor::xi_tilde_exact(p).ok())
    } else {
        (None, None)
    };
    let n_over_xi_plus_one = xi.map(|x| Ratio::from_integer(ni) / (x + 1));

    let (sphere_bound, sphere_pairs, hyperbolic_k) = match ambient {
        Ambient::Sphere => {
            let s = crate::scalar::sgn(p as i64 - 1);
            let bound = Ratio::from_integer(ni) / (Ratio::from_integer(1) + r(s, 2));
            let pairs = match p {
                1 => vec![PinchingPair {
                    kappa: r(3, ni + 2).min(r(4 * (ni - 1), ni * (ni + 2))),
                    alpha: Ratio::from_integer(ni),
                }],
                2 => vec![PinchingPair { kappa: r(4, 3 * ni), alpha: r(2 * ni, 3) }],
                _ => vec![
                    PinchingPair { kappa: r(4, 3 * ni), alpha: r(3 * ni, 5) },
                    PinchingPair { kappa: r(1, ni), alpha: r(2 * ni, 3) },
                ],
            };
            (Some(bound), pairs, None)
        }
        Ambient::Hyperbolic => {
            let k = if p >= 2 && n >= 7 { r(1, 3 * ni) } else { r(ni - 1, 2 * ni * (ni + 2)) };
            (None, Vec::new(), Some(k))
        }
    };
    if n < 2 {
        warnings.push("some constants vanish for n = 1".into());
    }
    ThresholdRow {
        n,
        p,
        ambient,
        sphere_bound,
        sphere_pairs,
        gamma,
        codim_one_k,
        xi,
        xi_tilde,
        n_over_xi_plus_one,
        hyperbolic_k,
        warnings,
    }
}

/// `|h|²` of the minimal Clifford hypersurfaces in `S^{n+1}`.
pub fn clifford_norm_sq(n: usize) -> Ratio<i64> {
    Ratio::from_integer(n as i64)
}

/// `|h|²` of the Veronese surface in `S⁴`.
pub const VERONESE_NORM_SQ: (i64, i64) = (4, 3);
