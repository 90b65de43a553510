//! Pointwise algebra of the second fundamental form `h^α_ij` of an
//! `n`-dimensional submanifold with codimension `p`.
//!
//! Everything here is a pure function of the coefficient array. The
//! inequality checks return signed slacks (`rhs - lhs`) so callers can decide
//! on tolerances and report the worst case.

pub mod sweep;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Real;

/// Second fundamental form at a point: `p` symmetric `n x n` slices.
#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalForm<T> {
    n: usize,
    p: usize,
    slices: Vec<Mat<T>>,
}

impl<T: Real> FundamentalForm<T> {
    /// Builds a form from a flat `[α][i][j]` coefficient array.
    pub fn new(n: usize, p: usize, coeffs: &[T]) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Shape(format!("need n >= 1 and p >= 1, got n = {n}, p = {p}")));
        }
        if coeffs.len() != n * n * p {
            return Err(Error::Shape(format!(
                "expected {} coefficients for n = {n}, p = {p}, got {}",
                n * n * p,
                coeffs.len()
            )));
        }
        let slices = coeffs
            .chunks(n * n)
            .map(|chunk| Mat::from_fn(n, |i, j| chunk[i * n + j]))
            .collect();
        Self::from_slices(slices)
    }

    /// Builds a form from its normal slices `h^1, ..., h^p`.
    pub fn from_slices(slices: Vec<Mat<T>>) -> Result<Self> {
        let p = slices.len();
        if p == 0 {
            return Err(Error::Shape("at least one normal slice required".into()));
        }
        let n = slices[0].dim();
        if n == 0 {
            return Err(Error::Shape("slices must be non-empty".into()));
        }
        for (alpha, s) in slices.iter().enumerate() {
            if s.dim() != n {
                return Err(Error::Shape(format!("slice {alpha} has dimension {} != {n}", s.dim())));
            }
            if let Some(k) = s.as_slice().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(alpha * n * n + k));
            }
            let asym = s.asymmetry();
            if asym > symmetry_tolerance(s) {
                return Err(Error::NotSymmetric { slice: alpha, asymmetry: asym.to_f64_lossy() });
            }
        }
        // store exactly symmetric coefficients
        let slices = slices
            .into_iter()
            .map(|s| Mat::from_fn(n, |i, j| (s[(i, j)] + s[(j, i)]) * T::lit(0.5)))
            .collect();
        Ok(Self { n, p, slices })
    }

    /// Zero form.
    pub fn zeros(n: usize, p: usize) -> Self {
        Self { n, p, slices: vec![Mat::zeros(n); p] }
    }

    /// Codimension-one form `λ·I`.
    pub fn umbilical(n: usize, lambda: T) -> Self {
        Self { n, p: 1, slices: vec![Mat::identity(n).scale(lambda)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn codim(&self) -> usize {
        self.p
    }

    pub fn slices(&self) -> &[Mat<T>] {
        &self.slices
    }

    pub fn slice(&self, alpha: usize) -> &Mat<T> {
        &self.slices[alpha]
    }

    pub fn get(&self, alpha: usize, i: usize, j: usize) -> T {
        self.slices[alpha][(i, j)]
    }

    /// Components `H^α = Σ_i h^α_ii` of the mean curvature vector.
    pub fn mean_curvature(&self) -> Vec<T> {
        self.slices.iter().map(Mat::trace).collect()
    }

    /// `|H|²`.
    pub fn mean_curvature_sq(&self) -> T {
        self.mean_curvature().iter().fold(T::zero(), |acc, &h| acc + h * h)
    }

    /// `|h|²`.
    pub fn norm_sq(&self) -> T {
        self.slices.iter().fold(T::zero(), |acc, s| acc + s.frobenius_sq())
    }

    /// Trace-free part `h̊ = h - (1/n) H ⊗ g`.
    pub fn traceless(&self) -> Self {
        let inv_n = T::one() / T::from_usize_lossy(self.n);
        let slices = self.slices.iter().map(|s| traceless_slice(s, inv_n)).collect();
        Self { n: self.n, p: self.p, slices }
    }

    /// `|h̊|²` computed from the trace-free slices directly.
    pub fn traceless_norm_sq(&self) -> T {
        self.traceless().norm_sq()
    }

    /// Reaction terms `R₁`, `R₂` by direct summation.
    pub fn reaction_terms(&self) -> ReactionTerms<T> {
        let inner = gram_matrix(&self.slices);
        let r1_trace = inner.iter().flatten().fold(T::zero(), |acc, &g| acc + g * g);
        let r1_comm = commutator_sum(&self.slices);

        let mean = self.mean_curvature();
        let mut combined = Mat::zeros(self.n);
        for (s, &h) in self.slices.iter().zip(&mean) {
            combined = Mat::from_fn(self.n, |i, j| combined[(i, j)] + h * s[(i, j)]);
        }
        ReactionTerms { r1: r1_trace + r1_comm, r2: combined.frobenius_sq() }
    }

    /// Reference scale `max(|h|², tiny)²` used to normalise quartic slacks.
    pub fn quartic_scale(&self) -> T {
        let h2 = self.norm_sq();
        h2 * h2 + T::min_positive_value()
    }

    /// Special frame: first normal direction along `H`, `h¹` diagonalised.
    ///
    /// When `|H| <= tol · |h|` the frame is flagged degenerate and the normal
    /// direction with the largest slice norm is used as the first direction.
    pub fn special_frame(&self, tol: T) -> FrameDecomposition<T> {
        let mean = self.mean_curvature();
        let h_norm = mean.iter().fold(T::zero(), |acc, &h| acc + h * h).sqrt();
        let scale = self.norm_sq().sqrt();
        let degenerate = h_norm <= tol * scale || h_norm == T::zero();

        let basis = if degenerate {
            let lead = (0..self.p)
                .fold((0, T::neg_infinity()), |best, a| {
                    let v = self.slices[a].frobenius_sq();
                    if v > best.1 {
                        (a, v)
                    } else {
                        best
                    }
                })
                .0;
            let mut order = vec![lead];
            order.extend((0..self.p).filter(|&a| a != lead));
            order
                .into_iter()
                .map(|a| (0..self.p).map(|b| if a == b { T::one() } else { T::zero() }).collect())
                .collect()
        } else {
            let unit: Vec<T> = mean.iter().map(|&h| h / h_norm).collect();
            orthonormal_completion(&unit)
        };

        let rotated: Vec<Mat<T>> = basis
            .iter()
            .map(|nu: &Vec<T>| {
                let mut acc = Mat::zeros(self.n);
                for (s, &w) in self.slices.iter().zip(nu) {
                    acc = Mat::from_fn(self.n, |i, j| acc[(i, j)] + w * s[(i, j)]);
                }
                acc
            })
            .collect();

        let (lambdas, tangent) = rotated[0].symmetric_eigen();
        let inv_n = T::one() / T::from_usize_lossy(self.n);
        let mean_lambda = h_norm * inv_n;
        let ring_lambdas = if degenerate {
            let tr = lambdas.iter().fold(T::zero(), |a, &l| a + l) * inv_n;
            lambdas.iter().map(|&l| l - tr).collect()
        } else {
            lambdas.iter().map(|&l| l - mean_lambda).collect()
        };
        let off_components: Vec<Mat<T>> =
            rotated[1..].iter().map(|s| traceless_slice(&s.congruence(&tangent), inv_n)).collect();
        let p_scalar = off_components.iter().fold(T::zero(), |acc, s| acc + s.frobenius_sq());

        FrameDecomposition {
            h_norm,
            lambdas,
            ring_lambdas,
            off_components,
            p_scalar,
            degenerate,
            normal_frame: basis,
            tangent_frame: tangent,
        }
    }

    /// The form expressed in the special frame (`h¹` diagonal, `H = |H| ν₁`).
    pub fn in_frame(&self, frame: &FrameDecomposition<T>) -> Self {
        let slices = frame
            .normal_frame
            .iter()
            .map(|nu| {
                let mut acc = Mat::zeros(self.n);
                for (s, &w) in self.slices.iter().zip(nu) {
                    acc = Mat::from_fn(self.n, |i, j| acc[(i, j)] + w * s[(i, j)]);
                }
                acc.congruence(&frame.tangent_frame)
            })
            .collect();
        Self { n: self.n, p: self.p, slices }
    }
}

fn symmetry_tolerance<T: Real>(s: &Mat<T>) -> T {
    T::lit(64.0) * T::epsilon() * s.max_abs()
}

fn traceless_slice<T: Real>(s: &Mat<T>, inv_n: T) -> Mat<T> {
    let shift = s.trace() * inv_n;
    Mat::from_fn(s.dim(), |i, j| if i == j { s[(i, j)] - shift } else { s[(i, j)] })
}

fn gram_matrix<T: Real>(slices: &[Mat<T>]) -> Vec<Vec<T>> {
    slices.iter().map(|a| slices.iter().map(|b| a.frobenius_dot(b)).collect()).collect()
}

/// `Σ_{α,β} |A_α A_β - A_β A_α|²`.
fn commutator_sum<T: Real>(slices: &[Mat<T>]) -> T {
    let mut total = T::zero();
    for (a, sa) in slices.iter().enumerate() {
        for sb in slices.iter().skip(a + 1) {
            let comm = sa.mul(sb).sub(&sb.mul(sa));
            total = total + comm.frobenius_sq();
        }
    }
    // ordered pairs (α, β) and (β, α) contribute equally
    total * T::lit(2.0)
}

/// Orthonormal basis of `R^p` whose first vector is `unit`.
fn orthonormal_completion<T: Real>(unit: &[T]) -> Vec<Vec<T>> {
    let p = unit.len();
    let s = if unit[0] >= T::zero() { T::one() } else { -T::one() };
    let mut w = unit.to_vec();
    w[0] = w[0] + s;
    let w_sq = w.iter().fold(T::zero(), |acc, &x| acc + x * x);
    let two = T::lit(2.0);
    // Householder H = I - 2wwᵀ/|w|² satisfies H unit = -s e₁
    let column = |k: usize| -> Vec<T> {
        (0..p)
            .map(|i| {
                let delta = if i == k { T::one() } else { T::zero() };
                delta - two * w[i] * w[k] / w_sq
            })
            .collect()
    };
    let mut basis = Vec::with_capacity(p);
    basis.push(unit.to_vec());
    for k in 1..p {
        basis.push(column(k));
    }
    basis
}

/// `R₁`, `R₂` of the evolution equations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactionTerms<T> {
    pub r1: T,
    pub r2: T,
}

/// Special-frame data: `|H|`, eigenvalues `λ_i` of `h¹`, `λ̊_i`, the
/// remaining slices and `P = Σ_{α>1} |h̊^α|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameDecomposition<T> {
    pub h_norm: T,
    pub lambdas: Vec<T>,
    pub ring_lambdas: Vec<T>,
    pub off_components: Vec<Mat<T>>,
    pub p_scalar: T,
    pub degenerate: bool,
    /// Rows are the new normal basis vectors in the original coordinates.
    pub normal_frame: Vec<Vec<T>>,
    /// Columns are the new tangent basis vectors.
    pub tangent_frame: Mat<T>,
}

impl<T: Real> FrameDecomposition<T> {
    pub fn lambda_sq_sum(&self) -> T {
        self.lambdas.iter().fold(T::zero(), |a, &l| a + l * l)
    }

    pub fn ring_lambda_sq_sum(&self) -> T {
        self.ring_lambdas.iter().fold(T::zero(), |a, &l| a + l * l)
    }
}

/// Default relative threshold below which `|H|` is treated as zero.
pub fn frame_tolerance<T: Real>() -> T {
    T::lit(1e-12)
}

/// Terms of the Li–Li matrix inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiLiTerms<T> {
    pub commutators: T,
    pub traces: T,
    pub rhs: T,
    /// `(Σ|A_α|²)²`
    pub scale: T,
}

impl<T: Real> LiLiTerms<T> {
    pub fn slack(&self) -> T {
        self.rhs - self.commutators - self.traces
    }
}

pub fn li_li_terms<T: Real>(mats: &[Mat<T>]) -> Result<LiLiTerms<T>> {
    if mats.len() < 2 {
        return Err(Error::Shape(format!("need at least two matrices, got {}", mats.len())));
    }
    let n = mats[0].dim();
    for (k, m) in mats.iter().enumerate() {
        if m.dim() != n {
            return Err(Error::Shape(format!("matrix {k} has dimension {} != {n}", m.dim())));
        }
        let asym = m.asymmetry();
        if asym > symmetry_tolerance(m) {
            return Err(Error::NotSymmetric { slice: k, asymmetry: asym.to_f64_lossy() });
        }
    }
    let norm_sq = mats.iter().fold(T::zero(), |a, m| a + m.frobenius_sq());
    let traces = gram_matrix(mats).iter().flatten().fold(T::zero(), |a, &g| a + g * g);
    Ok(LiLiTerms {
        commutators: commutator_sum(mats),
        traces,
        rhs: T::lit(1.5) * norm_sq * norm_sq,
        scale: norm_sq * norm_sq,
    })
}

/// `(3/2)(Σ|A_α|²)² - Σ|[A_α, A_β]|² - Σ tr(A_α A_β)²`.
pub fn check_li_li<T: Real>(mats: &[Mat<T>]) -> Result<T> {
    li_li_terms(mats).map(|t| t.slack())
}

/// Left and right sides of an `R₁` upper bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundTerms<T> {
    pub lhs: T,
    pub rhs: T,
    pub scale: T,
    pub degenerate: bool,
}

impl<T: Real> BoundTerms<T> {
    pub fn slack(&self) -> T {
        self.rhs - self.lhs
    }

    pub fn relative_slack(&self) -> T {
        self.slack() / self.scale
    }
}

/// `R₁ <= (3/2)|h̊|⁴ + (2/n)R₂ - |H|⁴/n²`.
pub fn r1_bound_global_terms<T: Real>(h: &FundamentalForm<T>) -> BoundTerms<T> {
    let n = T::from_usize_lossy(h.dim());
    let rt = h.reaction_terms();
    let ring = h.traceless_norm_sq();
    let hsq = h.mean_curvature_sq();
    BoundTerms {
        lhs: rt.r1,
        rhs: T::lit(1.5) * ring * ring + T::lit(2.0) / n * rt.r2 - hsq * hsq / (n * n),
        scale: h.quartic_scale(),
        degenerate: false,
    }
}

pub fn check_r1_bound_global<T: Real>(h: &FundamentalForm<T>) -> Result<T> {
    if h.codim() < 2 {
        return Err(Error::Shape("global R1 bound is stated for p >= 2".into()));
    }
    Ok(r1_bound_global_terms(h).slack())
}

/// `R₁ <= |h|⁴ + (2|h̊|² - (2/n)|H|²) P - ξ⁻¹ P²` with `P` from the special frame.
pub fn r1_bound_frame_terms<T: Real>(h: &FundamentalForm<T>) -> Result<BoundTerms<T>> {
    let (xi, _) = xi_constants::<T>(h.codim())?;
    let frame = h.special_frame(frame_tolerance());
    let n = T::from_usize_lossy(h.dim());
    let two = T::lit(2.0);
    let hsq = h.norm_sq();
    let ring = h.traceless_norm_sq();
    let big_p = frame.p_scalar;
    let rhs = hsq * hsq + (two * ring - two / n * h.mean_curvature_sq()) * big_p - big_p * big_p / xi;
    Ok(BoundTerms { lhs: h.reaction_terms().r1, rhs, scale: h.quartic_scale(), degenerate: frame.degenerate })
}

/// Frame bound slack plus the degenerate-frame flag.
pub fn check_r1_bound_frame<T: Real>(h: &FundamentalForm<T>) -> Result<(T, bool)> {
    r1_bound_frame_terms(h).map(|t| (t.slack(), t.degenerate))
}

/// `|R₂ - |H|²(|h|² - P)|`.
pub fn check_r2_identity<T: Real>(h: &FundamentalForm<T>) -> T {
    let frame = h.special_frame(frame_tolerance());
    let r2 = h.reaction_terms().r2;
    (r2 - h.mean_curvature_sq() * (h.norm_sq() - frame.p_scalar)).abs()
}

/// Scale used with [`check_r2_identity`]: `1 + |H|²|h|²`.
pub fn r2_identity_scale<T: Real>(h: &FundamentalForm<T>) -> T {
    T::one() + h.mean_curvature_sq() * h.norm_sq()
}

/// `ξ = 2/(4 - sgn(p-2))` as an exact rational.
pub fn xi_exact(p: usize) -> Result<Ratio<i64>> {
    if p < 2 {
        return Err(Error::Shape(format!("ξ is defined for p >= 2, got p = {p}")));
    }
    let s = crate::scalar::sgn(p as i64 - 2);
    Ok(Ratio::new(2, 4 - s))
}

/// `ξ̃ = 1 + sgn(p-2)/2` as an exact rational.
pub fn xi_tilde_exact(p: usize) -> Result<Ratio<i64>> {
    if p < 2 {
        return Err(Error::Shape(format!("ξ̃ is defined for p >= 2, got p = {p}")));
    }
    let s = crate::scalar::sgn(p as i64 - 2);
    Ok(Ratio::new(2 + s, 2))
}

/// `(ξ, ξ̃)` realised in floating point.
pub fn xi_constants<T: Real>(p: usize) -> Result<(T, T)> {
    Ok((crate::ratio_to(xi_exact(p)?), crate::ratio_to(xi_tilde_exact(p)?)))
}
