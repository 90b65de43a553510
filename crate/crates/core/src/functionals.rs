//! Integral quantities along the flow: volume, `∫|h̊|²`, `∫|h̊|ⁿ`, the
//! moments of `U = |h̊|² - |H|²/n²`, Gauss–Bonnet, a Sobolev-form check and
//! the explicit constants of the integral pinching arguments.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact::SpaceForm;
use crate::flow::{CurvatureFields, FlowState};
use crate::ratio_to;
use crate::scalar::Real;

/// Every supported closed rotational hypersurface is a sphere.
pub const EULER_CHARACTERISTIC: i32 = 2;

/// Default regularisations for [`regularised_divergence_check`].
pub const U_EPSILONS: [f64; 3] = [1e-2, 1e-4, 1e-6];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JMoment<T> {
    pub order: T,
    pub value: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalRecord<T> {
    pub t: T,
    pub vol: T,
    /// `I = ∫|h̊|²`.
    pub ring_l2: T,
    /// `∫|h̊|⁴`.
    pub ring_l4: T,
    /// `W = ∫|h̊|ⁿ`.
    pub willmore: T,
    pub mean_sq_integral: T,
    /// `J_r = ∫U₊^{r/2}`.
    pub j_moments: Vec<JMoment<T>>,
    /// Only for surfaces.
    pub gauss_bonnet_residual: Option<T>,
    pub euler_characteristic: i32,
}

/// `U = |h̊|² - |H|²/n²` per node.
pub fn u_field<T: Real>(fields: &CurvatureFields<T>) -> Vec<T> {
    let n2 = T::from_usize_lossy(fields.n * fields.n);
    fields.ring_sq.iter().zip(&fields.mean_sq).map(|(&r, &m)| r - m / n2).collect()
}

fn positive_part<T: Real>(x: T) -> T {
    x.max(T::zero())
}

fn ring_abs<T: Real>(fields: &CurvatureFields<T>) -> Vec<T> {
    fields.ring_sq.iter().map(|&r| positive_part(r).sqrt()).collect()
}

pub fn j_moment<T: Real>(fields: &CurvatureFields<T>, order: T) -> T {
    let half = order / T::lit(2.0);
    let vals: Vec<T> = u_field(fields)
        .into_iter()
        .map(|u| {
            let p = positive_part(u);
            if p > T::zero() {
                p.powf(half)
            } else {
                T::zero()
            }
        })
        .collect();
    fields.integrate(&vals)
}

pub fn integrals<T: Real>(state: &FlowState<T>, fields: &CurvatureFields<T>, j_orders: &[T]) -> Result<FunctionalRecord<T>> {
    let ring = ring_abs(fields);
    let n = fields.n as i32;
    let ring_l4: Vec<T> = fields.ring_sq.iter().map(|&r| r * r).collect();
    let willmore: Vec<T> = ring.iter().map(|&r| r.powi(n)).collect();
    let gauss_bonnet_residual = if fields.n == 2 { Some(gauss_bonnet_defect(fields)?.abs()) } else { None };
    Ok(FunctionalRecord {
        t: state.t,
        vol: fields.volume(),
        ring_l2: fields.integrate(&fields.ring_sq),
        ring_l4: fields.integrate(&ring_l4),
        willmore: fields.integrate(&willmore),
        mean_sq_integral: fields.integrate(&fields.mean_sq),
        j_moments: j_orders.iter().map(|&order| JMoment { order, value: j_moment(fields, order) }).collect(),
        gauss_bonnet_residual,
        euler_characteristic: EULER_CHARACTERISTIC,
    })
}

/// `∫(¼|H|² - ½|h̊|² + c)dμ - 2πχ`, signed.
pub fn gauss_bonnet_defect<T: Real>(fields: &CurvatureFields<T>) -> Result<T> {
    if fields.n != 2 {
        return Err(domain("gauss_bonnet", format!("surfaces only, got n = {}", fields.n)));
    }
    let c = T::lit(fields.c as f64);
    let integrand: Vec<T> = fields
        .mean_sq
        .iter()
        .zip(&fields.ring_sq)
        .map(|(&m, &r)| T::lit(0.25) * m - T::lit(0.5) * r + c)
        .collect();
    Ok(fields.integrate(&integrand) - T::lit(2.0 * EULER_CHARACTERISTIC as f64) * T::PI())
}

pub fn gauss_bonnet_residual<T: Real>(fields: &CurvatureFields<T>) -> Result<T> {
    gauss_bonnet_defect(fields).map(T::abs)
}

/// `∫((3/2)|h̊|² - ¼|H|²)dμ`, which equals `I - 2πχ + c·vol` for surfaces.
pub fn gauss_bonnet_combination<T: Real>(fields: &CurvatureFields<T>) -> Result<T> {
    if fields.n != 2 {
        return Err(domain("gauss_bonnet_combination", format!("surfaces only, got n = {}", fields.n)));
    }
    let integrand: Vec<T> = fields
        .mean_sq
        .iter()
        .zip(&fields.ring_sq)
        .map(|(&m, &r)| T::lit(1.5) * r - T::lit(0.25) * m)
        .collect();
    Ok(fields.integrate(&integrand))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevSlack<T> {
    pub gradient_term: T,
    pub mean_term: T,
    /// `(∫f^{n/(n-1)})^{(n-1)/n}`.
    pub lhs: T,
    /// `B∫(|∇f| + f|H|) - lhs`.
    pub slack: T,
}

/// Mean curvature of the hypersurface seen in Euclidean space.
pub fn euclidean_mean_curvature<T: Real>(fields: &CurvatureFields<T>) -> Result<Vec<T>> {
    let n2 = T::from_usize_lossy(fields.n * fields.n);
    match SpaceForm::from_curvature(fields.c) {
        Some(SpaceForm::Euclidean) => Ok(fields.mean.iter().map(|m| m.abs()).collect()),
        Some(SpaceForm::Sphere) => Ok(fields.mean_sq.iter().map(|&m| (m + n2).sqrt()).collect()),
        _ => Err(domain("sobolev_check", "hyperbolic states are not realised in Euclidean space")),
    }
}

/// Slack of `(∫f^{n/(n-1)})^{(n-1)/n} <= B∫(|∇f| + f|H|)`.
pub fn sobolev_check<T: Real>(fields: &CurvatureFields<T>, f: &[T], b: T) -> Result<SobolevSlack<T>> {
    if fields.n < 2 {
        return Err(domain("sobolev_check", "needs n >= 2"));
    }
    if f.len() != fields.len() {
        return Err(Error::Shape(format!("field has {} nodes, geometry has {}", f.len(), fields.len())));
    }
    if let Some(j) = f.iter().position(|&x| !(x >= T::zero())) {
        return Err(domain("sobolev_check", format!("f must be non-negative, node {j} is {}", f[j])));
    }
    let mean = euclidean_mean_curvature(fields)?;
    let grad: Vec<T> = fields.d_s(f).into_iter().map(T::abs).collect();
    let fh: Vec<T> = f.iter().zip(&mean).map(|(&a, &m)| a * m).collect();
    let nn = T::from_usize_lossy(fields.n);
    let p = nn / (nn - T::one());
    let pow: Vec<T> = f.iter().map(|&a| a.powf(p)).collect();
    let gradient_term = b * fields.integrate(&grad);
    let mean_term = b * fields.integrate(&fh);
    let lhs = fields.integrate(&pow).powf(T::one() / p);
    Ok(SobolevSlack { gradient_term, mean_term, lhs, slack: gradient_term + mean_term - lhs })
}

/// Exact constants of the integral arguments. Constants involving the
/// Sobolev constant `B` are stored as rational multiples of `1/B²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionFourConstants {
    pub n: usize,
}

impl SectionFourConstants {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    fn nr(&self) -> Ratio<i64> {
        Ratio::from_integer(self.n as i64)
    }

    /// `A₁·B² = (q-1)/(4q)·1/2`.
    pub fn a1_times_b_sq(&self, q: Ratio<i64>) -> Ratio<i64> {
        (q - 1) / (q * 4) / 2
    }

    /// `A₂ = n²/4 + 4qn`.
    pub fn a2(&self, q: Ratio<i64>) -> Ratio<i64> {
        let n = self.nr();
        n * n / 4 + q * n * 4
    }

    /// `D₁ = (3n² + 2n)/4`.
    pub fn d1(&self) -> Ratio<i64> {
        let n = self.nr();
        (n * n * 3 + n * 2) / 4
    }

    /// `D₂·B² = (n-2)/(8n)`.
    pub fn d2_times_b_sq(&self) -> Ratio<i64> {
        let n = self.nr();
        (n - 2) / (n * 8)
    }

    /// `D₃ = (n² + 10n)/4`.
    pub fn d3(&self) -> Ratio<i64> {
        let n = self.nr();
        (n * n + n * 10) / 4
    }

    /// Exponents `q ∈ {n/2, n²/(2(n-2))}` of the Euclidean threshold.
    pub fn q_candidates(&self) -> Result<[Ratio<i64>; 2]> {
        if self.n < 3 {
            return Err(domain("q_candidates", "needs n >= 3"));
        }
        let n = self.n as i64;
        Ok([Ratio::new(n, 2), Ratio::new(n * n, 2 * (n - 2))])
    }

    pub fn a1<T: Real>(&self, q: Ratio<i64>, b: T) -> T {
        ratio_to::<T>(self.a1_times_b_sq(q)) / (b * b)
    }

    pub fn d2<T: Real>(&self, b: T) -> T {
        ratio_to::<T>(self.d2_times_b_sq()) / (b * b)
    }

    /// `1/(60B²)` for surfaces in Euclidean space, `1/(54B²)` in the sphere.
    pub fn c_surface<T: Real>(space: SpaceForm, b: T) -> Result<T> {
        let denom = match space {
            SpaceForm::Euclidean => 60.0,
            SpaceForm::Sphere => 54.0,
            SpaceForm::Hyperbolic => return Err(domain("c_surface", "no threshold in hyperbolic space")),
        };
        Ok(T::one() / (T::lit(denom) * b * b))
    }

    /// `C̄ = 2C + 16π`.
    pub fn c_bar<T: Real>(c: T) -> T {
        T::lit(2.0) * c + T::lit(16.0) * T::PI()
    }

    /// `(D₂/D₃)^{n/2}`.
    pub fn c_sphere<T: Real>(&self, b: T) -> Result<T> {
        if self.n < 3 {
            return Err(domain("c_sphere", "needs n >= 3"));
        }
        let ratio = self.d2(b) / ratio_to::<T>(self.d3());
        Ok(ratio.powf(T::from_usize_lossy(self.n) / T::lit(2.0)))
    }

    /// `(A₁/A₂)^{n/2}` for each candidate `q`, and their minimum.
    pub fn c_euclidean<T: Real>(&self, b: T) -> Result<([(Ratio<i64>, T); 2], T)> {
        let half_n = T::from_usize_lossy(self.n) / T::lit(2.0);
        let qs = self.q_candidates()?;
        let vals = qs.map(|q| (q, (self.a1(q, b) / ratio_to::<T>(self.a2(q))).powf(half_n)));
        let min = vals[0].1.min(vals[1].1);
        Ok((vals, min))
    }
}

/// Three-point derivative on a possibly non-uniform grid.
fn derivative_at<T: Real>(t: [T; 3], y: [T; 3]) -> T {
    let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
    (-h1 / (h0 * (h0 + h1))) * y[0] + ((h1 - h0) / (h0 * h1)) * y[1] + (h0 / (h1 * (h0 + h1))) * y[2]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow<T> {
    pub t: T,
    pub ring_l2: T,
    pub vol: T,
    pub d_ring_l2: T,
    /// `-∫|h̊|⁴`.
    pub quartic_bound: T,
    /// `-I²/vol`.
    pub bound: T,
    /// `bound - dI/dt`; non-negative when the inequality holds.
    pub slack: T,
    pub violated: bool,
    /// `vol(t_end) + C̄(t_end - t)`.
    pub vol_bound: T,
    pub vol_ok: bool,
    /// `1/I(t) + log(1 + C̄(t_end - t)/vol(t_end))/C̄`.
    pub log_lower_bound: T,
    pub log_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport2d<T> {
    pub c: T,
    pub c_bar: T,
    pub tolerance: T,
    pub rows: Vec<DecayRow<T>>,
    pub violations: usize,
    pub min_slack: T,
}

/// Compares `dI/dt` with `-I²/vol` along a surface trajectory.
pub fn decay_monitor_2d<T: Real>(records: &[FunctionalRecord<T>], c: T, tolerance: T) -> Result<DecayReport2d<T>> {
    if records.len() < 3 {
        return Err(Error::Insufficient(format!("need at least 3 functional records, got {}", records.len())));
    }
    if records.iter().any(|r| r.gauss_bonnet_residual.is_none()) {
        return Err(domain("decay_monitor_2d", "surface trajectories only"));
    }
    let c_bar = SectionFourConstants::c_bar(c);
    let last = records.last().expect("non-empty");
    // I below tolerance·vol is roundoff; I ≡ 0 satisfies the logarithmic bound trivially
    let resolved = |r: &FunctionalRecord<T>| r.ring_l2 > tolerance * r.vol;
    let inv_end = if resolved(last) { T::one() / last.ring_l2 } else { T::infinity() };
    let mut rows = Vec::with_capacity(records.len() - 2);
    let mut violations = 0;
    let mut min_slack = T::infinity();
    for w in records.windows(3) {
        let r = &w[1];
        let d = derivative_at([w[0].t, w[1].t, w[2].t], [w[0].ring_l2, w[1].ring_l2, w[2].ring_l2]);
        let bound = -r.ring_l2 * r.ring_l2 / r.vol;
        let slack = bound - d;
        let violated = slack < -tolerance;
        let span = last.t - r.t;
        let vol_bound = last.vol + c_bar * span;
        let log_lower_bound = if resolved(r) {
            T::one() / r.ring_l2 + (T::one() + c_bar * span / last.vol).ln() / c_bar
        } else {
            T::infinity()
        };
        violations += usize::from(violated);
        min_slack = min_slack.min(slack);
        rows.push(DecayRow {
            t: r.t,
            ring_l2: r.ring_l2,
            vol: r.vol,
            d_ring_l2: d,
            quartic_bound: -r.ring_l4,
            bound,
            slack,
            violated,
            vol_bound,
            vol_ok: r.vol <= vol_bound * (T::one() + tolerance),
            log_lower_bound,
            log_ok: inv_end.is_infinite() || inv_end * (T::one() + tolerance) >= log_lower_bound,
        });
    }
    Ok(DecayReport2d { c, c_bar, tolerance, rows, violations, min_slack })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow<T> {
    pub t: T,
    /// `J_{2q} = ∫U₊^q`.
    pub moment: T,
    pub d_moment: T,
    /// Right-hand side of the differential inequality.
    pub rhs: T,
    /// `rhs - d_moment`.
    pub slack: T,
    /// `J_{n²/(n-2)}`.
    pub critical_moment: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport<T> {
    pub n: usize,
    pub q: T,
    pub b: T,
    pub space: SpaceForm,
    pub rows: Vec<MomentRow<T>>,
    pub min_slack: T,
    /// Largest increase of `J_{n²/(n-2)}` between consecutive records.
    pub critical_max_increase: T,
}

fn u_plus_power<T: Real>(fields: &CurvatureFields<T>, power: T) -> T {
    let vals: Vec<T> = u_field(fields)
        .into_iter()
        .map(|u| if u > T::zero() { u.powf(power) } else { T::zero() })
        .collect();
    fields.integrate(&vals)
}

/// Evaluates both sides of the `∫U₊^q` differential inequality along a
/// trajectory: in Euclidean space
/// `[-A₁ + A₂W^{2/n}](∫U₊^{qn/(n-2)})^{(n-2)/n}`, in the sphere (`q = n/2`)
/// `-D₁∫U₊^{n/2} - [D₂ - D₃W^{2/n}](∫U₊^{n²/(2(n-2))})^{(n-2)/n}`.
pub fn u_moment_monitor<T: Real>(states: &[FlowState<T>], q: Ratio<i64>, b: T) -> Result<MomentReport<T>> {
    if states.len() < 3 {
        return Err(Error::Insufficient(format!("need at least 3 states, got {}", states.len())));
    }
    let n = states[0].n;
    let space = states[0].space;
    if n < 3 {
        return Err(domain("u_moment_monitor", format!("needs n >= 3, got {n}")));
    }
    if space == SpaceForm::Hyperbolic {
        return Err(domain("u_moment_monitor", "Euclidean or sphere ambient only"));
    }
    if space == SpaceForm::Sphere && q != Ratio::new(n as i64, 2) {
        return Err(domain("u_moment_monitor", "the sphere inequality is stated for q = n/2"));
    }
    if q <= Ratio::from_integer(1) {
        return Err(domain("u_moment_monitor", "needs q > 1"));
    }
    let consts = SectionFourConstants::new(n);
    let qt: T = ratio_to(q);
    let nn = T::from_usize_lossy(n);
    let exponent = (nn - T::lit(2.0)) / nn;
    let fields: Vec<CurvatureFields<T>> = states.iter().map(crate::flow::curvature_fields).collect::<Result<_>>()?;
    let moments: Vec<T> = fields.iter().map(|f| u_plus_power(f, qt)).collect();
    let critical_power = nn / (T::lit(2.0) * exponent);
    let critical: Vec<T> = fields.iter().map(|f| u_plus_power(f, critical_power)).collect();
    let mut rows = Vec::new();
    let mut min_slack = T::infinity();
    for k in 1..states.len() - 1 {
        let f = &fields[k];
        let d = derivative_at(
            [states[k - 1].t, states[k].t, states[k + 1].t],
            [moments[k - 1], moments[k], moments[k + 1]],
        );
        let ring: Vec<T> = ring_abs(f).into_iter().map(|r| r.powi(n as i32)).collect();
        let w = f.integrate(&ring).powf(T::lit(2.0) / nn);
        let rhs = match space {
            SpaceForm::Euclidean => {
                let high = u_plus_power(f, qt * nn / (nn - T::lit(2.0))).powf(exponent);
                (-consts.a1(q, b) + ratio_to::<T>(consts.a2(q)) * w) * high
            }
            _ => {
                let high = critical[k].powf(exponent);
                -ratio_to::<T>(consts.d1()) * moments[k] - (consts.d2(b) - ratio_to::<T>(consts.d3()) * w) * high
            }
        };
        let slack = rhs - d;
        min_slack = min_slack.min(slack);
        rows.push(MomentRow { t: states[k].t, moment: moments[k], d_moment: d, rhs, slack, critical_moment: critical[k] });
    }
    let critical_max_increase = critical.windows(2).map(|w| w[1] - w[0]).fold(T::neg_infinity(), T::max);
    Ok(MomentReport { n, q: qt, b, space, rows, min_slack, critical_max_increase })
}

/// Terms of the regularised divergence-theorem step for one `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularisedTerms<T> {
    pub eps: T,
    /// `∫U_ε^{q-1}ΔU`.
    pub lhs: T,
    /// `-(q-1)∫U_ε^{q-3}U₊|∇U|²`.
    pub divergence: T,
    /// `-(q-1)∫U_ε^{q-2}|∇U_ε|²`.
    pub gradient_bound: T,
    /// `-(q-1)/(4q²)[(∫U_ε^{qn/(n-2)})^{(n-2)/n}/(2B²) - ∫|H|²U_ε^q]`.
    pub sobolev_bound: T,
}

/// `U_ε = sqrt(U₊² + ε)` version of the `∫U₊^{q-1}ΔU` estimate on one state.
///
/// `divergence` reproduces `lhs` only to discretisation accuracy; the two
/// inequalities `divergence <= gradient_bound` and `lhs <= sobolev_bound`
/// are reported, not asserted.
pub fn regularised_divergence_check<T: Real>(
    fields: &CurvatureFields<T>,
    q: T,
    b: T,
    eps: &[T],
) -> Result<Vec<RegularisedTerms<T>>> {
    if fields.n < 3 {
        return Err(domain("regularised_divergence_check", "needs n >= 3"));
    }
    if !(q > T::one()) {
        return Err(domain("regularised_divergence_check", "needs q > 1"));
    }
    let u = u_field(fields);
    let lap = fields.laplacian(&u);
    let grad_u_sq = fields.grad_sq(&u);
    let mean_sq = match SpaceForm::from_curvature(fields.c) {
        Some(SpaceForm::Sphere) => {
            let n2 = T::from_usize_lossy(fields.n * fields.n);
            fields.mean_sq.iter().map(|&m| m + n2).collect()
        }
        Some(SpaceForm::Euclidean) => fields.mean_sq.clone(),
        _ => return Err(domain("regularised_divergence_check", "Euclidean or sphere ambient only")),
    };
    let nn = T::from_usize_lossy(fields.n);
    let one = T::one();
    eps.iter()
        .map(|&e| {
            let ue: Vec<T> = u.iter().map(|&x| (positive_part(x).powi(2) + e).sqrt()).collect();
            let lhs: Vec<T> = ue.iter().zip(&lap).map(|(&a, &l)| a.powf(q - one) * l).collect();
            let div: Vec<T> = (0..u.len())
                .map(|j| ue[j].powf(q - T::lit(3.0)) * positive_part(u[j]) * grad_u_sq[j])
                .collect();
            let gb: Vec<T> = (0..u.len())
                .map(|j| {
                    let ratio = positive_part(u[j]) / ue[j];
                    ue[j].powf(q - T::lit(2.0)) * ratio * ratio * grad_u_sq[j]
                })
                .collect();
            let high: Vec<T> = ue.iter().map(|&a| a.powf(q * nn / (nn - T::lit(2.0)))).collect();
            let hq: Vec<T> = ue.iter().zip(&mean_sq).map(|(&a, &m)| m * a.powf(q)).collect();
            let sob = fields.integrate(&high).powf((nn - T::lit(2.0)) / nn) / (T::lit(2.0) * b * b) - fields.integrate(&hq);
            Ok(RegularisedTerms {
                eps: e,
                lhs: fields.integrate(&lhs),
                divergence: -(q - one) * fields.integrate(&div),
                gradient_bound: -(q - one) * fields.integrate(&gb),
                sobolev_bound: -(q - one) / (T::lit(4.0) * q * q) * sob,
            })
        })
        .collect()
}
