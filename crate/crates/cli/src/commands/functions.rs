use ancientflow::pinching::{
    log_grid, psi, psi_sup, theta, theta_double_prime, theta_prime, thresholds, Ambient, GParams, PhiParams,
    ThresholdRow,
};
use ancientflow::tensor::sweep::sample_rng;
use num_rational::Ratio;
use rand::Rng;
use serde::Serialize;

use super::require_seed;
use crate::config::{Config, ScanSection};
use crate::report::{header, num, Sink, Table};
use crate::{CliError, GlobalArgs, Outcome};

/// Log-spaced scan of `(0, 1)` refined by golden-section search around the
/// best node; an estimate of `sup ψ` that does not use the closed form.
pub fn psi_grid_sup(eps: f64, points: usize) -> f64 {
    let ys = log_grid(1e-9, 1.0 - 1e-9, points.max(16));
    let value = |y: f64| psi(y, eps).unwrap_or(f64::NEG_INFINITY);
    let k = (1..ys.len() - 1).max_by(|&a, &b| value(ys[a]).total_cmp(&value(ys[b]))).unwrap_or(1);
    let (mut lo, mut hi) = (ys[k - 1], ys[k + 1]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if value(a) < value(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    value(0.5 * (lo + hi)).max(value(ys[k]))
}

fn ratio(r: Ratio<i64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn opt_ratio(r: Option<Ratio<i64>>) -> String {
    r.map(ratio).unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct Summary {
    g_samples: u64,
    g_certified: u64,
    g_worst_grid_max: f64,
    phi_identity_worst: f64,
    phi_identity_skipped: u64,
    phi_fd_order_min: f64,
    phi_sign_violations: u64,
    psi_worst_gap: f64,
    psi_max_sup: f64,
    theta_prime_max: f64,
    thresholds_consistent: bool,
    fixture_point: [f64; 3],
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    #[serde(flatten)]
    head: crate::report::Header<'a, ResolvedConfig>,
    summary: Summary,
    thresholds: Vec<ThresholdRow>,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct ResolvedConfig {
    seed: u64,
    #[serde(flatten)]
    section: ScanSection,
}

/// Relative tolerance of the `φ` identity.
const PHI_IDENTITY_TOL: f64 = 1e-12;
/// Gap allowed between `sup ψ` and its grid estimate.
const PSI_GAP_TOL: f64 = 1e-8;

pub fn run(config: &Config, g: &GlobalArgs) -> Result<Outcome, CliError> {
    let seed = require_seed(g.seed, config.seed, "scan-functions")?;
    let mut section = config.scan_functions.clone();
    if let Some(s) = g.samples {
        section.samples = s;
    }
    if let Some(grid) = g.grid {
        section.grid = grid;
    }
    if section.grid < 2 || section.dims.iter().any(|&n| n < 2) || section.eps.iter().any(|&e| !(e > 0.0)) {
        return Err(CliError::Config("scan-functions needs grid >= 2, dims >= 2 and positive eps".into()));
    }
    let identity_tol = g.tolerance.or(config.tolerance).unwrap_or(PHI_IDENTITY_TOL);
    let sink = Sink::new(g.out.clone().or_else(|| config.out.clone()))?;
    let mut out = Outcome::new();

    // G: random admissible (b, ξ), b log-uniform, ξ uniform in the window
    let xs = log_grid(1e-6, 1e6, section.grid);
    let mut g_table = Table::new(
        "g-sup",
        &["sample", "b", "xi", "c0", "c1", "c2", "c3", "grid_max", "grid_argmax", "at_zero", "tail_limit", "certified"],
    )
    .constant("seed", seed)
    .constant("grid", format!("log[1e-6,1e6]x{}", section.grid));
    let mut certified = 0u64;
    let mut worst_grid = f64::NEG_INFINITY;
    for i in 0..section.samples {
        let mut rng = sample_rng(seed, i);
        let b = (rng.gen_range((1e-3f64).ln()..(2.0f64 / 3.0).ln())).exp();
        let hi = (1.0 / b - 1.0).min(1e3);
        let xi = rng.gen_range(0.5..hi);
        let params = GParams::new(b, xi)?;
        let cert = params.certify_negative(&xs);
        certified += u64::from(cert.certified);
        worst_grid = worst_grid.max(cert.grid_max);
        let c = cert.coefficients;
        g_table.push(vec![
            i.to_string(),
            num(b),
            num(xi),
            num(c[0]),
            num(c[1]),
            num(c[2]),
            num(c[3]),
            num(cert.grid_max),
            num(cert.grid_argmax),
            num(cert.at_zero),
            num(cert.tail_limit),
            cert.certified.to_string(),
        ]);
    }
    out.check(
        "g-sup-negative",
        certified == section.samples,
        format!("{certified}/{} admissible (b, xi) certified, largest grid value {worst_grid:.3e}", section.samples),
    );

    // φ tables on fixed points
    let mut phi_table = Table::new(
        "phi",
        &["n", "eps", "x", "phi", "phi_prime", "phi_double_prime", "defect", "defect_closed", "combination", "bound"],
    );
    let mut sign_violations = 0u64;
    for &n in &section.dims {
        for &eps in &section.eps {
            let p = PhiParams::new(n, eps)?;
            for s in [1e-2, 0.1, 1.0, 10.0, 100.0] {
                let x = (n * n) as f64 * (1.0 + s);
                let (f, d1, d2) = (p.phi(x)?, p.phi_prime(x)?, p.phi_double_prime(x)?);
                let underflow = d2 == 0.0;
                if !underflow && !(d1 > 0.0 && d1 < 1.0 && d2 > 0.0 && f < x) {
                    sign_violations += 1;
                }
                phi_table.push(vec![
                    n.to_string(),
                    num(eps),
                    num(x),
                    num(f),
                    num(d1),
                    num(d2),
                    num(p.log_derivative_defect(x)?),
                    num(p.log_derivative_defect_closed(x)?),
                    num(p.combination(x)?),
                    num(p.combination_bound(x)?),
                ]);
            }
        }
    }
    out.check("phi-signs", sign_violations == 0, format!("{sign_violations} points violate 0 < phi' < 1, phi'' > 0, phi < x"));

    // random identity checks and finite-difference orders
    let mut identity_worst = 0.0f64;
    let mut order_min = f64::INFINITY;
    let mut bound_ok = true;
    let mut subnormal = 0u64;
    for i in 0..section.identity_samples {
        let mut rng = sample_rng(seed ^ 0x9e37_79b9_7f4a_7c15, i);
        let n = section.dims[rng.gen_range(0..section.dims.len())];
        let eps = 10f64.powf(rng.gen_range(-3.0..3.0));
        let x = (n * n) as f64 * (1.0 + 10f64.powf(rng.gen_range(-3.0..3.0)));
        let p = PhiParams::new(n, eps)?;
        bound_ok &= p.combination_bound(x)? > 0.0;
        // φ'/φ carries no relative accuracy once either factor is subnormal
        if !(p.phi(x)?.is_normal() && p.phi_prime(x)?.is_normal()) {
            subnormal += 1;
            continue;
        }
        let (a, b) = (p.log_derivative_defect(x)?, p.log_derivative_defect_closed(x)?);
        identity_worst = identity_worst.max((a - b).abs() / b.abs().max(1.0));
        if i < 200 {
            if let Some(order) = fd_order(&p, x)? {
                order_min = order_min.min(order);
            }
        }
    }
    out.check(
        "phi-identity",
        identity_worst <= identity_tol,
        format!(
            "worst relative defect {identity_worst:.3e} over {} samples ({subnormal} with subnormal phi skipped)",
            section.identity_samples - subnormal
        ),
    );
    out.check("phi-combination-below-4", bound_ok, "phi' + 2x phi'' < 4 at every sample");
    out.check("phi-fd-order", order_min >= 1.8, format!("smallest observed finite-difference order {order_min:.3}"));

    let fixture = PhiParams::new(2, 1.0f64)?;
    let point = [fixture.phi(8.0)?, fixture.phi_prime(8.0)?, fixture.log_derivative_defect(8.0)?];
    out.check(
        "phi-fixture-point",
        (point[0] - 1.0).abs() < 1e-15 && (point[1] - 0.5).abs() < 1e-15 && (point[2] + 3.0).abs() < 1e-14,
        format!("phi(8) = {}, phi'(8) = {}, 1 - x phi'/phi = {}", point[0], point[1], point[2]),
    );

    // ψ
    let mut psi_table = Table::new("psi", &["eps", "sup_closed", "sup_grid", "gap", "argmax"]);
    let (mut psi_gap, mut psi_max) = (0.0f64, f64::NEG_INFINITY);
    for eps in log_grid(1e-3, 1e3, 25) {
        let closed = psi_sup(eps)?;
        let grid = psi_grid_sup(eps, 20_000);
        psi_gap = psi_gap.max((closed - grid).abs());
        psi_max = psi_max.max(closed);
        psi_table.push(vec![num(eps), num(closed), num(grid), num(closed - grid), num(ancientflow::pinching::psi_argmax(eps))]);
    }
    out.check("psi-sup-below-4", psi_max < 4.0, format!("largest sup {psi_max:.12}"));
    out.check("psi-sup-matches-grid", psi_gap <= PSI_GAP_TOL, format!("largest gap {psi_gap:.3e}"));

    // θ
    let mut theta_table = Table::new("theta", &["eps", "theta", "theta_prime", "theta_double_prime"]);
    let mut theta_prime_max = f64::NEG_INFINITY;
    for eps in log_grid(1e-4, 1e4, section.grid) {
        let d = theta_prime(eps)?;
        theta_prime_max = theta_prime_max.max(d);
        theta_table.push(vec![num(eps), num(theta(eps)?), num(d), num(theta_double_prime(eps)?)]);
    }
    out.check("theta-decreasing", theta_prime_max < 0.0, format!("largest theta' {theta_prime_max:.3e}"));

    // thresholds
    let mut rows = Vec::new();
    let mut th_table = Table::new(
        "thresholds",
        &[
            "n", "p", "ambient", "sphere_bound", "sphere_pairs", "gamma", "codim_one_k", "xi", "xi_tilde",
            "n_over_xi_plus_one", "hyperbolic_k",
        ],
    );
    let mut consistent = true;
    for &n in &section.dims {
        for p in 1..=3usize {
            for ambient in [Ambient::Sphere, Ambient::Hyperbolic] {
                let row = thresholds(n, p, ambient);
                consistent &= row.all_positive();
                if ambient == Ambient::Sphere && p >= 2 {
                    let first = row.sphere_pairs[0].alpha;
                    let want = if p == 2 { Ratio::new(2 * n as i64, 3) } else { Ratio::new(3 * n as i64, 5) };
                    consistent &= row.n_over_xi_plus_one == Some(want);
                    if p == 2 {
                        consistent &= first == want;
                    }
                }
                let pairs: Vec<String> =
                    row.sphere_pairs.iter().map(|pp| format!("({};{})", ratio(pp.kappa), ratio(pp.alpha))).collect();
                th_table.push(vec![
                    n.to_string(),
                    p.to_string(),
                    format!("{ambient:?}").to_lowercase(),
                    opt_ratio(row.sphere_bound),
                    pairs.join(" "),
                    ratio(row.gamma),
                    ratio(row.codim_one_k),
                    opt_ratio(row.xi),
                    opt_ratio(row.xi_tilde),
                    opt_ratio(row.n_over_xi_plus_one),
                    opt_ratio(row.hyperbolic_k),
                ]);
                rows.push(row);
            }
        }
    }
    out.check("thresholds-consistent", consistent, "positive constants; n/(xi+1) = 2n/3 (p = 2), 3n/5 (p >= 3)");

    let summary = Summary {
        g_samples: section.samples,
        g_certified: certified,
        g_worst_grid_max: worst_grid,
        phi_identity_worst: identity_worst,
        phi_identity_skipped: subnormal,
        phi_fd_order_min: order_min,
        phi_sign_violations: sign_violations,
        psi_worst_gap: psi_gap,
        psi_max_sup: psi_max,
        theta_prime_max,
        thresholds_consistent: consistent,
        fixture_point: point,
    };
    let resolved = ResolvedConfig { seed, section };
    let report = Report { head: header("scan-functions", "scan-functions", &resolved), summary, thresholds: rows, passed: out.passed };
    sink.json("scan_report.json", &report)?;
    sink.csv("g_sup.csv", &g_table)?;
    sink.csv("phi_table.csv", &phi_table)?;
    sink.csv("psi_table.csv", &psi_table)?;
    sink.csv("theta_table.csv", &theta_table)?;
    sink.csv("thresholds.csv", &th_table)?;
    Ok(out)
}

/// Observed order of the central differences of `φ` and `φ'` at `x`, from
/// steps `h` and `h/2`. `None` when the errors sit at round-off level.
pub fn fd_order(p: &PhiParams<f64>, x: f64) -> Result<Option<f64>, CliError> {
    let n2 = (p.n * p.n) as f64;
    let h = 1e-2 * (x - n2).min(x);
    let err = |h: f64| -> Result<(f64, f64), CliError> {
        let d1 = (p.phi(x + h)? - p.phi(x - h)?) / (2.0 * h);
        let d2 = (p.phi_prime(x + h)? - p.phi_prime(x - h)?) / (2.0 * h);
        Ok(((d1 - p.phi_prime(x)?).abs(), (d2 - p.phi_double_prime(x)?).abs()))
    };
    let (a, b) = (err(h)?, err(0.5 * h)?);
    let floor = 1e-9 * (p.phi_prime(x)?.abs() + p.phi_double_prime(x)?.abs() * x);
    let mut orders = Vec::new();
    for (e1, e2) in [(a.0, b.0), (a.1, b.1)] {
        if e1 > floor && e2 > 0.0 {
            orders.push((e1 / e2).log2());
        }
    }
    Ok(orders.into_iter().reduce(f64::min))
}
