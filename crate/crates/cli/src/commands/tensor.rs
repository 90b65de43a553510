use ancientflow::linalg::Mat;
use ancientflow::tensor::check_li_li;
use ancientflow::tensor::sweep::{replay, run_sweep, Check, EntryDistribution, SampleId, SweepConfig};
use serde::Serialize;

use super::require_seed;
use crate::config::Config;
use crate::report::{header, num, Sink, Table};
use crate::{CliError, GlobalArgs, Outcome};

/// Default tolerance for each check, on the normalised value.
pub fn default_tolerance(check: Check) -> f64 {
    match check {
        Check::LiLi | Check::TracelessIdentity | Check::CodimOneR1 | Check::CodimOneR2 => 1e-12,
        Check::R1Global | Check::R1Frame | Check::R2Identity => 1e-10,
    }
}

#[derive(Debug, Serialize)]
struct ResolvedConfig {
    seed: u64,
    samples: u64,
    samples_per_cell: usize,
    dims: Vec<usize>,
    codims: Vec<usize>,
    distributions: Vec<EntryDistribution>,
    rhs_scale: f64,
    tolerance_override: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CheckResult {
    check: &'static str,
    kind: &'static str,
    worst: f64,
    tolerance: f64,
    passed: bool,
    evaluated: u64,
    sample: SampleId,
    distribution: EntryDistribution,
    /// Slices of the worst sample, regenerated from the seed.
    slices: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    #[serde(flatten)]
    head: crate::report::Header<'a, ResolvedConfig>,
    checks: Vec<CheckResult>,
    equality_pair_slack: f64,
    passed: bool,
}

fn nested(m: &Mat<f64>) -> Vec<Vec<f64>> {
    (0..m.dim()).map(|i| (0..m.dim()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn run(config: &Config, g: &GlobalArgs, rhs_scale: f64) -> Result<Outcome, CliError> {
    let sec = &config.verify_tensor;
    let seed = require_seed(g.seed, config.seed, "verify-tensor")?;
    let samples = g.samples.unwrap_or(sec.samples);
    if sec.dims.iter().any(|&n| n == 0) || sec.codims.iter().any(|&p| p == 0) || sec.dims.is_empty() || sec.codims.is_empty() {
        return Err(CliError::Config("dims and codims must be non-empty lists of positive integers".into()));
    }
    if sec.distributions.is_empty() {
        return Err(CliError::Config("at least one entry distribution is required".into()));
    }
    let slots = (sec.dims.len() * sec.codims.len() * sec.distributions.len()) as u64;
    let samples_per_cell = samples.div_ceil(slots).max(1) as usize;
    let sweep = SweepConfig {
        seed,
        samples_per_cell,
        dims: sec.dims.clone(),
        codims: sec.codims.clone(),
        distributions: sec.distributions.clone(),
        rhs_scale,
        checks: sec.checks.clone(),
    };
    let tolerance_override = g.tolerance.or(config.tolerance);
    let worst = run_sweep(&sweep);

    let mut out = Outcome::new();
    let mut table = Table::new(
        "verify-tensor",
        &["check", "kind", "worst", "tolerance", "passed", "evaluated", "n", "p", "distribution", "index"],
    )
    .constant("seed", seed)
    .constant("samples_per_cell", samples_per_cell)
    .constant("rhs_scale", num(rhs_scale));
    let mut checks = Vec::new();
    for w in &worst {
        let tol = tolerance_override.unwrap_or_else(|| default_tolerance(w.check));
        let passed = if w.check.is_residual() { w.value <= tol } else { w.value >= -tol };
        let kind = if w.check.is_residual() { "residual" } else { "slack" };
        out.check(
            w.check.name(),
            passed,
            format!(
                "worst {kind} {:.3e} over {} samples (n = {}, p = {}, sample {})",
                w.value, w.count, w.sample.n, w.sample.p, w.sample.index
            ),
        );
        table.push(vec![
            w.check.name().into(),
            kind.into(),
            num(w.value),
            num(tol),
            passed.to_string(),
            w.count.to_string(),
            w.sample.n.to_string(),
            w.sample.p.to_string(),
            w.sample.distribution.to_string(),
            w.sample.index.to_string(),
        ]);
        checks.push(CheckResult {
            check: w.check.name(),
            kind,
            worst: w.value,
            tolerance: tol,
            passed,
            evaluated: w.count,
            sample: w.sample,
            distribution: sweep.distributions[w.sample.distribution],
            slices: replay(&sweep, w.sample).iter().map(nested).collect(),
        });
    }

    let a: Mat<f64> = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
    let b = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
    let equality = check_li_li(&[a, b])?;
    out.check("li-li-equality-pair", equality.abs() <= 1e-14, format!("slack {equality:.3e}"));

    let resolved = ResolvedConfig {
        seed,
        samples,
        samples_per_cell,
        dims: sweep.dims.clone(),
        codims: sweep.codims.clone(),
        distributions: sweep.distributions.clone(),
        rhs_scale,
        tolerance_override,
    };
    let report = Report {
        head: header("verify-tensor", "verify-tensor", &resolved),
        checks,
        equality_pair_slack: equality,
        passed: out.passed,
    };
    let sink = Sink::new(g.out.clone().or_else(|| config.out.clone()))?;
    sink.json("tensor_report.json", &report)?;
    sink.csv("tensor_checks.csv", &table)?;
    Ok(out)
}
