use ancientflow::flow::{curvature_fields, run as run_flow, CurvatureFields};
use ancientflow::functionals::{
    decay_monitor_2d, gauss_bonnet_combination, integrals, regularised_divergence_check, sobolev_check, u_moment_monitor,
    DecayReport2d, FunctionalRecord, MomentReport, RegularisedTerms, SectionFourConstants, SobolevSlack, U_EPSILONS,
};
use ancientflow::SpaceForm;
use num_rational::Ratio;
use serde::Serialize;

use super::positive;
use super::simulate::{build_monitors, build_run, functional_table, merged_section};
use crate::config::{Config, FlowSection};
use crate::fixture::resolve;
use crate::report::{header, num, opt, Sink, Table};
use crate::{CliError, FlowArgs, GlobalArgs, Outcome};

/// Gauss–Bonnet residual allowed at production resolution.
pub const GAUSS_BONNET_TOLERANCE: f64 = 1e-6;
/// Absolute slack of the two-dimensional decay inequality.
const DECAY_TOLERANCE: f64 = 1e-8;

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Smooth positive test function for the Sobolev sweep.
fn bump(fields: &CurvatureFields<f64>) -> Vec<f64> {
    fields.theta.iter().map(|&th| (1.0 + th.cos()).powi(2)).collect()
}

#[derive(Debug, Serialize)]
struct SobolevRow {
    b: f64,
    #[serde(flatten)]
    slack: SobolevSlack<f64>,
}

#[derive(Debug, Serialize)]
struct Constants {
    n: usize,
    b: f64,
    space: SpaceForm,
    /// Threshold `C` on the smallness functional, when one exists.
    c: Option<f64>,
    c_bar: Option<f64>,
    a1_times_b_sq: Vec<(String, String)>,
    a2: Vec<(String, String)>,
    d1: Option<String>,
    d2_times_b_sq: Option<String>,
    d3: Option<String>,
    c_per_q: Vec<(String, f64)>,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    #[serde(flatten)]
    head: crate::report::Header<'a, FlowSection>,
    initial: &'a FunctionalRecord<f64>,
    gauss_bonnet_combination: Option<f64>,
    constants: &'a Constants,
    sobolev: &'a [SobolevRow],
    decay: Option<&'a DecayReport2d<f64>>,
    moments: &'a [MomentReport<f64>],
    regularised: &'a [RegularisedTerms<f64>],
    hypothesis: Option<bool>,
    passed: bool,
}

fn constants(n: usize, space: SpaceForm, b: f64) -> Result<Constants, CliError> {
    let k = SectionFourConstants::new(n);
    let mut c = Constants {
        n,
        b,
        space,
        c: None,
        c_bar: None,
        a1_times_b_sq: vec![],
        a2: vec![],
        d1: None,
        d2_times_b_sq: None,
        d3: None,
        c_per_q: vec![],
    };
    if space == SpaceForm::Hyperbolic {
        return Ok(c);
    }
    if n == 2 {
        let cs = SectionFourConstants::c_surface(space, b)?;
        c.c = Some(cs);
        c.c_bar = Some(SectionFourConstants::c_bar(cs));
        return Ok(c);
    }
    for q in k.q_candidates()? {
        c.a1_times_b_sq.push((q.to_string(), k.a1_times_b_sq(q).to_string()));
        c.a2.push((q.to_string(), k.a2(q).to_string()));
    }
    c.d1 = Some(k.d1().to_string());
    c.d2_times_b_sq = Some(k.d2_times_b_sq().to_string());
    c.d3 = Some(k.d3().to_string());
    match space {
        SpaceForm::Sphere => {
            let v = k.c_sphere(b)?;
            c.c_per_q.push((Ratio::new(n as i64, 2).to_string(), v));
            c.c = Some(v);
        }
        _ => {
            let (vals, min) = k.c_euclidean(b)?;
            c.c_per_q = vals.iter().map(|(q, v)| (q.to_string(), *v)).collect();
            c.c = Some(min);
        }
    }
    Ok(c)
}

fn moment_qs(n: usize, space: SpaceForm) -> Vec<Ratio<i64>> {
    match space {
        SpaceForm::Sphere => vec![Ratio::new(n as i64, 2)],
        _ => SectionFourConstants::new(n).q_candidates().map(|q| q.to_vec()).unwrap_or_default(),
    }
}

pub fn run(config: &Config, g: &GlobalArgs, args: &FlowArgs) -> Result<Outcome, CliError> {
    let mut section = merged_section(&config.functionals, g, args);
    let b = positive("sobolev_constant", section.sobolev_constant)?;
    let resolved = resolve(&section, None)?;
    let (n, space) = (resolved.n, resolved.space);
    let critical_order = (n >= 3).then(|| (n * n) as f64 / (n - 2) as f64);
    if let Some(order) = critical_order {
        if !section.j_orders.iter().any(|&o| o == order) {
            section.j_orders.push(order);
        }
    }
    let tolerance = g.tolerance.or(config.tolerance);
    let mut out = Outcome::new();

    let initial = resolved
        .fixture
        .initial_state(space, n, section.t0, section.quadrature_grid)
        .map_err(|e| CliError::Config(format!("invalid fixture parameters: {e}")))?;
    let fields = curvature_fields(&initial)?;
    let record = integrals(&initial, &fields, &section.j_orders)?;
    out.note(format!(
        "{} in {} (n = {}): vol = {:.10}, I = {:.6e}, W = {:.6e}",
        section.fixture,
        space.label(),
        n,
        record.vol,
        record.ring_l2,
        record.willmore
    ));
    let mut combination = None;
    if let Some(res) = record.gauss_bonnet_residual {
        let tol = tolerance.unwrap_or(GAUSS_BONNET_TOLERANCE);
        out.check("gauss-bonnet", res <= tol, format!("residual {res:.3e} (tolerance {tol:.1e})"));
        combination = Some(gauss_bonnet_combination(&fields)?);
    }

    let consts = constants(n, space, b)?;
    let sobolev: Vec<SobolevRow> = if space == SpaceForm::Hyperbolic {
        vec![]
    } else {
        let f = bump(&fields);
        let mut sweep = section.sobolev_sweep.clone();
        if !sweep.contains(&b) {
            sweep.push(b);
        }
        sweep.sort_by(f64::total_cmp);
        sweep
            .iter()
            .map(|&bb| Ok(SobolevRow { b: positive("sobolev_sweep entry", bb)?, slack: sobolev_check(&fields, &f, bb)? }))
            .collect::<Result<_, CliError>>()?
    };
    if let Some(first_ok) = sobolev.iter().find(|r| r.slack.slack >= 0.0) {
        out.note(format!("sobolev sweep: smallest B with non-negative slack on the bump field is {}", first_ok.b));
    } else if !sobolev.is_empty() {
        out.note("sobolev sweep: no B in the sweep gives non-negative slack on the bump field");
    }

    // the smallness hypothesis of the integral monitors, on the initial data
    let hypothesis = consts.c.map(|c| if n == 2 { record.ring_l2 < c } else { record.willmore < c });

    let specs = build_monitors(&FlowSection { monitors: vec!["ring-over-mean".into()], ..section.clone() }, &resolved)?;
    let cfg = build_run(&section, &resolved, &specs)?;
    let output = run_flow(&cfg)?;
    out.note(format!("trajectory: {} records, halted by {:?}", output.functionals.len(), output.halt));
    let hyp_note = |ok: Option<bool>| match ok {
        Some(true) => "hypothesis holds, asserted",
        Some(false) => "hypothesis fails, reported only",
        None => "no threshold, reported only",
    };

    let mut decay = None;
    if n == 2 && space != SpaceForm::Hyperbolic && output.functionals.len() >= 3 {
        let c = consts.c.expect("surface threshold");
        let report = decay_monitor_2d(&output.functionals, c, DECAY_TOLERANCE)?;
        let ok = report.violations == 0 && report.rows.iter().all(|r| r.vol_ok && r.log_ok);
        let detail = format!(
            "I(t0) = {:.3e} vs C = {c:.4e}, {} violations, min slack {:.3e} ({})",
            record.ring_l2,
            report.violations,
            report.min_slack,
            hyp_note(hypothesis)
        );
        if hypothesis == Some(true) {
            out.check("surface-decay", ok, detail);
        } else {
            out.note(format!("surface-decay {}: {detail}", if ok { "holds" } else { "violated" }));
        }
        decay = Some(report);
    }

    let mut moments = Vec::new();
    let mut regularised = Vec::new();
    if n >= 3 && space != SpaceForm::Hyperbolic {
        if output.trajectory.len() >= 3 {
            for q in moment_qs(n, space) {
                moments.push(u_moment_monitor(&output.trajectory, q, b)?);
            }
        }
        if let (Some(order), Some(first)) = (critical_order, output.functionals.first()) {
            let j0 = first.j_moments.iter().find(|j| j.order == order).map_or(0.0, |j| j.value);
            let series: Vec<f64> = output
                .functionals
                .iter()
                .filter_map(|r| r.j_moments.iter().find(|j| j.order == order).map(|j| j.value))
                .collect();
            let increase = series.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
            let ok = series.len() < 2 || increase <= section.monotone_slack * j0.max(f64::MIN_POSITIVE);
            let detail = format!("J_{order} from {j0:.6e}, largest increase {increase:.3e} ({})", hyp_note(hypothesis));
            if hypothesis == Some(true) {
                out.check("critical-moment-nonincreasing", ok, detail);
            } else {
                out.note(format!("critical-moment {}: {detail}", if ok { "nonincreasing" } else { "increases" }));
            }
        }
        regularised = regularised_divergence_check(&fields, ratio_f64(moment_qs(n, space)[0]), b, &U_EPSILONS)?;
    }

    let sink = Sink::new(g.out.clone().or_else(|| config.out.clone()))?;
    let c_label = consts.c.map(num).unwrap_or_default();
    let with_constants = |t: Table| {
        t.constant("B", num(b))
            .constant("n", n)
            .constant("p", 1)
            .constant("c", space.curvature())
            .constant("C", c_label.clone())
    };
    sink.csv(
        "functionals.csv",
        &functional_table(
            &output,
            &[
                ("B", num(b)),
                ("n", n.to_string()),
                ("p", "1".into()),
                ("c", space.curvature().to_string()),
                ("C", c_label.clone()),
            ],
        ),
    )?;
    let mut table = with_constants(Table::new("constants", &["name", "q", "value"]));
    for (q, v) in &consts.a1_times_b_sq {
        table.push(vec!["A1*B^2".into(), q.clone(), v.clone()]);
    }
    for (q, v) in &consts.a2 {
        table.push(vec!["A2".into(), q.clone(), v.clone()]);
    }
    for (name, v) in [("D1", &consts.d1), ("D2*B^2", &consts.d2_times_b_sq), ("D3", &consts.d3)] {
        if let Some(v) = v {
            table.push(vec![name.into(), String::new(), v.clone()]);
        }
    }
    for (q, v) in &consts.c_per_q {
        table.push(vec!["C".into(), q.clone(), num(*v)]);
    }
    if n == 2 {
        table.push(vec!["C".into(), String::new(), opt(consts.c)]);
        table.push(vec!["C_bar".into(), String::new(), opt(consts.c_bar)]);
    }
    sink.csv("constants.csv", &table)?;
    let mut sob = with_constants(Table::new("sobolev", &["B", "gradient_term", "mean_term", "lhs", "slack"]));
    for r in &sobolev {
        sob.push(vec![num(r.b), num(r.slack.gradient_term), num(r.slack.mean_term), num(r.slack.lhs), num(r.slack.slack)]);
    }
    sink.csv("sobolev.csv", &sob)?;
    if let Some(d) = &decay {
        let mut t = with_constants(Table::new(
            "decay",
            &["t", "ring_l2", "vol", "d_ring_l2", "bound", "slack", "vol_bound", "log_lower_bound", "violated"],
        ))
        .constant("C_bar", num(d.c_bar));
        for r in &d.rows {
            t.push(vec![
                num(r.t),
                num(r.ring_l2),
                num(r.vol),
                num(r.d_ring_l2),
                num(r.bound),
                num(r.slack),
                num(r.vol_bound),
                num(r.log_lower_bound),
                r.violated.to_string(),
            ]);
        }
        sink.csv("decay.csv", &t)?;
    }
    if !moments.is_empty() {
        let mut t = with_constants(Table::new("moments", &["q", "t", "moment", "d_moment", "rhs", "slack", "critical_moment"]));
        for m in &moments {
            for r in &m.rows {
                t.push(vec![num(m.q), num(r.t), num(r.moment), num(r.d_moment), num(r.rhs), num(r.slack), num(r.critical_moment)]);
            }
        }
        sink.csv("moments.csv", &t)?;
    }
    if !regularised.is_empty() {
        let mut t = with_constants(Table::new("regularised", &["eps", "lhs", "divergence", "gradient_bound", "sobolev_bound"]));
        for r in &regularised {
            t.push(vec![num(r.eps), num(r.lhs), num(r.divergence), num(r.gradient_bound), num(r.sobolev_bound)]);
        }
        sink.csv("regularised.csv", &t)?;
    }
    sink.json(
        "functionals_report.json",
        &Report {
            head: header("functionals-report", "functionals", &section),
            initial: &record,
            gauss_bonnet_combination: combination,
            constants: &consts,
            sobolev: &sobolev,
            decay: decay.as_ref(),
            moments: &moments,
            regularised: &regularised,
            hypothesis,
            passed: out.passed,
        },
    )?;
    Ok(out)
}
