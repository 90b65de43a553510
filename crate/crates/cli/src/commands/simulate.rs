use ancientflow::flow::{
    curvature_fields, run as run_flow, FlowState, Geometry, HaltReason, Monitor, RunConfig, RunOutput, TimeStep,
};
use ancientflow::pinching::{RatioProfile, SphereCodimOneProfile};
use ancientflow::{SpaceForm, UmbilicalSolution};
use serde::Serialize;

use super::positive;
use crate::config::{Config, FlowSection};
use crate::fixture::{resolve, Resolved};
use crate::report::{header, num, opt, Sink, Table};
use crate::{CliError, FlowArgs, GlobalArgs, Outcome};

/// Fixed step used for geodesic spheres when none is configured: their
/// radius ODE has no grid to derive a step from.
pub const UMBILICAL_DT: f64 = 1e-3;
/// Default tolerance of the closed-form radius comparison.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// A monitor with the metadata needed to judge it.
#[derive(Clone, Debug, Serialize)]
pub struct MonitorSpec {
    pub id: String,
    pub monitor: Monitor<f64>,
    /// Exponential rate the maximum is guaranteed to decay at, if known.
    pub guaranteed_rate: Option<f64>,
    /// `a` and `δ = n - a` of the codimension-one profile.
    pub a: Option<f64>,
    pub delta: Option<f64>,
}

/// Flow section with command-line overrides applied.
pub fn merged_section(base: &FlowSection, g: &GlobalArgs, args: &FlowArgs) -> FlowSection {
    let mut s = base.clone();
    if let Some(f) = &args.fixture {
        s.fixture = f.clone();
    }
    if let Some(n) = args.n {
        s.n = Some(n);
    }
    if let Some(t0) = args.t0 {
        s.t0 = t0;
    }
    if let Some(t1) = args.t1 {
        s.t1 = t1;
    }
    if let Some(grid) = g.grid {
        s.grid = grid;
    }
    if let Some(dt) = g.dt {
        s.dt = Some(dt);
    }
    if !args.monitors.is_empty() {
        s.monitors = args.monitors.clone();
    }
    if let Some(b) = g.sobolev_constant {
        s.sobolev_constant = b;
    }
    s
}

pub fn build_monitors(section: &FlowSection, resolved: &Resolved) -> Result<Vec<MonitorSpec>, CliError> {
    let n = resolved.n;
    let ids: Vec<String> = if section.monitors.is_empty() {
        vec![if resolved.space == SpaceForm::Sphere { "codim-one" } else { "ring-over-mean" }.to_string()]
    } else {
        section.monitors.clone()
    };
    let mut specs = Vec::with_capacity(ids.len());
    for id in ids {
        let plain = |monitor| MonitorSpec { id: id.clone(), monitor, guaranteed_rate: None, a: None, delta: None };
        let spec = match id.as_str() {
            "ring-over-mean" => plain(Monitor::RingOverMean),
            "codim-one" => {
                need_sphere(resolved, &id)?;
                let initial = initial_state(section, resolved)?;
                let fields = curvature_fields(&initial)?;
                let k = SphereCodimOneProfile::<f64>::k_for(n);
                let sup = (0..fields.len()).map(|j| fields.ring_sq[j] - k * fields.mean_sq[j]).fold(f64::NEG_INFINITY, f64::max);
                let profile = SphereCodimOneProfile::from_pinching(n, sup, section.pinching_margin).map_err(|e| {
                    CliError::Config(format!("initial data is not pinched enough for the codim-one monitor: {e}"))
                })?;
                MonitorSpec {
                    id: id.clone(),
                    monitor: Monitor::Ratio { profile: RatioProfile::SphereCodimOne { gamma: profile.gamma, a: profile.a } },
                    guaranteed_rate: Some(2.0 * profile.delta()),
                    a: Some(profile.a),
                    delta: Some(profile.delta()),
                }
            }
            "high-codim" => {
                need_sphere(resolved, &id)?;
                plain(Monitor::Ratio { profile: RatioProfile::SphereHighCodim { n, b: positive("high_codim_b", section.high_codim_b)? } })
            }
            "fixed" => {
                need_sphere(resolved, &id)?;
                plain(Monitor::Ratio { profile: RatioProfile::SphereFixed { n } })
            }
            "hyperbolic" => {
                if resolved.space != SpaceForm::Hyperbolic {
                    return Err(CliError::Config("monitor hyperbolic needs a hyperbolic ambient".into()));
                }
                plain(Monitor::Ratio { profile: RatioProfile::Hyperbolic { n, eps: positive("hyperbolic_eps", section.hyperbolic_eps)? } })
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown monitor {other:?}; expected codim-one, high-codim, fixed, hyperbolic or ring-over-mean"
                )))
            }
        };
        specs.push(spec);
    }
    Ok(specs)
}

fn need_sphere(resolved: &Resolved, id: &str) -> Result<(), CliError> {
    if resolved.space == SpaceForm::Sphere {
        Ok(())
    } else {
        Err(CliError::Config(format!("monitor {id} needs a sphere ambient")))
    }
}

fn initial_state(section: &FlowSection, resolved: &Resolved) -> Result<FlowState<f64>, CliError> {
    resolved
        .fixture
        .initial_state(resolved.space, resolved.n, section.t0, section.grid)
        .map_err(|e| CliError::Config(format!("invalid fixture parameters: {e}")))
}

pub fn build_run(section: &FlowSection, resolved: &Resolved, monitors: &[MonitorSpec]) -> Result<RunConfig<f64>, CliError> {
    if !(section.t1 > section.t0) {
        return Err(CliError::Config(format!("need t1 > t0, got [{}, {}]", section.t0, section.t1)));
    }
    if section.emit_every == 0 {
        return Err(CliError::Config("emit_every must be positive".into()));
    }
    let initial = initial_state(section, resolved)?;
    let umbilical = matches!(initial.geometry, Geometry::Umbilical { .. });
    let time_step = match section.dt {
        Some(dt) => TimeStep::Fixed { dt: positive("dt", dt)? },
        None if umbilical => TimeStep::Fixed { dt: UMBILICAL_DT },
        None => TimeStep::Cfl { cfl: positive("cfl", section.cfl)? },
    };
    let mut cfg = RunConfig::new(resolved.space, resolved.n, resolved.fixture, section.t0, section.t1);
    cfg.intervals = section.grid;
    cfg.time_step = time_step;
    cfg.emit_every = section.emit_every;
    cfg.monitors = monitors.iter().map(|m| m.monitor).collect();
    cfg.j_orders = section.j_orders.clone();
    cfg.max_steps = section.max_steps;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
pub struct MonitorSummary {
    pub id: String,
    pub initial: f64,
    pub last: f64,
    pub max_increase: f64,
    pub monotone: bool,
    pub fitted_rate: Option<f64>,
    pub guaranteed_rate: Option<f64>,
    pub required_rate: Option<f64>,
    pub rate_ok: Option<bool>,
    pub a: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct OracleSummary {
    pub family: String,
    pub max_radius_error: f64,
    pub max_mean_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
struct RecordLine<'a> {
    t: f64,
    theta: Vec<f64>,
    radius: &'a [f64],
    mean: Vec<f64>,
    ring_sq: Vec<f64>,
    monitors: &'a [ancientflow::flow::MonitorValue<f64>],
    functionals: &'a ancientflow::functionals::FunctionalRecord<f64>,
}

#[derive(Debug, Serialize)]
struct Resolution<'a> {
    section: &'a FlowSection,
    space: SpaceForm,
    n: usize,
    run: &'a RunConfig<f64>,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    #[serde(flatten)]
    head: crate::report::Header<'a, Resolution<'a>>,
    halt: HaltReason,
    steps: usize,
    records: usize,
    monitors: &'a [MonitorSummary],
    oracle: Option<&'a OracleSummary>,
    passed: bool,
}

pub fn summarise_monitors(output: &RunOutput<f64>, specs: &[MonitorSpec], section: &FlowSection) -> Vec<MonitorSummary> {
    specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let maxima: Vec<f64> = output.pinching.iter().map(|r| r.monitors[i].max).collect();
            let max_increase = maxima.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
            let monotone = max_increase <= section.monotone_slack || maxima.len() < 2;
            let fitted_rate = output.pinching.last().and_then(|r| r.monitors[i].decay_rate);
            let required_rate = spec.guaranteed_rate.map(|r| r * section.decay_fraction);
            let rate_ok = required_rate.map(|req| fitted_rate.is_some_and(|f| f >= req));
            MonitorSummary {
                id: spec.id.clone(),
                initial: maxima.first().copied().unwrap_or(f64::NAN),
                last: maxima.last().copied().unwrap_or(f64::NAN),
                max_increase,
                monotone,
                fitted_rate,
                guaranteed_rate: spec.guaranteed_rate,
                required_rate,
                rate_ok,
                a: spec.a,
                delta: spec.delta,
            }
        })
        .collect()
}

pub fn oracle_summary(output: &RunOutput<f64>, solution: &UmbilicalSolution<f64>, tolerance: f64) -> Result<OracleSummary, CliError> {
    let (mut radius_err, mut mean_err) = (0.0f64, 0.0f64);
    for state in &output.trajectory {
        let fields = curvature_fields(state)?;
        let r = solution.radius(state.t)?;
        let h = solution.mean_curvature(state.t)?;
        for (&u, &m) in fields.radius.iter().zip(&fields.mean) {
            radius_err = radius_err.max((u - r).abs());
            mean_err = mean_err.max((m - h).abs() / h.abs().max(1.0));
        }
    }
    Ok(OracleSummary {
        family: solution.space.label().to_string(),
        max_radius_error: radius_err,
        max_mean_error: mean_err,
        tolerance,
        passed: radius_err <= tolerance,
    })
}

pub fn run(config: &Config, g: &GlobalArgs, args: &FlowArgs) -> Result<Outcome, CliError> {
    let section = merged_section(&config.simulate, g, args);
    let resolved = resolve(&section, None)?;
    let specs = build_monitors(&section, &resolved)?;
    let cfg = build_run(&section, &resolved, &specs)?;
    let output = run_flow(&cfg)?;
    let tolerance = g.tolerance.or(config.tolerance).unwrap_or(ORACLE_TOLERANCE);

    let mut out = Outcome::new();
    out.note(format!(
        "{} in {} (n = {}): {} steps, {} records, halted by {:?}",
        section.fixture,
        resolved.space.label(),
        resolved.n,
        output.steps,
        output.trajectory.len(),
        output.halt
    ));
    let oracle = match resolved.fixture.exact_solution(resolved.space, resolved.n)? {
        Some(sol) => {
            let o = oracle_summary(&output, &sol, tolerance)?;
            out.check(
                "closed-form-radius",
                o.passed,
                format!("max |r - r_exact| = {:.3e}, max relative |H| error {:.3e}", o.max_radius_error, o.max_mean_error),
            );
            Some(o)
        }
        None => None,
    };
    let summaries = summarise_monitors(&output, &specs, &section);
    for m in &summaries {
        out.check(
            &format!("{}-nonincreasing", m.id),
            m.monotone,
            format!("max f {:.6e} -> {:.6e}, largest increase {:.3e}", m.initial, m.last, m.max_increase),
        );
        if let (Some(ok), Some(req)) = (m.rate_ok, m.required_rate) {
            out.check(
                &format!("{}-decay-rate", m.id),
                ok,
                format!("fitted rate {} vs required {req:.4} (delta = {})", opt(m.fitted_rate), opt(m.delta)),
            );
        }
    }

    let sink = Sink::new(g.out.clone().or_else(|| config.out.clone()))?;
    write_trajectory(&sink, &section, &resolved, &cfg, &output)?;
    write_tables(&sink, &specs, &output)?;
    let resolution = Resolution { section: &section, space: resolved.space, n: resolved.n, run: &cfg };
    let report = Report {
        head: header("simulate-report", "simulate", &resolution),
        halt: output.halt,
        steps: output.steps,
        records: output.trajectory.len(),
        monitors: &summaries,
        oracle: oracle.as_ref(),
        passed: out.passed,
    };
    sink.json("simulate_report.json", &report)?;
    Ok(out)
}

pub fn write_trajectory(
    sink: &Sink,
    section: &FlowSection,
    resolved: &Resolved,
    cfg: &RunConfig<f64>,
    output: &RunOutput<f64>,
) -> Result<(), CliError> {
    let resolution = Resolution { section, space: resolved.space, n: resolved.n, run: cfg };
    let head = header("trajectory", "simulate", &resolution);
    let mut lines = Vec::with_capacity(output.trajectory.len());
    let fields: Vec<_> = output.trajectory.iter().map(curvature_fields).collect::<Result<_, _>>()?;
    for (k, state) in output.trajectory.iter().enumerate() {
        let f = &fields[k];
        lines.push(RecordLine {
            t: state.t,
            theta: f.theta.clone(),
            radius: &f.radius,
            mean: f.mean.clone(),
            ring_sq: f.ring_sq.clone(),
            monitors: &output.pinching[k].monitors,
            functionals: &output.functionals[k],
        });
    }
    sink.jsonl("trajectory.jsonl", &head, &lines)
}

pub fn write_tables(sink: &Sink, specs: &[MonitorSpec], output: &RunOutput<f64>) -> Result<(), CliError> {
    let mut cols: Vec<String> = vec!["t".into()];
    for s in specs {
        cols.push(format!("max_{}", s.id));
        cols.push(format!("rate_{}", s.id));
    }
    cols.extend(["ring_excess_sup", "delta_initial", "delta_running", "max_mean"].map(String::from));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut monitors = Table::new("monitors", &col_refs);
    for s in specs {
        if let Some(a) = s.a {
            monitors = monitors.constant(&format!("{}_a", s.id), num(a));
        }
    }
    let plot_cols: Vec<String> = std::iter::once("t".to_string()).chain(specs.iter().map(|s| format!("max_{}", s.id))).collect();
    let plot_refs: Vec<&str> = plot_cols.iter().map(String::as_str).collect();
    let mut plot_f = Table::new("plot-max-f", &plot_refs);
    let mut plot_mean = Table::new("plot-mean-curvature", &["t", "max_mean"]);
    for r in &output.pinching {
        let mut row = vec![num(r.t)];
        let mut plot_row = vec![num(r.t)];
        for m in &r.monitors {
            row.push(num(m.max));
            row.push(opt(m.decay_rate));
            plot_row.push(num(m.max));
        }
        row.extend([num(r.ring_excess_sup), num(r.delta_initial), num(r.delta_running), num(r.max_mean)]);
        monitors.push(row);
        plot_f.push(plot_row);
        plot_mean.push(vec![num(r.t), num(r.max_mean)]);
    }
    sink.csv("monitors.csv", &monitors)?;
    sink.csv("plot_max_f.csv", &plot_f)?;
    sink.csv("plot_mean_curvature.csv", &plot_mean)?;
    sink.csv("plot_functionals.csv", &functional_table(output, &[]))?;
    Ok(())
}

/// Functional records as a table, optionally documenting constants.
pub fn functional_table(output: &RunOutput<f64>, constants: &[(&str, String)]) -> Table {
    let orders: Vec<f64> = output.functionals.first().map(|r| r.j_moments.iter().map(|j| j.order).collect()).unwrap_or_default();
    let mut cols: Vec<String> =
        ["t", "vol", "ring_l2", "ring_l4", "willmore", "mean_sq_integral", "gauss_bonnet_residual"].map(String::from).to_vec();
    cols.extend(orders.iter().map(|o| format!("J_{o}")));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut table = Table::new("functionals", &col_refs);
    for (k, v) in constants {
        table = table.constant(k, v);
    }
    for r in &output.functionals {
        let mut row = vec![
            num(r.t),
            num(r.vol),
            num(r.ring_l2),
            num(r.ring_l4),
            num(r.willmore),
            num(r.mean_sq_integral),
            opt(r.gauss_bonnet_residual),
        ];
        row.extend(r.j_moments.iter().map(|j| num(j.value)));
        table.push(row);
    }
    table
}
