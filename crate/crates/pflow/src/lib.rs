//! File formats and workflows for the `pflow` command-line tool.

pub mod config;
pub mod error;
pub mod output;

use std::fmt::Write as _;
use std::path::Path;

use pflow_core::initial::{admissibility, build_particles};
use pflow_core::integrator::{simulate as integrate, SnapshotSeries};
use pflow_core::validation::{convergence_from_series, decay_report, ResidualEvaluator, TestFunction, DISTANCE_GRID};
use pflow_core::Result as CoreResult;
use serde_json::{json, Value};

pub use config::{parse_config, parse_config_str, SimulationConfig};
pub use error::{CliError, CliResult};

use output::{json_num, num};

/// Verdict of a completed workflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Inadmissible,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Inadmissible => 2,
        }
    }
}

fn run_one(cfg: &SimulationConfig, n: usize) -> CoreResult<SnapshotSeries> {
    let s0 = build_particles(&cfg.model, &cfg.initial, n)?;
    integrate(&cfg.model, &s0, cfg.t_final, &cfg.integrator)
}

/// Runs every `n` on its own thread; results keep the order of `ns`.
fn run_many(cfg: &SimulationConfig, ns: &[usize]) -> Vec<(usize, CoreResult<SnapshotSeries>)> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = ns.iter().map(|&n| (n, scope.spawn(move || run_one(cfg, n)))).collect();
        handles.into_iter().map(|(n, h)| (n, h.join().expect("simulation thread panicked"))).collect()
    })
}

fn header(cfg: &SimulationConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model: {:?}", cfg.model_spec);
    let _ = writeln!(s, "m = {}, L = {}, rho* = {}", num(cfg.model.mass()), num(cfg.model.length()), num(cfg.model.rho_star()));
    let _ = writeln!(s, "initial: rho0 = {:?}, v0 = {:?}", cfg.initial.rho0, cfg.initial.v0);
    let i = &cfg.integrator;
    let _ = writeln!(
        s,
        "integrator: T = {}, rel_tol = {}, abs_tol = {}, snapshot_dt = {}",
        num(cfg.t_final),
        num(i.rel_tol),
        num(i.abs_tol),
        num(i.snapshot_dt)
    );
    s
}

fn series_summary(s: &mut String, series: &SnapshotSeries) {
    let st = &series.stats;
    let first = &series.snapshots[0].functionals;
    let last = &series.last().functionals;
    let _ = writeln!(s, "n = {}", series.n());
    let _ = writeln!(
        s,
        "  steps: {} accepted, {} rejected ({} left the domain), dt in [{}, {}], {} rhs evaluations",
        st.accepted,
        st.rejected,
        st.rejected_domain,
        num(st.min_dt),
        num(st.max_dt),
        st.rhs_evaluations
    );
    let _ = writeln!(s, "  E_n: {} -> {}", num(first.e_n), num(last.e_n));
    let _ = writeln!(s, "  W_n: {} -> {}", num(first.w_n), num(last.w_n));
    for w in &series.warnings {
        let _ = writeln!(
            s,
            "  warning: {} rose from {} to {} at t = {} (snapshot {})",
            w.quantity.name(),
            num(w.previous),
            num(w.current),
            num(w.t),
            w.snapshot
        );
    }
}

/// Integrates one particle count and writes particles, fields, diagnostics and a summary.
pub fn simulate(cfg: &SimulationConfig, out: &Path) -> CliResult<Status> {
    let n = cfg.require_n()?;
    let series = run_one(cfg, n)?;
    output::create_dir(out)?;
    output::write_particles(out.join("particles.csv"), &cfg.model, &series)?;
    output::write_fields(out.join("fields.csv"), &cfg.model, &series, cfg.grid_size)?;
    output::write_diagnostics(out.join("diagnostics.csv"), &cfg.model, &series)?;
    let mut text = header(cfg);
    series_summary(&mut text, &series);
    output::write_text(out.join("summary.txt"), &text)?;
    Ok(Status::Ok)
}

/// Admissibility report for the configured model and initial data.
pub fn check(cfg: &SimulationConfig, out: Option<&Path>) -> CliResult<(Status, Value)> {
    let report = admissibility(&cfg.model, &cfg.initial)?;
    let value = output::admissibility_json(&report);
    if let Some(dir) = out {
        output::create_dir(dir)?;
        output::write_json(dir.join("check.json"), &value)?;
    }
    let status = if report.admissible { Status::Ok } else { Status::Inadmissible };
    Ok((status, value))
}

/// Refinement study over `ns`; the table is written even when some runs fail.
pub fn converge(cfg: &SimulationConfig, ns: &[usize], out: &Path) -> CliResult<Status> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) || ns.iter().any(|&n| n < 2) {
        return Err(CliError::Usage(format!("particle counts must be ascending and at least 2, got {ns:?}")));
    }
    let runs = run_many(cfg, ns);
    let study = convergence_from_series(&cfg.model, &cfg.initial, &runs, DISTANCE_GRID);
    output::create_dir(out)?;
    output::write_convergence(out.join("convergence.csv"), &study)?;
    let mut text = header(cfg);
    for (_, run) in &runs {
        if let Ok(series) = run {
            series_summary(&mut text, series);
        }
    }
    for row in &study.rows {
        if let Some(e) = &row.error {
            let _ = writeln!(text, "n = {}: failed: {e}", row.n);
        }
    }
    output::write_text(out.join("summary.txt"), &text)?;
    match study.rows.iter().find_map(|r| r.error.clone()) {
        Some(e) => Err(e.into()),
        None => Ok(Status::Ok),
    }
}

/// Weak-form residuals for the built-in test functions and the decay checks.
pub fn validate(cfg: &SimulationConfig, out: &Path) -> CliResult<Status> {
    let ns = match (cfg.n, &cfg.n_list) {
        (Some(n), _) => vec![n],
        (None, Some(list)) => list.clone(),
        (None, None) => return Err(CliError::config("n", "missing field `n` (or `n_list`)")),
    };
    let library = TestFunction::library(cfg.t_final, cfg.model.length());
    let mut residuals = Vec::new();
    let mut decays = Vec::new();
    for (n, run) in run_many(cfg, &ns) {
        let series = run?;
        let eval = ResidualEvaluator::new(&cfg.model, &series, &cfg.initial)?;
        for tf in &library {
            residuals.push(eval.residual(tf)?);
        }
        decays.push((n, decay_report(&cfg.model, &series, &cfg.initial)?));
    }
    output::create_dir(out)?;
    output::write_residuals(out.join("residuals.csv"), &residuals)?;
    output::write_decay(out.join("decay.csv"), &decays)?;
    let summary: Vec<Value> = decays
        .iter()
        .map(|(n, d)| {
            json!({
                "n": n,
                "violations": d.violations(),
                "first_E_n_violation": d.first_e_n_violation,
                "first_W_n_violation": d.first_w_n_violation,
                "first_E_violation": d.first_continuous_e_violation,
                "first_W_average_violation": d.first_w_average_violation,
                "W_bound": json_num(d.w_bound),
                "max_W_average": json_num(d.max_w_average),
                "max_abs_residual": json_num(
                    residuals.iter().filter(|r| r.n == *n).map(|r| r.value.abs()).fold(0.0, f64::max)
                ),
            })
        })
        .collect();
    output::write_json(out.join("validate.json"), &json!({ "runs": summary }))?;
    Ok(Status::Ok)
}
