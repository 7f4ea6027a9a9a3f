//! CSV and JSON artifacts. Numbers are written with 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pflow_core::integrator::SnapshotSeries;
use pflow_core::reconstruct::reconstruct;
use pflow_core::validation::{ConvergenceStudy, DecayReport, ResidualReport, TestKind};
use pflow_core::{AdmissibilityReport, FluidModel};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

/// Scientific notation with 17 significant digits; non-finite values as `inf`, `-inf`, `nan`.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON number, or the same string spellings as [`num`] for non-finite values.
pub fn json_num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(num(v))
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })
}

struct Csv {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl Csv {
    fn create(path: PathBuf, header: &[&str]) -> CliResult<Self> {
        let file = File::create(&path).map_err(|source| CliError::Write { path: path.clone(), source })?;
        let mut inner = csv::Writer::from_writer(BufWriter::new(file));
        inner.write_record(header)?;
        Ok(Csv { path, inner })
    }

    fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        Ok(self.inner.write_record(fields)?)
    }

    fn finish(mut self) -> CliResult<()> {
        self.inner.flush().map_err(|source| CliError::Write { path: self.path, source })
    }
}

/// `particles.csv`: every node including the walls, `i = 0` at `x = L`.
pub fn write_particles(path: PathBuf, model: &FluidModel, series: &SnapshotSeries) -> CliResult<()> {
    let mut out = Csv::create(path, &["t", "i", "x_i", "v_i", "rho_i"])?;
    for snap in &series.snapshots {
        let f = reconstruct(model, &snap.state)?;
        for i in 0..=f.n {
            out.row([num(f.t), i.to_string(), num(f.edges[i]), num(f.v[i]), num(f.rho[i])])?;
        }
    }
    out.finish()
}

/// `fields.csv`: reconstructed fields on a uniform export grid.
pub fn write_fields(path: PathBuf, model: &FluidModel, series: &SnapshotSeries, grid: usize) -> CliResult<()> {
    let mut out = Csv::create(path, &["t", "x", "rho", "v"])?;
    for snap in &series.snapshots {
        let f = reconstruct(model, &snap.state)?;
        for (x, rho, v) in f.sample_grid(grid) {
            out.row([num(f.t), num(x), num(rho), num(v)])?;
        }
    }
    out.finish()
}

/// `diagnostics.csv`: discrete functionals, reconstructed mass and raw spacing extremes.
pub fn write_diagnostics(path: PathBuf, model: &FluidModel, series: &SnapshotSeries) -> CliResult<()> {
    let mut out = Csv::create(path, &["t", "E_n", "W_n", "Z_n", "H_n", "mass", "min_spacing", "max_spacing"])?;
    let length = model.length();
    for snap in &series.snapshots {
        let f = &snap.functionals;
        let mass = reconstruct(model, &snap.state)?.total_mass();
        let (lo, hi) = snap.state.spacings(length).iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        out.row([num(snap.t()), num(f.e_n), num(f.w_n), num(f.z_n), num(f.h_n), num(mass), num(lo), num(hi)])?;
    }
    out.finish()
}

pub fn admissibility_json(report: &AdmissibilityReport) -> Value {
    let c = &report.constants;
    json!({
        "admissible": report.admissible,
        "constants": {
            "E_bar": json_num(c.e_bar),
            "W_bar": json_num(c.w_bar),
            "Z_bar": json_num(c.z_bar),
            "A_bar": json_num(c.a_bar),
            "M_bar": json_num(c.m_bar),
        },
        "rho_min": json_num(report.rho_min),
        "lhs": json_num(report.lhs),
        "limits": {
            "high": json_num(report.limits.high),
            "low": json_num(report.limits.low),
            "min": json_num(report.limits.min()),
        },
        "bounds": report.bounds.map(|b| json!({
            "a": json_num(b.a),
            "b": json_num(b.b),
            "budget": json_num(b.budget),
        })),
    })
}

pub fn write_json(path: PathBuf, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("in-memory JSON serialization");
    text.push('\n');
    std::fs::write(&path, text).map_err(|source| CliError::Write { path, source })
}

pub fn write_convergence(path: PathBuf, study: &ConvergenceStudy) -> CliResult<()> {
    let mut out = Csv::create(
        path,
        &[
            "n",
            "mass_error",
            "max_continuity_residual",
            "max_momentum_residual",
            "rho_distance",
            "v_distance",
            "holder_rho",
            "holder_v",
            "energy_gap",
            "modified_energy_gap",
            "decay_violations",
            "error",
        ],
    )?;
    for r in &study.rows {
        out.row([
            r.n.to_string(),
            num(r.mass_error),
            num(r.max_continuity_residual),
            num(r.max_momentum_residual),
            opt_num(r.rho_distance),
            opt_num(r.v_distance),
            num(r.holder_rho),
            num(r.holder_v),
            num(r.energy_gap),
            num(r.modified_energy_gap),
            r.decay_violations.to_string(),
            r.error.as_ref().map(|e| e.kind().to_string()).unwrap_or_default(),
        ])?;
    }
    out.finish()
}

fn kind_name(kind: TestKind) -> &'static str {
    match kind {
        TestKind::Continuity => "continuity",
        TestKind::Momentum => "momentum",
    }
}

pub fn write_residuals(path: PathBuf, reports: &[ResidualReport]) -> CliResult<()> {
    let mut out = Csv::create(path, &["n", "test_function", "equation", "value", "error_estimate", "inconclusive"])?;
    for r in reports {
        out.row([
            r.n.to_string(),
            r.test_function.clone(),
            kind_name(r.kind).to_string(),
            num(r.value),
            num(r.error_estimate),
            r.inconclusive.to_string(),
        ])?;
    }
    out.finish()
}

pub fn write_decay(path: PathBuf, reports: &[(usize, DecayReport)]) -> CliResult<()> {
    let mut out = Csv::create(path, &["n", "t", "E_n", "W_n", "E", "W"])?;
    for (n, d) in reports {
        for k in 0..d.times.len() {
            out.row([n.to_string(), num(d.times[k]), num(d.e_n[k]), num(d.w_n[k]), num(d.continuous_e[k]), num(d.continuous_w[k])])?;
        }
    }
    out.finish()
}

pub fn write_text(path: PathBuf, text: &str) -> CliResult<()> {
    let mut file = File::create(&path).map_err(|source| CliError::Write { path: path.clone(), source })?;
    file.write_all(text.as_bytes()).map_err(|source| CliError::Write { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_with_seventeen_digits() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{s}");
        }
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
        assert_eq!(json_num(f64::INFINITY), json!("inf"));
    }
}
