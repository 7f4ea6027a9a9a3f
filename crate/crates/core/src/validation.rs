//! Weak-form residuals, decay checks and refinement studies.
//!
//! Residuals integrate the reconstructed fields against test functions of
//! the form `φ(t, x) = (1 − t/T)·g(x)`: 3-point Gauss per cell in space,
//! composite Simpson over the snapshot times in time. The time-quadrature
//! error is estimated by Richardson comparison with the rule at half the
//! cadence (every other snapshot).

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::f64::consts::PI;

use crate::initial::{theorem32_constants, DensityProfile, InitialData, VelocityProfile};
use crate::integrator::{simulate, IntegratorConfig, SnapshotSeries, MONOTONICITY_SLACK};
use crate::model::FluidModel;
use crate::quadrature::{adaptive, simpson_samples, QuadTol, GAUSS3};
use crate::reconstruct::{reconstruct, ReconstructedField};
use crate::{fmath, Error, Result};

/// Default export and comparison grid for self-distances.
pub const DISTANCE_GRID: usize = 1024;
/// Residual quadrature panels are at most `L / SPATIAL_PANELS` wide.
pub const SPATIAL_PANELS: f64 = 256.0;
/// Absolute slack on the time-averaged `W` bound.
pub const W_AVERAGE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    /// `φ(T, ·) = 0`.
    Continuity,
    /// Additionally `φ(t, 0) = φ(t, L) = φₓ(t, L) = 0`.
    Momentum,
}

/// Spatial profiles `g(x)` of the built-in test functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Basis {
    /// `sin(kπx/L)`.
    Sine(u32),
    /// `x²`.
    Quadratic,
    /// `(x/L)(1 − x/L)²`.
    WallCubic,
    /// `sin²(πx/L)(1 − x/L)`.
    WallSineSquared,
}

impl Basis {
    pub fn kind(self) -> TestKind {
        match self {
            Basis::Sine(_) | Basis::Quadratic => TestKind::Continuity,
            Basis::WallCubic | Basis::WallSineSquared => TestKind::Momentum,
        }
    }

    pub fn label(self) -> String {
        match self {
            Basis::Sine(k) => format!("sin{k}"),
            Basis::Quadratic => "x2".into(),
            Basis::WallCubic => "wall_cubic".into(),
            Basis::WallSineSquared => "wall_sin2".into(),
        }
    }

    /// `(g, g', g'')` at `x`.
    fn eval(self, x: f64, length: f64) -> (f64, f64, f64) {
        match self {
            Basis::Sine(k) => {
                let w = k as f64 * PI / length;
                let (s, c) = (fmath::sin(w * x), fmath::cos(w * x));
                (s, w * c, -w * w * s)
            }
            Basis::Quadratic => (x * x, 2.0 * x, 2.0),
            Basis::WallCubic => {
                let u = x / length;
                (u * (1.0 - u) * (1.0 - u), (1.0 - u) * (1.0 - 3.0 * u) / length, (6.0 * u - 4.0) / (length * length))
            }
            Basis::WallSineSquared => {
                let w = PI / length;
                let u = x / length;
                let s = fmath::sin(w * x);
                let (s2, c2) = (fmath::sin(2.0 * w * x), fmath::cos(2.0 * w * x));
                (
                    s * s * (1.0 - u),
                    w * s2 * (1.0 - u) - s * s / length,
                    2.0 * w * w * c2 * (1.0 - u) - 2.0 * w * s2 / length,
                )
            }
        }
    }
}

/// `φ`, `φ_t`, `φ_x`, `φ_xx` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TestValue {
    pub phi: f64,
    pub phi_t: f64,
    pub phi_x: f64,
    pub phi_xx: f64,
}

/// A linear combination `Σ cⱼ (1 − t/T) gⱼ(x)` of basis profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub kind: TestKind,
    pub horizon: f64,
    pub length: f64,
    pub terms: Vec<(f64, Basis)>,
    pub label: String,
}

impl TestFunction {
    pub fn zero(kind: TestKind, horizon: f64, length: f64) -> Self {
        TestFunction { kind, horizon, length, terms: Vec::new(), label: "zero".into() }
    }

    pub fn basis(basis: Basis, horizon: f64, length: f64) -> Self {
        TestFunction { kind: basis.kind(), horizon, length, terms: vec![(1.0, basis)], label: basis.label() }
    }

    /// The built-in library: four continuity and two momentum functions.
    pub fn library(horizon: f64, length: f64) -> Vec<TestFunction> {
        [Basis::Sine(1), Basis::Sine(2), Basis::Sine(3), Basis::Quadratic, Basis::WallCubic, Basis::WallSineSquared]
            .into_iter()
            .map(|b| TestFunction::basis(b, horizon, length))
            .collect()
    }

    /// `α·self + β·other`. Momentum terms are admissible in either kind; the
    /// result has the weaker kind of the two.
    pub fn combine(&self, alpha: f64, other: &TestFunction, beta: f64) -> Result<TestFunction> {
        if self.horizon != other.horizon || self.length != other.length {
            return Err(Error::InvalidParameter { name: "test function", reason: "horizons and lengths must match".into() });
        }
        let kind = if self.kind == TestKind::Momentum && other.kind == TestKind::Momentum {
            TestKind::Momentum
        } else {
            TestKind::Continuity
        };
        let mut terms: Vec<(f64, Basis)> = self.terms.iter().map(|&(c, b)| (alpha * c, b)).collect();
        terms.extend(other.terms.iter().map(|&(c, b)| (beta * c, b)));
        Ok(TestFunction {
            kind,
            horizon: self.horizon,
            length: self.length,
            terms,
            label: format!("{alpha}*({})+{beta}*({})", self.label, other.label),
        })
    }

    pub fn eval(&self, t: f64, x: f64) -> TestValue {
        let decay = 1.0 - t / self.horizon;
        let mut out = TestValue::default();
        for &(c, b) in &self.terms {
            let (g, g1, g2) = b.eval(x, self.length);
            out.phi += c * decay * g;
            out.phi_t -= c * g / self.horizon;
            out.phi_x += c * decay * g1;
            out.phi_xx += c * decay * g2;
        }
        out
    }

    /// Largest violation of the admissibility constraints over the probes.
    pub fn constraint_violation(&self, probes: &[(f64, f64)]) -> f64 {
        let mut worst: f64 = 0.0;
        for &(t, x) in probes {
            worst = worst.max(self.eval(self.horizon, x).phi.abs());
            if self.kind == TestKind::Momentum {
                worst = worst.max(self.eval(t, 0.0).phi.abs());
                let at_wall = self.eval(t, self.length);
                worst = worst.max(at_wall.phi.abs()).max(at_wall.phi_x.abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub n: usize,
    pub test_function: String,
    pub kind: TestKind,
    pub value: f64,
    /// Richardson estimate of the time-quadrature error.
    pub error_estimate: f64,
    /// Set when the error estimate exceeds a tenth of `|value|`.
    pub inconclusive: bool,
}

fn breakpoints(init: &InitialData) -> Vec<f64> {
    let mut pts = vec![0.0, init.length];
    if let DensityProfile::Table { x, .. } = &init.rho0 {
        pts.extend_from_slice(x);
    }
    if let VelocityProfile::Table { x, .. } = &init.v0 {
        pts.extend_from_slice(x);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn initial_integral<F: FnMut(f64) -> f64>(init: &InitialData, mut f: F) -> Result<f64> {
    let tol = QuadTol { rel: 1e-13, abs: 1e-15, max_intervals: 4000 };
    let pts = breakpoints(init);
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += adaptive(&mut f, w[0], w[1], tol)?.value;
    }
    Ok(total)
}

/// Reconstructions of every snapshot, shared across test functions.
pub struct ResidualEvaluator<'a> {
    model: &'a FluidModel,
    init: &'a InitialData,
    n: usize,
    horizon: f64,
    times: Vec<f64>,
    fields: Vec<ReconstructedField>,
}

impl<'a> ResidualEvaluator<'a> {
    pub fn new(model: &'a FluidModel, series: &SnapshotSeries, init: &'a InitialData) -> Result<Self> {
        init.check_against(model)?;
        let times = series.times();
        if times.len() < 2 {
            return Err(Error::InvalidParameter { name: "series", reason: "at least two snapshots are required".into() });
        }
        let fields = series.snapshots.iter().map(|s| reconstruct(model, &s.state)).collect::<Result<Vec<_>>>()?;
        Ok(ResidualEvaluator { model, init, n: series.n(), horizon: times[times.len() - 1] - times[0], times, fields })
    }

    pub fn residual(&self, tf: &TestFunction) -> Result<ResidualReport> {
        if (tf.horizon - self.horizon).abs() > 1e-12 * self.horizon {
            return Err(Error::InvalidParameter {
                name: "test function",
                reason: format!("horizon {} differs from series horizon {}", tf.horizon, self.horizon),
            });
        }
        let t0 = self.times[0];
        let initial = match tf.kind {
            TestKind::Continuity => initial_integral(self.init, |x| tf.eval(0.0, x).phi * self.init.rho(x))?,
            TestKind::Momentum => initial_integral(self.init, |x| tf.eval(0.0, x).phi * self.init.rho(x) * self.init.v(x))?,
        };
        let mut samples = Vec::with_capacity(self.fields.len());
        for (field, &t) in self.fields.iter().zip(&self.times) {
            let tau = t - t0;
            let panel = self.model.length() / SPATIAL_PANELS;
            let g = match tf.kind {
                TestKind::Continuity => field.integrate_panels(&GAUSS3, panel, |p| {
                    let phi = tf.eval(tau, p.x);
                    p.rho * (phi.phi_t + p.v * phi.phi_x)
                }),
                TestKind::Momentum => field.integrate_panels(&GAUSS3, panel, |p| {
                    let phi = tf.eval(tau, p.x);
                    let flux = p.rho * p.v * p.v + self.model.pressure(p.rho) - self.model.viscosity(p.rho) * p.v_x;
                    phi.phi_t * p.rho * p.v + phi.phi_x * flux
                }),
            };
            samples.push(g);
        }
        let fine = simpson_samples(&self.times, &samples);
        let (ct, cy) = coarse(&self.times, &samples);
        let coarse_value = simpson_samples(&ct, &cy);
        let value = initial + fine;
        let error_estimate = (fine - coarse_value).abs() / 15.0;
        Ok(ResidualReport {
            n: self.n,
            test_function: tf.label.clone(),
            kind: tf.kind,
            value,
            error_estimate,
            inconclusive: error_estimate > value.abs() / 10.0,
        })
    }
}

/// Every other sample, always keeping the last.
fn coarse(t: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut ct = Vec::new();
    let mut cy = Vec::new();
    for k in (0..t.len()).step_by(2) {
        ct.push(t[k]);
        cy.push(y[k]);
    }
    if (t.len() - 1) % 2 == 1 {
        ct.push(t[t.len() - 1]);
        cy.push(y[y.len() - 1]);
    }
    (ct, cy)
}

/// Residual of the continuity identity against `tf`.
pub fn continuity_residual(model: &FluidModel, series: &SnapshotSeries, init: &InitialData, tf: &TestFunction) -> Result<ResidualReport> {
    ResidualEvaluator::new(model, series, init)?.residual(&TestFunction { kind: TestKind::Continuity, ..tf.clone() })
}

/// Residual of the momentum identity against `tf`, which must be momentum-admissible.
pub fn momentum_residual(model: &FluidModel, series: &SnapshotSeries, init: &InitialData, tf: &TestFunction) -> Result<ResidualReport> {
    if tf.kind != TestKind::Momentum {
        return Err(Error::InvalidParameter { name: "test function", reason: "momentum residual needs a momentum-admissible function".into() });
    }
    ResidualEvaluator::new(model, series, init)?.residual(tf)
}

/// Pointwise and time-averaged decay diagnostics for a series.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub e_n: Vec<f64>,
    pub w_n: Vec<f64>,
    pub continuous_e: Vec<f64>,
    pub continuous_w: Vec<f64>,
    /// Right-hand side of the time-averaged `W` bound.
    pub w_bound: f64,
    /// Largest time average of `continuous_W` over snapshot windows.
    pub max_w_average: f64,
    pub first_e_n_violation: Option<usize>,
    pub first_w_n_violation: Option<usize>,
    pub first_continuous_e_violation: Option<usize>,
    /// Window `(start, end)` snapshot indices of the first averaged violation.
    pub first_w_average_violation: Option<(usize, usize)>,
}

impl DecayReport {
    pub fn violations(&self) -> usize {
        [self.first_e_n_violation, self.first_w_n_violation, self.first_continuous_e_violation]
            .iter()
            .filter(|v| v.is_some())
            .count()
            + usize::from(self.first_w_average_violation.is_some())
    }
}

fn first_increase(values: &[f64]) -> Option<usize> {
    let slack = MONOTONICITY_SLACK * values.first().copied().unwrap_or(0.0).max(1.0);
    values.windows(2).position(|w| w[1] > w[0] + slack).map(|k| k + 1)
}

pub fn decay_report(model: &FluidModel, series: &SnapshotSeries, init: &InitialData) -> Result<DecayReport> {
    let times = series.times();
    let e_n: Vec<f64> = series.snapshots.iter().map(|s| s.functionals.e_n).collect();
    let w_n: Vec<f64> = series.snapshots.iter().map(|s| s.functionals.w_n).collect();
    let mut continuous_e = Vec::with_capacity(times.len());
    let mut continuous_w = Vec::with_capacity(times.len());
    for s in &series.snapshots {
        let f = reconstruct(model, &s.state)?;
        continuous_e.push(f.continuous_e(model)?);
        continuous_w.push(f.continuous_w(model)?);
    }
    let w_bound = theorem32_constants(model, init)?.w_bar;

    // cumulative trapezoid of continuous W
    let mut cum = vec![0.0; times.len()];
    for k in 1..times.len() {
        cum[k] = cum[k - 1] + 0.5 * (times[k] - times[k - 1]) * (continuous_w[k] + continuous_w[k - 1]);
    }
    let mut max_w_average = continuous_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut first_w_average_violation = continuous_w
        .iter()
        .position(|&w| w > w_bound + W_AVERAGE_SLACK)
        .map(|k| (k, k));
    for i in 0..times.len() {
        for j in i + 1..times.len() {
            let avg = (cum[j] - cum[i]) / (times[j] - times[i]);
            max_w_average = max_w_average.max(avg);
            if first_w_average_violation.is_none() && avg > w_bound + W_AVERAGE_SLACK {
                first_w_average_violation = Some((i, j));
            }
        }
    }
    Ok(DecayReport {
        first_e_n_violation: first_increase(&e_n),
        first_w_n_violation: first_increase(&w_n),
        first_continuous_e_violation: first_increase(&continuous_e),
        times,
        e_n,
        w_n,
        continuous_e,
        continuous_w,
        w_bound,
        max_w_average,
        first_w_average_violation,
    })
}

/// One row of a refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Set when the simulation for this `n` failed; other fields are then NaN.
    pub error: Option<Error>,
    /// `sup_t |∫ρ⁽ⁿ⁾ − m|`.
    pub mass_error: f64,
    pub max_continuity_residual: f64,
    pub max_momentum_residual: f64,
    /// `sup_t ‖ρ⁽ⁿ'⁾ − ρ⁽ⁿ⁾‖₂` against the next `n'` in the list.
    pub rho_distance: Option<f64>,
    pub v_distance: Option<f64>,
    /// `max ‖ρ[t] − ρ[t₀]‖₂ / |t − t₀|^{1/2}`.
    pub holder_rho: f64,
    /// `max ‖v[t] − v[t₀]‖₂ / |t − t₀|^{1/4}`.
    pub holder_v: f64,
    /// `sup_t |E(ρ⁽ⁿ⁾, v⁽ⁿ⁾) − Eₙ|`.
    pub energy_gap: f64,
    /// `sup_t |W(ρ⁽ⁿ⁾, v⁽ⁿ⁾) − Wₙ|`.
    pub modified_energy_gap: f64,
    pub decay_violations: usize,
}

impl ConvergenceRow {
    fn failed(n: usize, error: Error) -> Self {
        ConvergenceRow {
            n,
            error: Some(error),
            mass_error: f64::NAN,
            max_continuity_residual: f64::NAN,
            max_momentum_residual: f64::NAN,
            rho_distance: None,
            v_distance: None,
            holder_rho: f64::NAN,
            holder_v: f64::NAN,
            energy_gap: f64::NAN,
            modified_energy_gap: f64::NAN,
            decay_violations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub grid_size: usize,
}

/// `(ρ, v)` grid values per snapshot.
type GridSamples = Vec<(Vec<f64>, Vec<f64>)>;

/// Samples `(ρ, v)` of every snapshot on a uniform grid.
fn grid_samples(model: &FluidModel, series: &SnapshotSeries, grid: usize) -> Result<GridSamples> {
    series
        .snapshots
        .iter()
        .map(|s| {
            let f = reconstruct(model, &s.state)?;
            let pts = f.sample_grid(grid);
            Ok((pts.iter().map(|p| p.1).collect(), pts.iter().map(|p| p.2).collect()))
        })
        .collect()
}

/// Trapezoid `L²` norm of `a − b` on a uniform grid over `[0, L]`.
pub fn grid_l2_distance(a: &[f64], b: &[f64], length: f64) -> f64 {
    let k = a.len();
    let h = length / (k - 1) as f64;
    let mut acc = 0.0;
    for j in 0..k {
        let d = a[j] - b[j];
        let w = if j == 0 || j + 1 == k { 0.5 } else { 1.0 };
        acc += w * d * d;
    }
    fmath::sqrt(acc * h)
}

fn row_for(model: &FluidModel, init: &InitialData, series: &SnapshotSeries, samples: &[(Vec<f64>, Vec<f64>)]) -> Result<ConvergenceRow> {
    let m = model.mass();
    let length = model.length();
    let mut mass_error: f64 = 0.0;
    let mut energy_gap: f64 = 0.0;
    let mut modified_energy_gap: f64 = 0.0;
    for s in &series.snapshots {
        let f = reconstruct(model, &s.state)?;
        mass_error = mass_error.max((f.total_mass() - m).abs());
        energy_gap = energy_gap.max((f.continuous_e(model)? - s.functionals.e_n).abs());
        modified_energy_gap = modified_energy_gap.max((f.continuous_w(model)? - s.functionals.w_n).abs());
    }
    let horizon = series.last().t() - series.snapshots[0].t();
    let eval = ResidualEvaluator::new(model, series, init)?;
    let mut max_continuity_residual: f64 = 0.0;
    let mut max_momentum_residual: f64 = 0.0;
    for tf in TestFunction::library(horizon, length) {
        let r = eval.residual(&tf)?;
        match tf.kind {
            TestKind::Continuity => max_continuity_residual = max_continuity_residual.max(r.value.abs()),
            TestKind::Momentum => max_momentum_residual = max_momentum_residual.max(r.value.abs()),
        }
    }
    let times = series.times();
    let mut holder_rho: f64 = 0.0;
    let mut holder_v: f64 = 0.0;
    for i in 0..times.len() {
        for j in i + 1..times.len() {
            let dt = times[j] - times[i];
            holder_rho = holder_rho.max(grid_l2_distance(&samples[i].0, &samples[j].0, length) / fmath::sqrt(dt));
            holder_v = holder_v.max(grid_l2_distance(&samples[i].1, &samples[j].1, length) / fmath::powf(dt, 0.25));
        }
    }
    let decay_violations = decay_report(model, series, init)?.violations();
    Ok(ConvergenceRow {
        n: series.n(),
        error: None,
        mass_error,
        max_continuity_residual,
        max_momentum_residual,
        rho_distance: None,
        v_distance: None,
        holder_rho,
        holder_v,
        energy_gap,
        modified_energy_gap,
        decay_violations,
    })
}

/// Builds the study table from already computed series (one per `n`, ascending).
pub fn convergence_from_series(
    model: &FluidModel,
    init: &InitialData,
    runs: &[(usize, Result<SnapshotSeries>)],
    grid_size: usize,
) -> ConvergenceStudy {
    let length = model.length();
    let mut rows = Vec::with_capacity(runs.len());
    let mut samples: Vec<Option<GridSamples>> = Vec::with_capacity(runs.len());
    for (n, run) in runs {
        let outcome = run.as_ref().map_err(Clone::clone).and_then(|series| {
            let s = grid_samples(model, series, grid_size)?;
            let row = row_for(model, init, series, &s)?;
            Ok((row, s))
        });
        match outcome {
            Ok((row, s)) => {
                rows.push(row);
                samples.push(Some(s));
            }
            Err(e) => {
                rows.push(ConvergenceRow::failed(*n, e));
                samples.push(None);
            }
        }
    }
    for k in 0..rows.len().saturating_sub(1) {
        let (Some(a), Some(b)) = (&samples[k], &samples[k + 1]) else { continue };
        let (Ok(sa), Ok(sb)) = (&runs[k].1, &runs[k + 1].1) else { continue };
        if a.len() != b.len() || sa.times().iter().zip(sb.times()).any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0)) {
            continue;
        }
        let mut dr: f64 = 0.0;
        let mut dv: f64 = 0.0;
        for (p, q) in a.iter().zip(b) {
            dr = dr.max(grid_l2_distance(&p.0, &q.0, length));
            dv = dv.max(grid_l2_distance(&p.1, &q.1, length));
        }
        rows[k].rho_distance = Some(dr);
        rows[k].v_distance = Some(dv);
    }
    ConvergenceStudy { rows, grid_size }
}

/// Simulates every `n` in `n_list` and tabulates the refinement diagnostics.
pub fn convergence_study(
    model: &FluidModel,
    init: &InitialData,
    n_list: &[usize],
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<ConvergenceStudy> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter { name: "n_list", reason: "must be non-empty and strictly ascending".into() });
    }
    let runs: Vec<(usize, Result<SnapshotSeries>)> = n_list
        .iter()
        .map(|&n| {
            let series = crate::initial::build_particles(model, init, n).and_then(|s0| simulate(model, &s0, t_final, cfg));
            (n, series)
        })
        .collect();
    Ok(convergence_from_series(model, init, &runs, DISTANCE_GRID))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::build_particles;
    use crate::model::Preset;

    fn sv() -> FluidModel {
        FluidModel::preset(Preset::SaintVenant { g: 9.81, nu: 1.0 }, 1.0, 1.0).unwrap()
    }

    fn run(init: &InitialData, n: usize, t: f64) -> SnapshotSeries {
        let model = sv();
        let s0 = build_particles(&model, init, n).unwrap();
        let cfg = IntegratorConfig { snapshot_dt: 0.02, ..IntegratorConfig::default() };
        simulate(&model, &s0, t, &cfg).unwrap()
    }

    fn perturbed() -> InitialData {
        InitialData::new(DensityProfile::Constant(1.0), VelocityProfile::Sine { amplitude: 0.1, mode: 1 }, 1.0).unwrap()
    }

    #[test]
    fn library_satisfies_constraints() {
        let probes: Vec<(f64, f64)> = (0..1000).map(|k| ((k as f64 * 0.618_034) % 1.0, (k as f64 * 0.414_214) % 1.0)).collect();
        for tf in TestFunction::library(1.0, 1.0) {
            assert!(tf.constraint_violation(&probes) < 1e-15, "{}", tf.label);
        }
    }

    #[test]
    fn basis_derivatives_match_finite_differences() {
        let h = 1e-5;
        for tf in TestFunction::library(0.7, 1.3) {
            for x in [0.1, 0.5, 0.9, 1.2] {
                let c = tf.eval(0.2, x);
                let (l, r) = (tf.eval(0.2, x - h), tf.eval(0.2, x + h));
                assert!(((r.phi - l.phi) / (2.0 * h) - c.phi_x).abs() < 1e-8, "{}", tf.label);
                assert!(((r.phi_x - l.phi_x) / (2.0 * h) - c.phi_xx).abs() < 1e-6, "{}", tf.label);
                let (a, b) = (tf.eval(0.2 - h, x), tf.eval(0.2 + h, x));
                assert!(((b.phi - a.phi) / (2.0 * h) - c.phi_t).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn equilibrium_residuals_vanish() {
        let model = sv();
        let init = InitialData::equilibrium(&model);
        let series = run(&init, 8, 0.2);
        let eval = ResidualEvaluator::new(&model, &series, &init).unwrap();
        for tf in TestFunction::library(0.2, 1.0) {
            let r = eval.residual(&tf).unwrap();
            assert!(r.value.abs() < 1e-8, "{} {}", tf.label, r.value);
        }
        let zero = TestFunction::zero(TestKind::Momentum, 0.2, 1.0);
        assert_eq!(eval.residual(&zero).unwrap().value, 0.0);
        let d = decay_report(&model, &series, &init).unwrap();
        assert_eq!(d.violations(), 0);
        assert!(d.e_n.iter().all(|&e| e < 1e-20));
    }

    #[test]
    fn residual_is_linear() {
        let model = sv();
        let init = perturbed();
        let series = run(&init, 8, 0.2);
        let eval = ResidualEvaluator::new(&model, &series, &init).unwrap();
        let a = TestFunction::basis(Basis::Sine(1), 0.2, 1.0);
        let b = TestFunction::basis(Basis::Quadratic, 0.2, 1.0);
        let combo = a.combine(2.5, &b, -0.75).unwrap();
        let (ra, rb, rc) = (eval.residual(&a).unwrap().value, eval.residual(&b).unwrap().value, eval.residual(&combo).unwrap().value);
        let expect = 2.5 * ra - 0.75 * rb;
        assert!((rc - expect).abs() <= 1e-10 * expect.abs().max(1e-12), "{rc} vs {expect}");
    }

    #[test]
    fn momentum_residual_requires_momentum_kind() {
        let model = sv();
        let init = perturbed();
        let series = run(&init, 4, 0.1);
        let tf = TestFunction::basis(Basis::Sine(1), 0.1, 1.0);
        assert!(momentum_residual(&model, &series, &init, &tf).is_err());
        let tf = TestFunction::basis(Basis::WallCubic, 0.1, 1.0);
        assert!(momentum_residual(&model, &series, &init, &tf).is_ok());
        let wrong_horizon = TestFunction::basis(Basis::WallCubic, 0.3, 1.0);
        assert!(momentum_residual(&model, &series, &init, &wrong_horizon).is_err());
    }

    #[test]
    fn perturbed_decay_report() {
        let model = sv();
        let init = perturbed();
        let series = run(&init, 16, 0.4);
        let d = decay_report(&model, &series, &init).unwrap();
        assert_eq!(d.first_e_n_violation, None);
        assert_eq!(d.first_w_n_violation, None);
        assert!(d.max_w_average <= d.w_bound + W_AVERAGE_SLACK);
    }

    #[test]
    fn coarse_keeps_endpoints() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let (ct, _) = coarse(&t, &t);
        assert_eq!(ct, vec![0.0, 2.0, 3.0]);
        let t = [0.0, 1.0, 2.0];
        assert_eq!(coarse(&t, &t).0, vec![0.0, 2.0]);
    }

    #[test]
    fn l2_distance_of_constants() {
        let a = vec![1.0; 11];
        let b = vec![0.5; 11];
        assert!((grid_l2_distance(&a, &b, 4.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn equilibrium_study_is_flat() {
        let model = sv();
        let init = InitialData::equilibrium(&model);
        let cfg = IntegratorConfig { snapshot_dt: 0.05, ..IntegratorConfig::default() };
        let study = convergence_study(&model, &init, &[4, 8], 0.1, &cfg).unwrap();
        let r = &study.rows[0];
        assert!(r.mass_error < 1e-14 && r.rho_distance.unwrap() < 1e-12 && r.v_distance.unwrap() < 1e-12, "{r:?}");
        assert!(r.max_continuity_residual < 1e-10 && r.max_momentum_residual < 1e-10);
        assert!(study.rows[1].rho_distance.is_none());
        assert!(convergence_study(&model, &init, &[8, 4], 0.1, &cfg).is_err());
    }
}
