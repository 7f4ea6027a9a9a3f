//! Adaptive Dormand–Prince 5(4) time stepping with exact snapshot times.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::FluidModel;
use crate::particles::{check_positions, functionals, rhs_packed, DiscreteFunctionals, ParticleState};
use crate::{fmath, Error, Result};

/// Stage nodes; the system is autonomous so they only serve the tableau check.
#[cfg(test)]
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const UNDERFLOW: f64 = 1e-14;
/// Relative slack on `Eₙ`/`Wₙ` monotonicity, scaled by `max(1, value at t = 0)`.
pub const MONOTONICITY_SLACK: f64 = 1e-8;

/// Step control parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// First trial step. `None` derives one from the viscous stiffness.
    pub dt_init: Option<f64>,
    pub dt_max: f64,
    /// Upper bound on attempted steps (accepted plus rejected).
    pub max_steps: usize,
    pub snapshot_dt: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            dt_init: None,
            dt_max: f64::INFINITY,
            max_steps: 50_000_000,
            snapshot_dt: 0.01,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: alloc::format!("must be positive, got {v}") })
            }
        };
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        positive("dt_max", self.dt_max)?;
        positive("snapshot_dt", self.snapshot_dt)?;
        if !self.snapshot_dt.is_finite() {
            return Err(Error::InvalidParameter { name: "snapshot_dt", reason: "must be finite".into() });
        }
        if let Some(dt) = self.dt_init {
            positive("dt_init", dt)?;
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter { name: "max_steps", reason: "must be at least 1".into() });
        }
        Ok(())
    }
}

/// A stored state together with its discrete functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: ParticleState,
    pub functionals: DiscreteFunctionals,
}

impl Snapshot {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Rejections caused by a stage or candidate leaving `Ωₙ`.
    pub rejected_domain: usize,
    pub min_dt: f64,
    pub max_dt: f64,
    pub rhs_evaluations: usize,
}

/// Which decaying functional a [`MonotonicityWarning`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monitored {
    EnergyN,
    ModifiedEnergyN,
}

impl Monitored {
    pub fn name(self) -> &'static str {
        match self {
            Monitored::EnergyN => "E_n",
            Monitored::ModifiedEnergyN => "W_n",
        }
    }
}

/// First snapshot at which a monitored functional grew beyond the slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityWarning {
    pub quantity: Monitored,
    pub snapshot: usize,
    pub t: f64,
    pub previous: f64,
    pub current: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSeries {
    pub snapshots: Vec<Snapshot>,
    pub stats: IntegrationStats,
    pub warnings: Vec<MonotonicityWarning>,
    pub t_final: f64,
    pub snapshot_dt: f64,
}

impl SnapshotSeries {
    pub fn n(&self) -> usize {
        self.snapshots[0].state.n
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(Snapshot::t).collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("series always holds the initial snapshot")
    }
}

/// Outcome of a single step attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: ParticleState,
    pub dt_next: f64,
    pub accepted: bool,
}

/// Reusable stage storage for one system size.
struct Stepper<'a> {
    model: &'a FluidModel,
    cfg: IntegratorConfig,
    n: usize,
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    candidate: Vec<f64>,
    scratch: Vec<f64>,
    /// `k[0]` holds f(y) for the current `y`.
    first_stage_valid: bool,
    rhs_evaluations: usize,
}

enum Attempt {
    Accepted { dt_next: f64 },
    Rejected { dt_next: f64, domain: bool },
}

impl<'a> Stepper<'a> {
    fn new(model: &'a FluidModel, cfg: IntegratorConfig, n: usize) -> Self {
        let dim = 2 * (n - 1);
        Stepper {
            model,
            cfg,
            n,
            k: core::array::from_fn(|_| vec![0.0; dim]),
            stage: vec![0.0; dim],
            candidate: vec![0.0; dim],
            scratch: Vec::new(),
            first_stage_valid: false,
            rhs_evaluations: 0,
        }
    }

    fn eval(&mut self, which: usize, from_stage: bool, y: &[f64]) -> Result<()> {
        self.rhs_evaluations += 1;
        let src: &[f64] = if from_stage { &self.stage } else { y };
        rhs_packed(self.model, self.n, src, &mut self.k[which], &mut self.scratch)
    }

    #[allow(clippy::needless_range_loop)] // stage arrays are indexed in lockstep
    fn attempt(&mut self, y: &[f64], dt: f64) -> Result<Attempt> {
        let shrink = |dt: f64| Attempt::Rejected { dt_next: 0.5 * dt, domain: true };
        if !self.first_stage_valid {
            self.eval(0, false, y)?;
            self.first_stage_valid = true;
        }
        for s in 1..7 {
            for j in 0..y.len() {
                let mut acc = 0.0;
                for (r, a) in A[s][..s].iter().enumerate() {
                    acc += a * self.k[r][j];
                }
                self.stage[j] = y[j] + dt * acc;
            }
            match self.eval(s, true, y) {
                Ok(()) => {}
                Err(Error::OutsideDomain { .. } | Error::NonFinite { .. }) => return Ok(shrink(dt)),
                Err(e) => return Err(e),
            }
        }
        // the seventh stage point is the fifth-order solution
        self.candidate.copy_from_slice(&self.stage);
        if check_positions(&self.candidate[..self.n - 1], self.model.length()).is_err() {
            return Ok(shrink(dt));
        }
        let mut err: f64 = 0.0;
        for j in 0..y.len() {
            let mut e = 0.0;
            for (r, w) in E.iter().enumerate() {
                e += w * self.k[r][j];
            }
            let scale = self.cfg.abs_tol + self.cfg.rel_tol * y[j].abs().max(self.candidate[j].abs());
            err = err.max((dt * e).abs() / scale);
        }
        if !err.is_finite() {
            return Ok(shrink(dt));
        }
        let factor = if err == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * fmath::powf(err, -0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };
        if err <= 1.0 {
            self.k.swap(0, 6);
            Ok(Attempt::Accepted { dt_next: (dt * factor).min(self.cfg.dt_max) })
        } else {
            Ok(Attempt::Rejected { dt_next: dt * factor.min(1.0), domain: false })
        }
    }
}

/// One embedded-pair attempt from `state` with step `dt`.
///
/// `t_final` sets the underflow floor `1e-14·t_final` below which the
/// proposed next step is treated as a stiffness failure.
pub fn step(model: &FluidModel, state: &ParticleState, dt: f64, cfg: &IntegratorConfig, t_final: f64) -> Result<StepOutcome> {
    cfg.validate()?;
    state.check_domain(model.length())?;
    if !(dt > 0.0 && dt <= cfg.dt_max) {
        return Err(Error::InvalidParameter { name: "dt", reason: alloc::format!("must lie in (0, dt_max], got {dt}") });
    }
    let mut stepper = Stepper::new(model, *cfg, state.n);
    let y = state.to_vector();
    let outcome = stepper.attempt(&y, dt)?;
    let (dt_next, accepted) = match outcome {
        Attempt::Accepted { dt_next } => (dt_next, true),
        Attempt::Rejected { dt_next, .. } => (dt_next, false),
    };
    if dt_next < UNDERFLOW * t_final {
        return Err(Error::StiffnessFailure { t: state.t, dt: dt_next });
    }
    let next = if accepted {
        ParticleState::from_vector(state.n, state.t + dt, &stepper.candidate)
    } else {
        state.clone()
    };
    Ok(StepOutcome { state: next, dt_next, accepted })
}

/// Default first step from the viscous coupling scale.
pub fn default_dt_init(model: &FluidModel, state: &ParticleState) -> f64 {
    let (a_est, b_est) = state.scaled_spacing_range(model.length());
    if !(a_est > 0.0 && b_est.is_finite()) {
        return 1e-6;
    }
    let samples = 64;
    let mut k_max: f64 = 0.0;
    for j in 0..=samples {
        let s = a_est + (b_est - a_est) * j as f64 / samples as f64;
        k_max = k_max.max(model.cap_k_prime_unchecked(s));
    }
    let nf = state.n as f64;
    let h = a_est / nf;
    let dt = 0.1 * h * h / (nf * nf * k_max);
    if dt.is_finite() && dt > 0.0 {
        dt.min(1e-3)
    } else {
        1e-6
    }
}

fn snapshot_times(t_final: f64, snapshot_dt: f64) -> Vec<f64> {
    let mut times = Vec::new();
    let mut k = 1usize;
    loop {
        let t = k as f64 * snapshot_dt;
        if t >= t_final * (1.0 - 1e-12) {
            times.push(t_final);
            break;
        }
        times.push(t);
        k += 1;
    }
    times
}

/// Integrates from `state0` to `t_final`, storing snapshots at multiples of
/// `cfg.snapshot_dt` and exactly at `t_final`.
pub fn simulate(model: &FluidModel, state0: &ParticleState, t_final: f64, cfg: &IntegratorConfig) -> Result<SnapshotSeries> {
    cfg.validate()?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter { name: "T", reason: alloc::format!("must be positive and finite, got {t_final}") });
    }
    state0.check_domain(model.length())?;
    let n = state0.n;
    let first = Snapshot { state: state0.clone(), functionals: functionals(model, state0)? };
    let e_slack = MONOTONICITY_SLACK * first.functionals.e_n.max(1.0);
    let w_slack = MONOTONICITY_SLACK * first.functionals.w_n.max(1.0);
    let mut snapshots = vec![first];
    let mut warnings: Vec<MonotonicityWarning> = Vec::new();

    let mut stepper = Stepper::new(model, *cfg, n);
    let mut y = state0.to_vector();
    let mut t = state0.t;
    let mut dt = cfg.dt_init.unwrap_or_else(|| default_dt_init(model, state0)).min(cfg.dt_max);
    let floor = UNDERFLOW * t_final;
    let mut stats = IntegrationStats { min_dt: f64::INFINITY, ..IntegrationStats::default() };

    for target in snapshot_times(t_final, cfg.snapshot_dt).into_iter().map(|s| state0.t + s) {
        while t < target {
            if stats.accepted + stats.rejected >= cfg.max_steps {
                return Err(Error::StepBudgetExhausted { t, steps: stats.accepted + stats.rejected });
            }
            let remaining = target - t;
            // absorb slivers so the snapshot is hit without a tiny extra step
            let hits = dt >= remaining * (1.0 - 1e-10);
            let h = if hits { remaining } else { dt };
            match stepper.attempt(&y, h)? {
                Attempt::Accepted { dt_next } => {
                    y.copy_from_slice(&stepper.candidate);
                    t = if hits { target } else { t + h };
                    stats.accepted += 1;
                    stats.min_dt = stats.min_dt.min(h);
                    stats.max_dt = stats.max_dt.max(h);
                    dt = if hits { dt_next.max(dt).min(cfg.dt_max) } else { dt_next };
                }
                Attempt::Rejected { dt_next, domain } => {
                    stats.rejected += 1;
                    if domain {
                        stats.rejected_domain += 1;
                    }
                    dt = dt_next;
                    if dt < floor {
                        return Err(Error::StiffnessFailure { t, dt });
                    }
                }
            }
        }
        let state = ParticleState::from_vector(n, t, &y);
        let f = functionals(model, &state)?;
        let prev = &snapshots.last().expect("non-empty").functionals;
        let idx = snapshots.len();
        for (q, prev_v, cur_v, slack) in [
            (Monitored::EnergyN, prev.e_n, f.e_n, e_slack),
            (Monitored::ModifiedEnergyN, prev.w_n, f.w_n, w_slack),
        ] {
            if cur_v > prev_v + slack && !warnings.iter().any(|w| w.quantity == q) {
                warnings.push(MonotonicityWarning { quantity: q, snapshot: idx, t, previous: prev_v, current: cur_v, slack });
            }
        }
        snapshots.push(Snapshot { state, functionals: f });
    }
    stats.rhs_evaluations = stepper.rhs_evaluations;
    if stats.accepted == 0 {
        stats.min_dt = 0.0;
    }
    Ok(SnapshotSeries { snapshots, stats, warnings, t_final, snapshot_dt: cfg.snapshot_dt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;

    fn sv() -> FluidModel {
        FluidModel::preset(Preset::SaintVenant { g: 9.81, nu: 1.0 }, 1.0, 1.0).unwrap()
    }

    fn sine_state(n: usize, amp: f64) -> ParticleState {
        let mut s = ParticleState::equilibrium(n, 1.0);
        for (vi, xi) in s.v.iter_mut().zip(&s.x) {
            *vi = amp * (core::f64::consts::PI * xi).sin();
        }
        s
    }

    #[test]
    fn tableau_rows_sum_to_nodes() {
        for s in 0..7 {
            let sum: f64 = A[s].iter().sum();
            assert!((sum - C[s]).abs() < 1e-14, "row {s}");
        }
        assert!(E.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn equilibrium_step_is_fixed_point() {
        let model = sv();
        let s = ParticleState::equilibrium(8, 1.0);
        let out = step(&model, &s, 1e-3, &IntegratorConfig::default(), 1.0).unwrap();
        assert!(out.accepted);
        for (a, b) in out.state.x.iter().zip(&s.x) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(out.state.v.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn collision_step_rejected_and_halved() {
        let model = sv();
        // particle 2 races right towards particle 1
        let s = ParticleState::new(3, 0.0, vec![0.6, 0.3], vec![0.0, 50.0]).unwrap();
        let out = step(&model, &s, 0.1, &IntegratorConfig::default(), 1.0).unwrap();
        assert!(!out.accepted);
        assert!(out.dt_next <= 0.05);
        assert_eq!(out.state, s);
    }

    #[test]
    fn underflow_reports_stiffness() {
        let model = sv();
        let s = ParticleState::new(3, 0.0, vec![0.6, 0.3], vec![0.0, 50.0]).unwrap();
        let err = step(&model, &s, 1e-3, &IntegratorConfig::default(), 1e12).unwrap_err();
        assert!(matches!(err, Error::StiffnessFailure { .. }));
    }

    #[test]
    fn equilibrium_simulation_stays_put() {
        let model = sv();
        let s = ParticleState::equilibrium(16, 1.0);
        let cfg = IntegratorConfig { snapshot_dt: 0.1, ..IntegratorConfig::default() };
        let series = simulate(&model, &s, 1.0, &cfg).unwrap();
        assert_eq!(series.snapshots.len(), 11);
        assert_eq!(series.last().t(), 1.0);
        for snap in &series.snapshots {
            for (a, b) in snap.state.x.iter().zip(&s.x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn snapshot_grid_ends_exactly_at_t_final() {
        let t = snapshot_times(1.0, 0.3);
        assert_eq!(t, vec![0.3, 0.6, 0.8999999999999999, 1.0]);
        let t = snapshot_times(1.0, 0.1);
        assert_eq!(t.len(), 10);
        assert_eq!(*t.last().unwrap(), 1.0);
    }

    #[test]
    fn perturbed_run_decays_and_is_deterministic() {
        let model = sv();
        let s = sine_state(16, 0.1);
        let cfg = IntegratorConfig { snapshot_dt: 0.05, ..IntegratorConfig::default() };
        let a = simulate(&model, &s, 0.5, &cfg).unwrap();
        let b = simulate(&model, &s, 0.5, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.warnings.is_empty(), "{:?}", a.warnings);
        let e0 = a.snapshots[0].functionals.e_n;
        assert!(a.last().functionals.e_n < e0);
        for snap in &a.snapshots {
            snap.state.check_domain(1.0).unwrap();
        }
    }

    #[test]
    fn error_shrinks_with_tolerance() {
        let model = sv();
        let s = ParticleState::new(2, 0.0, vec![0.4], vec![0.0]).unwrap();
        let run = |rel: f64| {
            let cfg = IntegratorConfig { rel_tol: rel, abs_tol: rel * 1e-2, snapshot_dt: 0.1, ..IntegratorConfig::default() };
            simulate(&model, &s, 0.1, &cfg).unwrap().last().state.clone()
        };
        let reference = run(1e-12);
        let dist = |r: &ParticleState| (r.x[0] - reference.x[0]).abs() + (r.v[0] - reference.v[0]).abs();
        let coarse = dist(&run(1e-5));
        let fine = dist(&run(1e-7));
        assert!(fine < coarse, "{fine} vs {coarse}");
        assert!(coarse < 1e-3);
    }

    #[test]
    fn config_validation() {
        let bad = IntegratorConfig { rel_tol: 0.0, ..IntegratorConfig::default() };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig { snapshot_dt: -1.0, ..IntegratorConfig::default() };
        assert!(bad.validate().is_err());
        let model = sv();
        let s = ParticleState::equilibrium(4, 1.0);
        assert!(simulate(&model, &s, 0.0, &IntegratorConfig::default()).is_err());
    }
}
