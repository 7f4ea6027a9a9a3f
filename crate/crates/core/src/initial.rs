//! Initial data, equal-mass particle placement and the admissibility verdict.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::model::{EnvelopeLimits, FluidModel};
use crate::particles::{spacing_bounds, ParticleState, SpacingBounds};
use crate::{fmath, Error, Result};

/// Relative tolerance on `∫ρ₀ = m`.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Sample count for `M̄ = max K'`.
pub const M_BAR_SAMPLES: usize = 10_000;

/// Initial density `ρ₀` on `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityProfile {
    Constant(f64),
    /// Linear interpolation through `(x, rho)`; `x` runs from 0 to `L`.
    Table { x: Vec<f64>, rho: Vec<f64> },
    /// `mean + amplitude·cos(mode·πx/L)`.
    Cosine { mean: f64, amplitude: f64, mode: u32 },
}

/// Initial velocity `v₀` on `[0, L]`, vanishing at both walls.
#[derive(Debug, Clone, PartialEq)]
pub enum VelocityProfile {
    Zero,
    /// `amplitude·sin(mode·πx/L)`.
    Sine { amplitude: f64, mode: u32 },
    /// Linear interpolation through `(x, v)`; `v` must be 0 at both ends.
    Table { x: Vec<f64>, v: Vec<f64> },
}

/// Norms of the initial data used by the a priori constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialNorms {
    pub rho_sup: f64,
    pub rho_deriv_sup: f64,
    pub rho_min: f64,
    /// `‖v₀'‖₂`.
    pub v_deriv_l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub rho0: DensityProfile,
    pub v0: VelocityProfile,
    pub length: f64,
    /// Computed exactly from the profiles by [`InitialData::new`]; may be
    /// replaced by caller-supplied values.
    pub norms: InitialNorms,
}

/// The a priori constants `Ē, W̄, Z̄, Ā, M̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem32Constants {
    pub e_bar: f64,
    pub w_bar: f64,
    pub z_bar: f64,
    pub a_bar: f64,
    pub m_bar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub constants: Theorem32Constants,
    pub rho_min: f64,
    pub limits: EnvelopeLimits,
    /// `√W̄ + √Ē`.
    pub lhs: f64,
    pub admissible: bool,
    /// Present exactly when admissible.
    pub bounds: Option<SpacingBounds>,
}

fn check_table(name: &'static str, x: &[f64], y: &[f64], length: f64) -> Result<()> {
    if x.len() < 2 || x.len() != y.len() {
        return Err(Error::InvalidParameter { name, reason: "table needs at least two points and matching lengths".into() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter { name, reason: "table entries must be finite".into() });
    }
    if x[0] != 0.0 || (x[x.len() - 1] - length).abs() > 1e-12 * length {
        return Err(Error::InvalidParameter { name, reason: format!("table must span [0, {length}]") });
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter { name, reason: "table abscissae must be strictly increasing".into() });
    }
    Ok(())
}

/// Index `j` with `x[j] ≤ q ≤ x[j + 1]`.
fn segment(x: &[f64], q: f64) -> usize {
    let j = x.partition_point(|&v| v <= q);
    j.clamp(1, x.len() - 1) - 1
}

fn interp(x: &[f64], y: &[f64], q: f64) -> f64 {
    let j = segment(x, q);
    let h = x[j + 1] - x[j];
    y[j] + (y[j + 1] - y[j]) * (q - x[j]) / h
}

impl DensityProfile {
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            DensityProfile::Constant(c) => *c,
            DensityProfile::Table { x: xs, rho } => interp(xs, rho, x),
            DensityProfile::Cosine { mean, amplitude, mode } => {
                mean + amplitude * fmath::cos(*mode as f64 * PI * x / length)
            }
        }
    }

    /// Exact cumulative mass `∫₀ˣ ρ₀`.
    pub fn cumulative_mass(&self, x: f64, length: f64) -> f64 {
        match self {
            DensityProfile::Constant(c) => c * x,
            DensityProfile::Table { x: xs, rho } => {
                let j = segment(xs, x);
                let mut acc = 0.0;
                for k in 0..j {
                    acc += 0.5 * (rho[k] + rho[k + 1]) * (xs[k + 1] - xs[k]);
                }
                let r = interp(xs, rho, x);
                acc + 0.5 * (rho[j] + r) * (x - xs[j])
            }
            DensityProfile::Cosine { mean, amplitude, mode } => {
                let w = *mode as f64 * PI / length;
                mean * x + amplitude * fmath::sin(w * x) / w
            }
        }
    }

    fn validate(&self, length: f64) -> Result<()> {
        match self {
            DensityProfile::Constant(c) => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::InvalidParameter { name: "rho0", reason: format!("constant density must be positive, got {c}") });
                }
            }
            DensityProfile::Table { x, rho } => {
                check_table("rho0", x, rho, length)?;
                if let Some(v) = rho.iter().find(|&&r| r < 0.0) {
                    return Err(Error::InvalidParameter { name: "rho0", reason: format!("negative density sample {v}") });
                }
            }
            DensityProfile::Cosine { mean, amplitude, mode } => {
                if *mode == 0 || !mean.is_finite() || !amplitude.is_finite() || mean - amplitude.abs() < 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "rho0",
                        reason: "cosine profile needs mode >= 1 and mean >= |amplitude|".into(),
                    });
                }
            }
        }
        Ok(())
    }

    fn norms(&self, length: f64) -> (f64, f64, f64) {
        match self {
            DensityProfile::Constant(c) => (*c, 0.0, *c),
            DensityProfile::Table { x, rho } => {
                let sup = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
                let slope = (0..x.len() - 1)
                    .map(|k| ((rho[k + 1] - rho[k]) / (x[k + 1] - x[k])).abs())
                    .fold(0.0, f64::max);
                (sup, slope, min)
            }
            DensityProfile::Cosine { mean, amplitude, mode } => {
                let a = amplitude.abs();
                (mean + a, a * *mode as f64 * PI / length, mean - a)
            }
        }
    }
}

impl VelocityProfile {
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            VelocityProfile::Zero => 0.0,
            VelocityProfile::Sine { amplitude, mode } => {
                if x <= 0.0 || x >= length {
                    0.0
                } else {
                    amplitude * fmath::sin(*mode as f64 * PI * x / length)
                }
            }
            VelocityProfile::Table { x: xs, v } => interp(xs, v, x),
        }
    }

    fn validate(&self, length: f64) -> Result<()> {
        match self {
            VelocityProfile::Zero => Ok(()),
            VelocityProfile::Sine { amplitude, mode } => {
                if *mode == 0 || !amplitude.is_finite() {
                    return Err(Error::InvalidParameter { name: "v0", reason: "sine profile needs mode >= 1 and finite amplitude".into() });
                }
                Ok(())
            }
            VelocityProfile::Table { x, v } => {
                check_table("v0", x, v, length)?;
                if v[0] != 0.0 || v[v.len() - 1] != 0.0 {
                    return Err(Error::InvalidParameter { name: "v0", reason: "velocity must vanish at both walls".into() });
                }
                Ok(())
            }
        }
    }

    fn deriv_l2(&self, length: f64) -> f64 {
        match self {
            VelocityProfile::Zero => 0.0,
            VelocityProfile::Sine { amplitude, mode } => {
                let w = *mode as f64 * PI / length;
                fmath::sqrt(amplitude * amplitude * w * w * length / 2.0)
            }
            VelocityProfile::Table { x, v } => {
                let mut acc = 0.0;
                for k in 0..x.len() - 1 {
                    let h = x[k + 1] - x[k];
                    let s = (v[k + 1] - v[k]) / h;
                    acc += s * s * h;
                }
                fmath::sqrt(acc)
            }
        }
    }
}

impl InitialData {
    /// Validates the profiles and computes their norms exactly.
    pub fn new(rho0: DensityProfile, v0: VelocityProfile, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::NonPositiveArgument { name: "L", value: length });
        }
        rho0.validate(length)?;
        v0.validate(length)?;
        let (rho_sup, rho_deriv_sup, rho_min) = rho0.norms(length);
        let norms = InitialNorms { rho_sup, rho_deriv_sup, rho_min, v_deriv_l2: v0.deriv_l2(length) };
        Ok(InitialData { rho0, v0, length, norms })
    }

    /// Constant density `m/L` at rest.
    pub fn equilibrium(model: &FluidModel) -> Self {
        InitialData::new(DensityProfile::Constant(model.rho_star()), VelocityProfile::Zero, model.length())
            .expect("equilibrium data is valid")
    }

    pub fn total_mass(&self) -> f64 {
        self.rho0.cumulative_mass(self.length, self.length)
    }

    pub fn rho(&self, x: f64) -> f64 {
        self.rho0.eval(x, self.length)
    }

    pub fn v(&self, x: f64) -> f64 {
        self.v0.eval(x, self.length)
    }

    /// Checks that the data lives on the model's interval and carries its mass.
    pub fn check_against(&self, model: &FluidModel) -> Result<()> {
        if (self.length - model.length()).abs() > 1e-12 * model.length() {
            return Err(Error::InvalidParameter {
                name: "L",
                reason: format!("initial data length {} differs from model length {}", self.length, model.length()),
            });
        }
        let mass = self.total_mass();
        if (mass - model.mass()).abs() > NORMALIZATION_TOL * model.mass() {
            return Err(Error::NotNormalized { expected: model.mass(), actual: mass });
        }
        Ok(())
    }
}

/// Places `n` equal-mass cells: `xᵢ` solves `∫₀^{xᵢ} ρ₀ = m(n − i)/n`.
pub fn build_particles(model: &FluidModel, init: &InitialData, n: usize) -> Result<ParticleState> {
    if n < 2 {
        return Err(Error::InvalidParameter { name: "n", reason: format!("at least 2 particles are required, got {n}") });
    }
    init.check_against(model)?;
    let length = model.length();
    let total = init.total_mass();
    let mut x = Vec::with_capacity(n - 1);
    let mut hi = length;
    for i in 1..n {
        let target = total * (n - i) as f64 / n as f64;
        let mut lo = 0.0;
        let mut top = hi;
        // run past the required tolerance down to adjacent floats
        loop {
            let mid = 0.5 * (lo + top);
            if mid <= lo || mid >= top {
                break;
            }
            if init.rho0.cumulative_mass(mid, length) < target {
                lo = mid;
            } else {
                top = mid;
            }
        }
        let xi = 0.5 * (lo + top);
        x.push(xi);
        hi = xi;
    }
    let v = x.iter().map(|&xi| init.v(xi)).collect();
    let state = ParticleState::new(n, 0.0, x, v)?;
    state.check_domain(length)?;
    Ok(state)
}

/// Computes `Ē, W̄, Z̄, Ā` and `M̄ = max K'` on `[m/‖ρ₀‖∞, m/ρ_min]`.
pub fn theorem32_constants(model: &FluidModel, init: &InitialData) -> Result<Theorem32Constants> {
    init.check_against(model)?;
    let InitialNorms { rho_sup, rho_deriv_sup, rho_min, v_deriv_l2 } = init.norms;
    if !(rho_min > 0.0) {
        return Err(Error::InvalidParameter { name: "rho0", reason: format!("minimum density must be positive, got {rho_min}") });
    }
    let m = model.mass();
    let length = model.length();
    let (s_lo, s_hi) = (m / rho_sup, m / rho_min);
    let mut m_bar: f64 = 0.0;
    for j in 0..M_BAR_SAMPLES {
        let s = if M_BAR_SAMPLES == 1 { s_lo } else { s_lo + (s_hi - s_lo) * j as f64 / (M_BAR_SAMPLES - 1) as f64 };
        m_bar = m_bar.max(model.cap_k_prime(s)?);
    }
    let v2 = v_deriv_l2 * v_deriv_l2;
    let phi = model.phi(s_lo)?.max(0.0);
    let e_bar = 0.5 * m * length * v2 + m * phi;
    let z_bar = 0.5 * v2;
    let r3 = rho_min * rho_min * rho_min;
    let a_bar = 2.0 * m * m * m_bar * rho_deriv_sup / r3;
    let m5 = m * m * m * m * m;
    let w_bar = m * length * v2 + 2.0 * m5 * m_bar * m_bar * rho_deriv_sup * rho_deriv_sup / (r3 * r3) + m * phi;
    Ok(Theorem32Constants { e_bar, w_bar, z_bar, a_bar, m_bar })
}

/// Compares `√W̄ + √Ē` with the limits of `F`.
pub fn admissibility(model: &FluidModel, init: &InitialData) -> Result<AdmissibilityReport> {
    let constants = theorem32_constants(model, init)?;
    let limits = model.f_envelope_limits()?;
    let lhs = fmath::sqrt(constants.w_bar) + fmath::sqrt(constants.e_bar);
    let admissible = lhs < limits.min();
    let bounds = if admissible { Some(spacing_bounds(model, constants.e_bar, constants.w_bar)?) } else { None };
    Ok(AdmissibilityReport { constants, rho_min: init.norms.rho_min, limits, lhs, admissible, bounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;
    use crate::particles::functionals;

    fn sv() -> FluidModel {
        FluidModel::preset(Preset::SaintVenant { g: 9.81, nu: 1.0 }, 1.0, 1.0).unwrap()
    }

    fn sine(amp: f64) -> InitialData {
        InitialData::new(DensityProfile::Constant(1.0), VelocityProfile::Sine { amplitude: amp, mode: 1 }, 1.0).unwrap()
    }

    #[test]
    fn uniform_partition() {
        let s = build_particles(&sv(), &sine(0.0), 5).unwrap();
        for (i, xi) in s.x.iter().enumerate() {
            assert!((xi - (4 - i) as f64 / 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_density_partition() {
        let init = InitialData::new(
            DensityProfile::Table { x: vec![0.0, 1.0], rho: vec![0.0, 2.0] },
            VelocityProfile::Zero,
            1.0,
        )
        .unwrap();
        let s = build_particles(&sv(), &init, 2).unwrap();
        assert!((s.x[0] - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-11);
    }

    #[test]
    fn sine_velocity_sampled_at_nodes() {
        let s = build_particles(&sv(), &sine(1.0), 4).unwrap();
        let expect = [(3.0 * PI / 4.0).sin(), 1.0, (PI / 4.0).sin()];
        for (a, b) in s.v.iter().zip(expect) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn cosine_partition_is_mass_exact() {
        let init = InitialData::new(DensityProfile::Cosine { mean: 1.0, amplitude: 0.3, mode: 1 }, VelocityProfile::Zero, 1.0).unwrap();
        let n = 37;
        let s = build_particles(&sv(), &init, n).unwrap();
        for i in 1..=n {
            let cell = init.rho0.cumulative_mass(s.position(i - 1, 1.0), 1.0) - init.rho0.cumulative_mass(s.position(i, 1.0), 1.0);
            assert!((cell - 1.0 / n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn refinement_interleaves() {
        let init = InitialData::new(DensityProfile::Cosine { mean: 1.0, amplitude: 0.5, mode: 2 }, VelocityProfile::Zero, 1.0).unwrap();
        let a = build_particles(&sv(), &init, 8).unwrap();
        let b = build_particles(&sv(), &init, 16).unwrap();
        for (i, xi) in a.x.iter().enumerate() {
            assert!((b.x[2 * i + 1] - xi).abs() < 1e-11);
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(InitialData::new(DensityProfile::Constant(-1.0), VelocityProfile::Zero, 1.0).is_err());
        let bad_v = VelocityProfile::Table { x: vec![0.0, 0.5, 1.0], v: vec![0.0, 1.0, 0.1] };
        assert!(InitialData::new(DensityProfile::Constant(1.0), bad_v, 1.0).is_err());
        let neg = DensityProfile::Table { x: vec![0.0, 0.5, 1.0], rho: vec![1.0, -0.1, 2.1] };
        assert!(InitialData::new(neg, VelocityProfile::Zero, 1.0).is_err());
        let heavy = InitialData::new(DensityProfile::Constant(2.0), VelocityProfile::Zero, 1.0).unwrap();
        assert!(matches!(build_particles(&sv(), &heavy, 4), Err(Error::NotNormalized { .. })));
        assert!(build_particles(&sv(), &sine(0.1), 1).is_err());
    }

    #[test]
    fn equilibrium_constants_vanish() {
        let model = sv();
        let c = theorem32_constants(&model, &InitialData::equilibrium(&model)).unwrap();
        assert_eq!((c.e_bar, c.w_bar, c.z_bar, c.a_bar), (0.0, 0.0, 0.0, 0.0));
        assert!((c.m_bar - 1.0).abs() < 1e-14);
        let r = admissibility(&model, &InitialData::equilibrium(&model)).unwrap();
        assert!(r.admissible && r.lhs == 0.0);
        let b = r.bounds.unwrap();
        assert_eq!((b.a, b.b), (1.0, 1.0));
    }

    #[test]
    fn z_bar_from_sine() {
        let c = theorem32_constants(&sv(), &sine(0.1)).unwrap();
        let expected = 0.5 * (0.1 * PI) * (0.1 * PI) / 2.0;
        assert!((c.z_bar - expected).abs() < 1e-15);
        assert!((c.z_bar - 0.024674).abs() < 1e-6);
    }

    #[test]
    fn verdicts() {
        assert!(admissibility(&sv(), &sine(0.01)).unwrap().admissible);
        let r = admissibility(&sv(), &sine(10.0)).unwrap();
        assert!(!r.admissible && r.bounds.is_none() && r.lhs > r.limits.min());
        let gas = FluidModel::preset(Preset::IdealGasEntropy { c: 1.0, gamma: 1.4, a: 1.0 }, 1.0, 1.0).unwrap();
        assert!(admissibility(&gas, &sine(10.0)).unwrap().admissible);
    }

    #[test]
    fn initial_conditions_bounded_by_constants() {
        let model = sv();
        let init = InitialData::new(
            DensityProfile::Cosine { mean: 1.0, amplitude: 0.2, mode: 1 },
            VelocityProfile::Sine { amplitude: 0.3, mode: 2 },
            1.0,
        )
        .unwrap();
        let c = theorem32_constants(&model, &init).unwrap();
        for n in [2, 3, 5, 16, 64, 256] {
            let s = build_particles(&model, &init, n).unwrap();
            let f = functionals(&model, &s).unwrap();
            assert!(f.e_n <= c.e_bar, "n={n}");
            assert!(f.w_n <= c.w_bar, "n={n}");
            assert!(f.z_n <= c.z_bar, "n={n}");
            assert!(f.h_n <= c.a_bar, "n={n}");
        }
    }
}
