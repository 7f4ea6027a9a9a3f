//! Constitutive laws `P(ρ)`, `μ(ρ)` and every function derived from them.
//!
//! Preset models (isentropic gas, ideal gas at constant entropy, viscous
//! Saint-Venant) are all power laws `P = cρ^γ`, `μ = Aρ^η`, for which the
//! derived integrals have closed forms. Custom laws go through adaptive
//! quadrature in the logarithm of the density. The quadrature path stays
//! available for presets (`*_quadrature` methods) as a cross-check.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::fmath;
use crate::{Error, Result};

mod derived;
mod envelope;

pub use envelope::{AssumptionReport, EnvelopeLimits, FComponents};

/// Which family a [`FluidModel`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    IsentropicGas,
    IdealGasEntropy,
    SaintVenant,
    Custom,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::IsentropicGas => "isentropic_gas",
            ModelKind::IdealGasEntropy => "ideal_gas_entropy",
            ModelKind::SaintVenant => "saint_venant",
            ModelKind::Custom => "custom",
        }
    }
}

/// Preset parameters accepted by [`FluidModel::preset`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `P = cρ^γ` with `γ > 1`, viscosity `μ = μ₀ρ^η`.
    IsentropicGas { c: f64, gamma: f64, mu0: f64, eta: f64 },
    /// `P = cρ^γ` with `γ ∈ (1, 2)` and `μ = Aρ^((γ−1)/2)`.
    IdealGasEntropy { c: f64, gamma: f64, a: f64 },
    /// Shallow water: `P = gρ²/2`, `μ = νρ`.
    SaintVenant { g: f64, nu: f64 },
}

/// `coef · ρ^exponent` together with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub coef: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub const fn new(coef: f64, exponent: f64) -> Self {
        PowerLaw { coef, exponent }
    }

    #[inline]
    pub fn value(&self, rho: f64) -> f64 {
        match self.exponent {
            0.0 => self.coef,
            1.0 => self.coef * rho,
            2.0 => self.coef * rho * rho,
            e => self.coef * fmath::powf(rho, e),
        }
    }

    #[inline]
    pub fn prime(&self, rho: f64) -> f64 {
        let e = self.exponent;
        if e == 0.0 {
            0.0
        } else if e == 1.0 {
            self.coef
        } else if e == 2.0 {
            2.0 * self.coef * rho
        } else {
            self.coef * e * fmath::powf(rho, e - 1.0)
        }
    }

    #[inline]
    pub fn second(&self, rho: f64) -> f64 {
        let e = self.exponent;
        if e == 0.0 || e == 1.0 {
            0.0
        } else if e == 2.0 {
            2.0 * self.coef
        } else {
            self.coef * e * (e - 1.0) * fmath::powf(rho, e - 2.0)
        }
    }
}

/// User-supplied pressure and viscosity laws.
///
/// Implementations must be `C²` on `(0, ∞)` with `P' > 0` and `μ > 0`.
pub trait ConstitutiveLaw: Send + Sync + fmt::Debug {
    fn pressure(&self, rho: f64) -> f64;
    fn pressure_prime(&self, rho: f64) -> f64;
    fn pressure_second(&self, rho: f64) -> f64;
    fn viscosity(&self, rho: f64) -> f64;
    fn viscosity_prime(&self, rho: f64) -> f64;
    fn viscosity_second(&self, rho: f64) -> f64;
}

/// Power-law pressure and viscosity, usable as a custom law (no closed forms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaws {
    pub pressure: PowerLaw,
    pub viscosity: PowerLaw,
}

impl ConstitutiveLaw for PowerLaws {
    fn pressure(&self, rho: f64) -> f64 {
        self.pressure.value(rho)
    }
    fn pressure_prime(&self, rho: f64) -> f64 {
        self.pressure.prime(rho)
    }
    fn pressure_second(&self, rho: f64) -> f64 {
        self.pressure.second(rho)
    }
    fn viscosity(&self, rho: f64) -> f64 {
        self.viscosity.value(rho)
    }
    fn viscosity_prime(&self, rho: f64) -> f64 {
        self.viscosity.prime(rho)
    }
    fn viscosity_second(&self, rho: f64) -> f64 {
        self.viscosity.second(rho)
    }
}

#[derive(Clone)]
enum Laws {
    Closed(PowerLaws),
    Dynamic(Arc<dyn ConstitutiveLaw>),
}

impl fmt::Debug for Laws {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Laws::Closed(p) => f.debug_tuple("Closed").field(p).finish(),
            Laws::Dynamic(d) => f.debug_tuple("Dynamic").field(d).finish(),
        }
    }
}

/// Evaluation settings for the derived integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFunctionTable {
    /// Relative tolerance of the adaptive quadrature.
    pub quad_rel_tol: f64,
    /// Absolute tolerance of the adaptive quadrature.
    pub quad_abs_tol: f64,
    /// Decimal exponents `k` of the probe grid `ρ*·10^k`.
    pub probe_exponents: Vec<i32>,
    /// Relative tolerance on `ρ` when inverting `F`.
    pub inverse_rel_tol: f64,
}

impl Default for DerivedFunctionTable {
    fn default() -> Self {
        DerivedFunctionTable {
            quad_rel_tol: 1e-10,
            quad_abs_tol: 1e-14,
            probe_exponents: (-6..=6).collect(),
            inverse_rel_tol: 1e-10,
        }
    }
}

/// A barotropic fluid between walls at `x = 0` and `x = L` with total mass `m`.
#[derive(Debug, Clone)]
pub struct FluidModel {
    kind: ModelKind,
    preset: Option<Preset>,
    laws: Laws,
    m: f64,
    length: f64,
    rho_star: f64,
    pub table: DerivedFunctionTable,
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter { name, reason: "must be positive and finite".to_string() })
    }
}

impl FluidModel {
    /// Builds a preset model with closed-form derived functions.
    pub fn preset(preset: Preset, m: f64, length: f64) -> Result<Self> {
        positive("m", m)?;
        positive("L", length)?;
        let (kind, laws) = match preset {
            Preset::IsentropicGas { c, gamma, mu0, eta } => {
                positive("c", c)?;
                positive("mu0", mu0)?;
                if !(gamma > 1.0 && gamma.is_finite()) {
                    return Err(Error::InvalidParameter { name: "gamma", reason: "must satisfy gamma > 1".to_string() });
                }
                if !eta.is_finite() {
                    return Err(Error::InvalidParameter { name: "eta", reason: "must be finite".to_string() });
                }
                (
                    ModelKind::IsentropicGas,
                    PowerLaws { pressure: PowerLaw::new(c, gamma), viscosity: PowerLaw::new(mu0, eta) },
                )
            }
            Preset::IdealGasEntropy { c, gamma, a } => {
                positive("c", c)?;
                positive("A", a)?;
                if !(gamma > 1.0 && gamma < 2.0) {
                    return Err(Error::InvalidParameter {
                        name: "gamma",
                        reason: "ideal gas at constant entropy needs 1 < gamma < 2".to_string(),
                    });
                }
                (
                    ModelKind::IdealGasEntropy,
                    PowerLaws { pressure: PowerLaw::new(c, gamma), viscosity: PowerLaw::new(a, 0.5 * (gamma - 1.0)) },
                )
            }
            Preset::SaintVenant { g, nu } => {
                positive("g", g)?;
                positive("nu", nu)?;
                (
                    ModelKind::SaintVenant,
                    PowerLaws { pressure: PowerLaw::new(0.5 * g, 2.0), viscosity: PowerLaw::new(nu, 1.0) },
                )
            }
        };
        Ok(FluidModel {
            kind,
            preset: Some(preset),
            laws: Laws::Closed(laws),
            m,
            length,
            rho_star: m / length,
            table: DerivedFunctionTable::default(),
        })
    }

    /// Builds a model from arbitrary laws; derived functions use quadrature.
    ///
    /// Rejects laws whose `P'` or `μ` is not positive on the probe grid.
    pub fn custom(law: Arc<dyn ConstitutiveLaw>, m: f64, length: f64) -> Result<Self> {
        positive("m", m)?;
        positive("L", length)?;
        let model = FluidModel {
            kind: ModelKind::Custom,
            preset: None,
            laws: Laws::Dynamic(law),
            m,
            length,
            rho_star: m / length,
            table: DerivedFunctionTable::default(),
        };
        for rho in model.probe_grid() {
            let dp = model.pressure_prime(rho);
            if !(dp > 0.0 && dp.is_finite()) {
                return Err(Error::InvalidParameter { name: "pressure", reason: "P'(rho) must be positive".to_string() });
            }
            let p = model.pressure(rho);
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidParameter { name: "pressure", reason: "P(rho) must be positive".to_string() });
            }
            let mu = model.viscosity(rho);
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::InvalidParameter { name: "viscosity", reason: "mu(rho) must be positive".to_string() });
            }
        }
        Ok(model)
    }

    /// Convenience constructor for custom power laws.
    pub fn custom_power(pressure: PowerLaw, viscosity: PowerLaw, m: f64, length: f64) -> Result<Self> {
        Self::custom(Arc::new(PowerLaws { pressure, viscosity }), m, length)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn preset_params(&self) -> Option<Preset> {
        self.preset
    }

    /// Total mass `m`.
    pub fn mass(&self) -> f64 {
        self.m
    }

    /// Domain length `L`.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Equilibrium density `ρ* = m/L`.
    pub fn rho_star(&self) -> f64 {
        self.rho_star
    }

    /// Whether the derived functions are evaluated from closed forms.
    pub fn has_closed_forms(&self) -> bool {
        matches!(self.laws, Laws::Closed(_))
    }

    pub(crate) fn power_laws(&self) -> Option<&PowerLaws> {
        match &self.laws {
            Laws::Closed(p) => Some(p),
            Laws::Dynamic(_) => None,
        }
    }

    /// Geometric probe grid `ρ*·10^k`.
    pub fn probe_grid(&self) -> Vec<f64> {
        self.table.probe_exponents.iter().map(|&k| self.rho_star * fmath::powf(10.0, k as f64)).collect()
    }

    #[inline]
    pub fn pressure(&self, rho: f64) -> f64 {
        match &self.laws {
            Laws::Closed(p) => p.pressure.value(rho),
            Laws::Dynamic(d) => d.pressure(rho),
        }
    }

    #[inline]
    pub fn pressure_prime(&self, rho: f64) -> f64 {
        match &self.laws {
            Laws::Closed(p) => p.pressure.prime(rho),
            Laws::Dynamic(d) => d.pressure_prime(rho),
        }
    }

    #[inline]
    pub fn pressure_second(&self, rho: f64) -> f64 {
        match &self.laws {
            Laws::Closed(p) => p.pressure.second(rho),
            Laws::Dynamic(d) => d.pressure_second(rho),
        }
    }

    #[inline]
    pub fn viscosity(&self, rho: f64) -> f64 {
        match &self.laws {
            Laws::Closed(p) => p.viscosity.value(rho),
            Laws::Dynamic(d) => d.viscosity(rho),
        }
    }

    #[inline]
    pub fn viscosity_prime(&self, rho: f64) -> f64 {
        match &self.laws {
            Laws::Closed(p) => p.viscosity.prime(rho),
            Laws::Dynamic(d) => d.viscosity_prime(rho),
        }
    }

    #[inline]
    pub fn viscosity_second(&self, rho: f64) -> f64 {
        match &self.laws {
            Laws::Closed(p) => p.viscosity.second(rho),
            Laws::Dynamic(d) => d.viscosity_second(rho),
        }
    }
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveArgument { name, value: v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv() -> FluidModel {
        FluidModel::preset(Preset::SaintVenant { g: 9.81, nu: 1.0 }, 1.0, 1.0).unwrap()
    }

    #[test]
    fn saint_venant_substitution() {
        let m = sv();
        assert_eq!(m.pressure(2.0), 19.62);
        assert_eq!(m.viscosity(2.0), 2.0);
        assert_eq!(m.rho_star(), 1.0);
    }

    #[test]
    fn isentropic_at_unit_density() {
        let m = FluidModel::preset(Preset::IsentropicGas { c: 1.0, gamma: 1.4, mu0: 1.0, eta: 0.0 }, 1.0, 1.0).unwrap();
        assert!((m.pressure(1.0) - 1.0).abs() < 1e-15);
        assert!((m.pressure_prime(1.0) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn preset_parameter_errors() {
        assert!(FluidModel::preset(Preset::IdealGasEntropy { c: 1.0, gamma: 2.5, a: 1.0 }, 1.0, 1.0).is_err());
        assert!(FluidModel::preset(Preset::IsentropicGas { c: 1.0, gamma: 1.0, mu0: 1.0, eta: 0.0 }, 1.0, 1.0).is_err());
        assert!(FluidModel::preset(Preset::SaintVenant { g: 0.0, nu: 1.0 }, 1.0, 1.0).is_err());
        assert!(FluidModel::preset(Preset::SaintVenant { g: 1.0, nu: -1.0 }, 1.0, 1.0).is_err());
        assert!(FluidModel::preset(Preset::SaintVenant { g: 1.0, nu: 1.0 }, 0.0, 1.0).is_err());
        assert!(FluidModel::preset(Preset::SaintVenant { g: 1.0, nu: 1.0 }, 1.0, -2.0).is_err());
        assert!(FluidModel::preset(Preset::IdealGasEntropy { c: 1.0, gamma: 1.4, a: 0.0 }, 1.0, 1.0).is_err());
    }

    #[test]
    fn rho_star_is_mass_over_length() {
        let m = FluidModel::preset(Preset::SaintVenant { g: 1.0, nu: 1.0 }, 3.0, 7.0).unwrap();
        assert_eq!(m.rho_star(), 3.0 / 7.0);
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        let models = [
            sv(),
            FluidModel::preset(Preset::IsentropicGas { c: 2.0, gamma: 1.4, mu0: 0.5, eta: 0.3 }, 1.0, 2.0).unwrap(),
            FluidModel::preset(Preset::IdealGasEntropy { c: 1.0, gamma: 1.4, a: 1.0 }, 1.0, 1.0).unwrap(),
        ];
        for model in &models {
            for rho in [0.01, 0.3, 1.0, 2.5, 40.0] {
                let h = 1e-5 * rho;
                let fd = |f: &dyn Fn(f64) -> f64| (f(rho + h) - f(rho - h)) / (2.0 * h);
                let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
                assert!(rel(fd(&|r| model.pressure(r)), model.pressure_prime(rho)) < 1e-6);
                assert!(rel(fd(&|r| model.pressure_prime(r)), model.pressure_second(rho)) < 1e-6);
                assert!(rel(fd(&|r| model.viscosity(r)), model.viscosity_prime(rho)) < 1e-6 || model.viscosity_prime(rho) == 0.0);
                let vs = model.viscosity_second(rho);
                if vs != 0.0 {
                    assert!(rel(fd(&|r| model.viscosity_prime(r)), vs) < 1e-6);
                }
            }
        }
    }

    #[test]
    fn custom_rejects_decreasing_pressure() {
        let err = FluidModel::custom_power(PowerLaw::new(-1.0, 2.0), PowerLaw::new(1.0, 0.0), 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "pressure", .. }));
        assert!(FluidModel::custom_power(PowerLaw::new(1.0, 2.0), PowerLaw::new(0.0, 1.0), 1.0, 1.0).is_err());
    }
}
