//! `k`, `Q`, `Φ`, `K` and their derivatives.
//!
//! Closed forms for `P = cρ^γ`, `μ = Aρ^η` (with `r = ρ/ρ*`):
//!
//! ```text
//! k(ρ)  = A ∫_{ρ*}^{ρ} τ^{η−1} dτ
//! Φ(x)  = c ∫_{ρ*}^{m/x} τ^{γ−2} dτ
//! Q(ρ)  = c ρ*^γ (r^γ − 1 − γ(r − 1)) / (γ − 1)
//! F₂(ρ) = A ∫_{ρ*}^{ρ} τ^{η−3/2} dτ
//! ```
//!
//! where `∫_{a}^{b} τ^{e−1} dτ = a^e·expm1(e·ln(b/a))/e`, or `ln(b/a)` at `e = 0`.
//! Quadrature runs in `u = ln s` so integrands stay smooth across decades.

use crate::fmath;
use crate::quadrature::{adaptive, Quad, QuadTol};
use crate::Result;

use super::{check_positive, FluidModel};

/// `∫_{from}^{to} τ^{e−1} dτ`.
pub(crate) fn power_integral(to: f64, from: f64, e: f64) -> f64 {
    let lr = fmath::ln(to / from);
    if e == 0.0 {
        lr
    } else {
        fmath::powf(from, e) * libm::expm1(e * lr) / e
    }
}

fn finite(what: &'static str, at: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(crate::Error::Divergent { what, at })
    }
}

impl FluidModel {
    pub(crate) fn quad_tol(&self) -> QuadTol {
        QuadTol { rel: self.table.quad_rel_tol, abs: self.table.quad_abs_tol, ..QuadTol::default() }
    }

    /// `k(ρ) = ∫_{ρ*}^{ρ} μ(τ)/τ dτ`.
    pub fn small_k(&self, rho: f64) -> Result<f64> {
        check_positive("rho", rho)?;
        match self.power_laws() {
            Some(p) => finite("k", rho, p.viscosity.coef * power_integral(rho, self.rho_star, p.viscosity.exponent)),
            None => Ok(self.small_k_quadrature(rho)?.value),
        }
    }

    pub fn small_k_quadrature(&self, rho: f64) -> Result<Quad> {
        check_positive("rho", rho)?;
        adaptive(|u| self.viscosity(fmath::exp(u)), fmath::ln(self.rho_star), fmath::ln(rho), self.quad_tol())
    }

    /// `∫_{ρ*}^{ρ} P(s)/s² ds`, the integral probed by Assumption (A).
    pub fn pressure_integral(&self, rho: f64) -> Result<f64> {
        check_positive("rho", rho)?;
        match self.power_laws() {
            Some(p) => finite(
                "pressure integral",
                rho,
                p.pressure.coef * power_integral(rho, self.rho_star, p.pressure.exponent - 1.0),
            ),
            None => Ok(self.pressure_integral_quadrature(rho)?.value),
        }
    }

    pub fn pressure_integral_quadrature(&self, rho: f64) -> Result<Quad> {
        check_positive("rho", rho)?;
        adaptive(
            |u| {
                let s = fmath::exp(u);
                self.pressure(s) / s
            },
            fmath::ln(self.rho_star),
            fmath::ln(rho),
            self.quad_tol(),
        )
    }

    /// Potential-energy density `Q(ρ) ≥ 0`, zero only at `ρ*`.
    pub fn q_potential(&self, rho: f64) -> Result<f64> {
        check_positive("rho", rho)?;
        match self.power_laws() {
            Some(p) => {
                let c = p.pressure.coef;
                let gamma = p.pressure.exponent;
                let rs = self.rho_star;
                let q = if gamma == 2.0 {
                    let d = rho - rs;
                    c * d * d
                } else {
                    let r = rho / rs;
                    let h = libm::expm1(gamma * fmath::ln(r)) - gamma * (r - 1.0);
                    c * fmath::powf(rs, gamma) * h / (gamma - 1.0)
                };
                finite("Q", rho, q.max(0.0))
            }
            None => Ok(self.q_quadrature(rho)?.value.max(0.0)),
        }
    }

    /// `Q(ρ) = ρ ∫_{ρ*}^{ρ} (P(τ) − P(ρ*))/τ² dτ`, an exact rewrite of the
    /// defining formula whose integrand never changes sign.
    pub fn q_quadrature(&self, rho: f64) -> Result<Quad> {
        check_positive("rho", rho)?;
        let p_star = self.pressure(self.rho_star);
        let q = adaptive(
            |u| {
                let s = fmath::exp(u);
                (self.pressure(s) - p_star) / s
            },
            fmath::ln(self.rho_star),
            fmath::ln(rho),
            self.quad_tol(),
        )?;
        Ok(Quad { value: rho * q.value, error: rho * q.error, evaluations: q.evaluations })
    }

    /// Particle potential `Φ(x) = ∫_{ρ*}^{m/x} s^{−2}P(s) ds`, with `Φ(L) = 0`.
    pub fn phi(&self, x: f64) -> Result<f64> {
        check_positive("x", x)?;
        self.pressure_integral(self.m / x)
    }

    pub fn phi_quadrature(&self, x: f64) -> Result<Quad> {
        check_positive("x", x)?;
        self.pressure_integral_quadrature(self.m / x)
    }

    /// `Φ'(x) = −P(m/x)/m`.
    pub fn phi_prime(&self, x: f64) -> Result<f64> {
        check_positive("x", x)?;
        Ok(self.phi_prime_unchecked(x))
    }

    #[inline]
    pub(crate) fn phi_prime_unchecked(&self, x: f64) -> f64 {
        -self.pressure(self.m / x) / self.m
    }

    /// `Φ''(x) = x^{−2} P'(m/x)`.
    pub fn phi_second(&self, x: f64) -> Result<f64> {
        check_positive("x", x)?;
        Ok(self.pressure_prime(self.m / x) / (x * x))
    }

    /// `K(x) = −k(m/x)/m`.
    pub fn cap_k(&self, x: f64) -> Result<f64> {
        check_positive("x", x)?;
        Ok(-self.small_k(self.m / x)? / self.m)
    }

    pub fn cap_k_quadrature(&self, x: f64) -> Result<Quad> {
        check_positive("x", x)?;
        let q = self.small_k_quadrature(self.m / x)?;
        Ok(Quad { value: -q.value / self.m, error: q.error / self.m, evaluations: q.evaluations })
    }

    /// `K'(x) = μ(m/x)/(m x) > 0`.
    pub fn cap_k_prime(&self, x: f64) -> Result<f64> {
        check_positive("x", x)?;
        Ok(self.cap_k_prime_unchecked(x))
    }

    #[inline]
    pub(crate) fn cap_k_prime_unchecked(&self, x: f64) -> f64 {
        self.viscosity(self.m / x) / (self.m * x)
    }
}
