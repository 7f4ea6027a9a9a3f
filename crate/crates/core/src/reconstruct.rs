//! Piecewise-linear density and velocity fields built from a particle state.

use alloc::vec::Vec;

use crate::model::FluidModel;
use crate::particles::{rhs, ParticleState};
use crate::quadrature::{gauss, GaussRule, GAUSS5};
use crate::{Error, Result};

/// Field values at a quadrature node inside one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPoint {
    pub x: f64,
    pub rho: f64,
    pub v: f64,
    pub rho_x: f64,
    pub v_x: f64,
}

/// Node values on the cell edges `x₀ = L > x₁ > … > xₙ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedField {
    pub n: usize,
    pub t: f64,
    pub length: f64,
    /// `x₀ … xₙ`, decreasing.
    pub edges: Vec<f64>,
    /// `ρ₀ … ρₙ` with `ρ₀ = ρ₁`.
    pub rho: Vec<f64>,
    /// `v₀ … vₙ` with `v₀ = vₙ = 0`.
    pub v: Vec<f64>,
}

/// Builds `ρ⁽ⁿ⁾`, `v⁽ⁿ⁾` from a state in `Ωₙ`.
pub fn reconstruct(model: &FluidModel, state: &ParticleState) -> Result<ReconstructedField> {
    let length = model.length();
    state.check_domain(length)?;
    let n = state.n;
    let nf = n as f64;
    let m = model.mass();
    let edges: Vec<f64> = (0..=n).map(|i| state.position(i, length)).collect();
    let mut rho = Vec::with_capacity(n + 1);
    rho.push(0.0);
    for i in 1..=n {
        rho.push(m / (nf * (edges[i - 1] - edges[i])));
    }
    rho[0] = rho[1];
    let v = (0..=n).map(|i| state.velocity(i)).collect();
    Ok(ReconstructedField { n, t: state.t, length, edges, rho, v })
}

impl ReconstructedField {
    /// Cell index `i` with `x ∈ [xᵢ, x_{i−1}]`; a shared edge goes to the
    /// cell on its left.
    pub fn cell_of(&self, x: f64) -> Result<usize> {
        if !(x >= 0.0 && x <= self.length) {
            return Err(Error::InvalidParameter { name: "x", reason: alloc::format!("{x} lies outside [0, {}]", self.length) });
        }
        // edges decrease; count of edges ≥ x among x₀..x_{n−1}
        let k = self.edges[..self.n].partition_point(|&e| e >= x);
        Ok(k.max(1))
    }

    #[inline]
    fn width(&self, i: usize) -> f64 {
        self.edges[i - 1] - self.edges[i]
    }

    #[inline]
    fn lerp(&self, nodes: &[f64], i: usize, x: f64) -> f64 {
        nodes[i] + (nodes[i - 1] - nodes[i]) / self.width(i) * (x - self.edges[i])
    }

    pub fn rho_at(&self, x: f64) -> Result<f64> {
        let i = self.cell_of(x)?;
        Ok(self.lerp(&self.rho, i, x))
    }

    pub fn v_at(&self, x: f64) -> Result<f64> {
        let i = self.cell_of(x)?;
        Ok(self.lerp(&self.v, i, x))
    }

    /// Slope `(ρ_{i−1} − ρᵢ)/Δᵢ` of the cell containing `x`.
    pub fn rho_x_at(&self, x: f64) -> Result<f64> {
        let i = self.cell_of(x)?;
        Ok((self.rho[i - 1] - self.rho[i]) / self.width(i))
    }

    pub fn v_x_at(&self, x: f64) -> Result<f64> {
        let i = self.cell_of(x)?;
        Ok((self.v[i - 1] - self.v[i]) / self.width(i))
    }

    /// Exact integral of the piecewise-linear density.
    pub fn total_mass(&self) -> f64 {
        (1..=self.n).map(|i| self.width(i) * (self.rho[i] + self.rho[i - 1]) / 2.0).sum()
    }

    /// Samples `(x, ρ, v)` on `size` uniformly spaced points of `[0, L]`.
    pub fn sample_grid(&self, size: usize) -> Vec<(f64, f64, f64)> {
        let size = size.max(2);
        let mut out = Vec::with_capacity(size);
        let mut i = self.n;
        for j in 0..size {
            let x = if j + 1 == size { self.length } else { self.length * j as f64 / (size - 1) as f64 };
            while i > 1 && x > self.edges[i - 1] {
                i -= 1;
            }
            out.push((x, self.lerp(&self.rho, i, x), self.lerp(&self.v, i, x)));
        }
        out
    }

    /// Sums a fixed Gauss rule of `f` over every cell.
    pub fn integrate_cells<const N: usize, F: FnMut(CellPoint) -> f64>(&self, rule: &GaussRule<N>, f: F) -> f64 {
        self.integrate_panels(rule, f64::INFINITY, f)
    }

    /// Like [`Self::integrate_cells`], splitting each cell into equal
    /// panels no wider than `max_width`.
    pub fn integrate_panels<const N: usize, F: FnMut(CellPoint) -> f64>(
        &self,
        rule: &GaussRule<N>,
        max_width: f64,
        mut f: F,
    ) -> f64 {
        let mut total = 0.0;
        for i in 1..=self.n {
            let h = self.width(i);
            let rho_x = (self.rho[i - 1] - self.rho[i]) / h;
            let v_x = (self.v[i - 1] - self.v[i]) / h;
            let panels = if max_width.is_finite() { crate::fmath::ceil(h / max_width).max(1.0) as usize } else { 1 };
            let ph = h / panels as f64;
            for p in 0..panels {
                let a = self.edges[i] + ph * p as f64;
                let b = if p + 1 == panels { self.edges[i - 1] } else { a + ph };
                total += gauss(rule, a, b, |x| {
                    let s = x - self.edges[i];
                    f(CellPoint { x, rho: self.rho[i] + rho_x * s, v: self.v[i] + v_x * s, rho_x, v_x })
                });
            }
        }
        total
    }

    fn integrate<F: FnMut(f64, f64, f64) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut failure = None;
        let total = self.integrate_cells(&GAUSS5, |p| match f(p.rho, p.v, p.rho_x) {
            Ok(val) => val,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }

    /// `U = ∫Q(ρ⁽ⁿ⁾)`.
    pub fn continuous_u(&self, model: &FluidModel) -> Result<f64> {
        self.integrate(|r, _, _| model.q_potential(r))
    }

    /// `E = ½∫ρv² + ∫Q(ρ)`.
    pub fn continuous_e(&self, model: &FluidModel) -> Result<f64> {
        self.integrate(|r, v, _| Ok(0.5 * r * v * v + model.q_potential(r)?))
    }

    /// `W = ½∫ρ(v + μ(ρ)ρ⁻²ρₓ)² + ∫Q(ρ)`.
    pub fn continuous_w(&self, model: &FluidModel) -> Result<f64> {
        self.integrate(|r, v, rx| {
            let u = v + model.viscosity(r) / (r * r) * rx;
            Ok(0.5 * r * u * u + model.q_potential(r)?)
        })
    }
}

/// Node time derivatives `(ρ̇₀…ρ̇ₙ, v̇₀…v̇ₙ)` of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRates {
    pub rho_dot: Vec<f64>,
    pub v_dot: Vec<f64>,
}

pub fn node_rates(model: &FluidModel, state: &ParticleState, field: &ReconstructedField) -> Result<NodeRates> {
    let d = rhs(model, state)?;
    let n = state.n;
    let mut rho_dot = Vec::with_capacity(n + 1);
    rho_dot.push(0.0);
    for i in 1..=n {
        rho_dot.push(-field.rho[i] * (field.v[i - 1] - field.v[i]) / field.width(i));
    }
    rho_dot[0] = rho_dot[1];
    let mut v_dot = Vec::with_capacity(n + 1);
    v_dot.push(0.0);
    v_dot.extend_from_slice(&d.dv);
    v_dot.push(0.0);
    Ok(NodeRates { rho_dot, v_dot })
}

impl ReconstructedField {
    /// Weak time derivatives `(∂ₜρ⁽ⁿ⁾, ∂ₜv⁽ⁿ⁾)` at `x` given node rates.
    pub fn time_derivatives_with(&self, rates: &NodeRates, x: f64) -> Result<(f64, f64)> {
        let i = self.cell_of(x)?;
        let h = self.width(i);
        let s = x - self.edges[i];
        let dv = (self.v[i - 1] - self.v[i]) / h;
        let drho = (self.rho[i - 1] - self.rho[i]) / h;
        let v_here = self.v[i] + dv * s;
        let rho_dot = rates.rho_dot[i] + (rates.rho_dot[i - 1] - rates.rho_dot[i]) / h * s - drho * v_here;
        let v_dot = rates.v_dot[i] + (rates.v_dot[i - 1] - rates.v_dot[i]) / h * s - dv * dv * s - dv * self.v[i];
        Ok((rho_dot, v_dot))
    }
}

/// Weak time derivatives of `ρ⁽ⁿ⁾` and `v⁽ⁿ⁾` at a single point.
pub fn weak_time_derivatives(model: &FluidModel, state: &ParticleState, x: f64) -> Result<(f64, f64)> {
    let field = reconstruct(model, state)?;
    let rates = node_rates(model, state, &field)?;
    field.time_derivatives_with(&rates, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{simulate, IntegratorConfig};
    use crate::model::Preset;
    use crate::particles::functionals;

    fn sv() -> FluidModel {
        FluidModel::preset(Preset::SaintVenant { g: 9.81, nu: 1.0 }, 1.0, 1.0).unwrap()
    }

    fn two() -> ParticleState {
        ParticleState::new(2, 0.0, vec![0.4], vec![0.0]).unwrap()
    }

    #[test]
    fn equilibrium_field_is_flat() {
        let model = sv();
        let f = reconstruct(&model, &ParticleState::equilibrium(4, 1.0)).unwrap();
        for x in [0.0, 0.1, 0.25, 0.6, 1.0] {
            assert!((f.rho_at(x).unwrap() - 1.0).abs() < 1e-15);
            assert_eq!(f.v_at(x).unwrap(), 0.0);
        }
        assert!((f.total_mass() - 1.0).abs() < 1e-15);
        assert!(f.continuous_e(&model).unwrap().abs() < 1e-15);
        assert!(f.continuous_w(&model).unwrap().abs() < 1e-15);
    }

    #[test]
    fn two_particle_field() {
        let f = reconstruct(&sv(), &two()).unwrap();
        assert!((f.rho[1] - 1.0 / 1.2).abs() < 1e-15);
        assert!((f.rho[2] - 1.25).abs() < 1e-15);
        let expect = 1.25 + (1.0 / 1.2 - 1.25) * 0.5;
        assert!((f.rho_at(0.2).unwrap() - expect).abs() < 1e-15);
        assert!((f.rho_at(0.2).unwrap() - 1.0417).abs() < 1e-4);
        for x in [0.41, 0.7, 1.0] {
            assert!((f.rho_at(x).unwrap() - 1.0 / 1.2).abs() < 1e-15);
        }
        let mass = 0.6 / 1.2 + 0.4 * (1.25 + 1.0 / 1.2) / 2.0;
        assert!((f.total_mass() - mass).abs() < 1e-15);
        assert!((f.total_mass() - 0.91667).abs() < 1e-5);
        assert!(f.rho_at(1.5).is_err());
    }

    #[test]
    fn edges_use_left_cell() {
        let s = ParticleState::new(3, 0.0, vec![0.6, 0.3], vec![0.2, 0.5]).unwrap();
        let f = reconstruct(&sv(), &s).unwrap();
        assert_eq!(f.cell_of(0.3).unwrap(), 3);
        assert_eq!(f.cell_of(0.6).unwrap(), 2);
        assert_eq!(f.cell_of(0.0).unwrap(), 3);
        assert_eq!(f.cell_of(1.0).unwrap(), 1);
        // velocity is continuous across edges anyway
        assert!((f.v_at(0.3).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_matches_pointwise() {
        let s = ParticleState::new(3, 0.0, vec![0.6, 0.3], vec![0.2, 0.5]).unwrap();
        let f = reconstruct(&sv(), &s).unwrap();
        for (x, r, v) in f.sample_grid(41) {
            assert!((r - f.rho_at(x).unwrap()).abs() < 1e-14, "x={x}");
            assert!((v - f.v_at(x).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn continuous_energy_of_two_particles() {
        // analytic check of E: velocity zero, Q = c(ρ − 1)² with c = g/2
        let model = sv();
        let f = reconstruct(&model, &two()).unwrap();
        let r1 = 1.0 / 1.2;
        let (a, b) = (1.25f64, r1);
        // ∫₀^0.4 (a + (b − a)x/0.4 − 1)² dx
        let lin = 0.4 * ((a - 1.0).powi(2) + (a - 1.0) * (b - 1.0) + (b - 1.0).powi(2)) / 3.0;
        let expect = 4.905 * (lin + 0.6 * (r1 - 1.0).powi(2));
        assert!((f.continuous_e(&model).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn time_derivatives_match_finite_differences() {
        let model = sv();
        let s = ParticleState::new(4, 0.0, vec![0.78, 0.5, 0.22], vec![0.3, -0.2, 0.4]).unwrap();
        let h = 1e-6;
        let cfg = IntegratorConfig { rel_tol: 1e-13, abs_tol: 1e-15, snapshot_dt: h, ..IntegratorConfig::default() };
        let later = simulate(&model, &s, h, &cfg).unwrap().last().state.clone();
        let f0 = reconstruct(&model, &s).unwrap();
        let f1 = reconstruct(&model, &later).unwrap();
        for x in [0.1, 0.35, 0.6, 0.9] {
            let (rd, vd) = weak_time_derivatives(&model, &s, x).unwrap();
            let fd_r = (f1.rho_at(x).unwrap() - f0.rho_at(x).unwrap()) / h;
            let fd_v = (f1.v_at(x).unwrap() - f0.v_at(x).unwrap()) / h;
            assert!((fd_r - rd).abs() <= 1e-3 * rd.abs().max(1e-3), "rho x={x}: {fd_r} vs {rd}");
            assert!((fd_v - vd).abs() <= 1e-3 * vd.abs().max(1e-3), "v x={x}: {fd_v} vs {vd}");
        }
    }

    #[test]
    fn equilibrium_time_derivatives_vanish() {
        let s = ParticleState::equilibrium(5, 1.0);
        for x in [0.0, 0.33, 1.0] {
            let (a, b) = weak_time_derivatives(&sv(), &s, x).unwrap();
            assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
        }
    }

    #[test]
    fn continuous_and_discrete_energies_close() {
        let model = sv();
        let mut s = ParticleState::equilibrium(64, 1.0);
        for (v, x) in s.v.iter_mut().zip(&s.x) {
            *v = 0.1 * (core::f64::consts::PI * x).sin();
        }
        let f = reconstruct(&model, &s).unwrap();
        let d = functionals(&model, &s).unwrap();
        assert!((f.continuous_e(&model).unwrap() - d.e_n).abs() < 1e-3);
        assert!((f.continuous_w(&model).unwrap() - d.w_n).abs() < 1e-3);
    }
}
