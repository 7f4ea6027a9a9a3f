//! Particle state, the ODE right-hand side and the discrete functionals.
//!
//! Particles are indexed from the right wall: `x₀ = L` is a massless ghost,
//! `x₁ > x₂ > … > x_{n−1}` move, and `xₙ = 0` is the wall particle. Boundary
//! positions and velocities are implicit constants and never stored.
//! Cell `i` (for `i = 1..=n`) is `[xᵢ, x_{i−1}]` with width `Δᵢ`.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::FluidModel;
use crate::{fmath, Error, Result};

/// Positions and velocities of the `n − 1` moving particles at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub n: usize,
    pub t: f64,
    /// `x₁ … x_{n−1}`, strictly decreasing.
    pub x: Vec<f64>,
    /// `v₁ … v_{n−1}`.
    pub v: Vec<f64>,
}

/// Time derivative of a [`ParticleState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub dx: Vec<f64>,
    pub dv: Vec<f64>,
}

/// Reported values below this are flagged instead of clamped to zero.
pub const NEGATIVE_CLAMP: f64 = -1e-14;

/// `Eₙ`, `Wₙ`, `Zₙ`, `Hₙ` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunctionals {
    pub e_n: f64,
    pub w_n: f64,
    pub z_n: f64,
    pub h_n: f64,
    /// `(m/n) Σ Φ(nΔᵢ)`, shared by `Eₙ` and `Wₙ`.
    pub potential: f64,
    /// Transformed velocities `wᵢ = vᵢ − nK(nΔᵢ) + nK(nΔᵢ₊₁)`.
    pub w: Vec<f64>,
    /// Set when `Eₙ` or `Wₙ` came out below [`NEGATIVE_CLAMP`].
    pub negative_flag: bool,
}

/// Guaranteed range `a ≤ nΔᵢ ≤ b` of the scaled particle spacings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacingBounds {
    pub a: f64,
    pub b: f64,
    /// Energy budget `√W̄ + √Ē` the bounds were computed for.
    pub budget: f64,
}

impl ParticleState {
    /// Builds a state and checks array lengths and finiteness.
    pub fn new(n: usize, t: f64, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter { name: "n", reason: "at least 2 particles are required".into() });
        }
        if x.len() != n - 1 || v.len() != n - 1 {
            return Err(Error::InvalidParameter { name: "state", reason: "x and v must hold n - 1 entries".into() });
        }
        let s = ParticleState { n, t, x, v };
        s.check_finite()?;
        Ok(s)
    }

    /// Equal spacing `xᵢ = L(n − i)/n` at rest.
    pub fn equilibrium(n: usize, length: f64) -> Self {
        let x = (1..n).map(|i| length * (n - i) as f64 / n as f64).collect();
        ParticleState { n, t: 0.0, x, v: vec![0.0; n - 1] }
    }

    fn check_finite(&self) -> Result<()> {
        if !self.t.is_finite() {
            return Err(Error::NonFinite { what: "time", index: 0 });
        }
        if let Some(i) = self.x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "position", index: i + 1 });
        }
        if let Some(i) = self.v.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "velocity", index: i + 1 });
        }
        Ok(())
    }

    /// Checks membership in the open state space `Ωₙ`.
    pub fn check_domain(&self, length: f64) -> Result<()> {
        self.check_finite()?;
        check_positions(&self.x, length)
    }

    /// Position `xᵢ` for `i = 0..=n` including the fixed ends.
    #[inline]
    pub fn position(&self, i: usize, length: f64) -> f64 {
        if i == 0 {
            length
        } else if i == self.n {
            0.0
        } else {
            self.x[i - 1]
        }
    }

    /// Velocity `vᵢ` for `i = 0..=n`; zero at both ends.
    #[inline]
    pub fn velocity(&self, i: usize) -> f64 {
        if i == 0 || i == self.n {
            0.0
        } else {
            self.v[i - 1]
        }
    }

    /// Cell widths `Δ₁ … Δₙ`.
    pub fn spacings(&self, length: f64) -> Vec<f64> {
        spacings_of(&self.x, self.n, length)
    }

    /// Extremes of the scaled spacing `nΔᵢ`.
    pub fn scaled_spacing_range(&self, length: f64) -> (f64, f64) {
        let nf = self.n as f64;
        self.spacings(length)
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(nf * d), hi.max(nf * d)))
    }

    /// Packs the state as `[x₁ … x_{n−1}, v₁ … v_{n−1}]`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 * (self.n - 1));
        y.extend_from_slice(&self.x);
        y.extend_from_slice(&self.v);
        y
    }

    pub fn from_vector(n: usize, t: f64, y: &[f64]) -> Self {
        let (x, v) = y.split_at(n - 1);
        ParticleState { n, t, x: x.to_vec(), v: v.to_vec() }
    }
}

pub(crate) fn check_positions(x: &[f64], length: f64) -> Result<()> {
    let mut prev = length;
    for (k, &xi) in x.iter().enumerate() {
        if !xi.is_finite() {
            return Err(Error::NonFinite { what: "position", index: k + 1 });
        }
        if !(xi < prev) {
            return Err(Error::OutsideDomain { index: k + 1, reason: "particles must satisfy x_i < x_{i-1}" });
        }
        prev = xi;
    }
    if !(prev > 0.0) {
        return Err(Error::OutsideDomain { index: x.len(), reason: "last particle must stay right of the wall" });
    }
    Ok(())
}

fn spacings_of(x: &[f64], n: usize, length: f64) -> Vec<f64> {
    let mut d = Vec::with_capacity(n);
    let mut prev = length;
    for &xi in x {
        d.push(prev - xi);
        prev = xi;
    }
    d.push(prev);
    d
}

/// Right-hand side on the packed vector `y = [x, v]`; `out` has the same layout.
///
/// Returns an error instead of evaluating outside `Ωₙ`.
pub(crate) fn rhs_packed(model: &FluidModel, n: usize, y: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) -> Result<()> {
    let m1 = n - 1;
    let (x, v) = y.split_at(m1);
    check_positions(x, model.length())?;
    if let Some(i) = v.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite { what: "velocity", index: i + 1 });
    }
    let nf = n as f64;
    let length = model.length();
    // scratch layout: [Φ'(nΔ₁..nΔₙ), K'(nΔ₁..nΔₙ)]
    scratch.clear();
    scratch.resize(2 * n, 0.0);
    let mut prev = length;
    for i in 0..n {
        let xi = if i < m1 { x[i] } else { 0.0 };
        let s = nf * (prev - xi);
        scratch[i] = model.phi_prime_unchecked(s);
        scratch[n + i] = model.cap_k_prime_unchecked(s);
        prev = xi;
    }
    let (dx, dv) = out.split_at_mut(m1);
    dx.copy_from_slice(v);
    let n2 = nf * nf;
    for k in 0..m1 {
        // particle i = k + 1 sits between cells i (index k) and i + 1 (index k + 1)
        let vi = v[k];
        let vl = if k == 0 { 0.0 } else { v[k - 1] };
        let vr = if k + 1 == m1 { 0.0 } else { v[k + 1] };
        let pressure = nf * scratch[k] - nf * scratch[k + 1];
        let viscous_left = n2 * scratch[n + k] * (vl - vi);
        let viscous_right = n2 * scratch[n + k + 1] * (vr - vi);
        dv[k] = pressure + viscous_left + viscous_right;
    }
    Ok(())
}

/// Evaluates the particle equations of motion.
pub fn rhs(model: &FluidModel, state: &ParticleState) -> Result<StateDerivative> {
    state.check_domain(model.length())?;
    let y = state.to_vector();
    let mut out = vec![0.0; y.len()];
    let mut scratch = Vec::new();
    rhs_packed(model, state.n, &y, &mut out, &mut scratch)?;
    let dv = out.split_off(state.n - 1);
    Ok(StateDerivative { dx: out, dv })
}

fn clamp_reported(v: f64, flag: &mut bool) -> f64 {
    if v >= 0.0 {
        v
    } else if v >= NEGATIVE_CLAMP {
        0.0
    } else {
        *flag = true;
        v
    }
}

/// Computes `Eₙ`, `Wₙ`, `Zₙ` and `Hₙ`.
///
/// The potential term `(m/n)ΣΦ(nΔᵢ)` is evaluated as `ΣΔᵢ Q(m/(nΔᵢ))`,
/// which is the same quantity whenever `ΣΔᵢ = L` but does not cancel near
/// equilibrium.
pub fn functionals(model: &FluidModel, state: &ParticleState) -> Result<DiscreteFunctionals> {
    let length = model.length();
    state.check_domain(length)?;
    let n = state.n;
    let nf = n as f64;
    let m = model.mass();
    let d = state.spacings(length);

    let mut kinetic = 0.0;
    for &vi in &state.v {
        kinetic += vi * vi;
    }
    kinetic *= m / (2.0 * nf);

    let mut potential = 0.0;
    let mut kvals = Vec::with_capacity(n);
    for &di in &d {
        potential += di * model.q_potential(m / (nf * di))?;
        kvals.push(model.cap_k(nf * di)?);
    }

    let mut w = Vec::with_capacity(n - 1);
    let mut w_sq = 0.0;
    let mut h_n: f64 = 0.0;
    for k in 0..n - 1 {
        let jump = nf * (kvals[k] - kvals[k + 1]);
        let wi = state.v[k] - jump;
        w_sq += wi * wi;
        w.push(wi);
        h_n = h_n.max(jump.abs());
    }

    let mut z_n = 0.0;
    for i in 1..=n {
        let dvel = state.velocity(i - 1) - state.velocity(i);
        z_n += dvel * dvel / d[i - 1];
    }
    z_n *= 0.5;

    let mut negative_flag = false;
    let potential = clamp_reported(potential, &mut negative_flag);
    let e_n = clamp_reported(kinetic + potential, &mut negative_flag);
    let w_n = clamp_reported(m / (2.0 * nf) * w_sq + potential, &mut negative_flag);
    Ok(DiscreteFunctionals { e_n, w_n, z_n, h_n, potential, w, negative_flag })
}

/// Exact rate of change of `Eₙ` along the flow: `−mn Σ K'(nΔᵢ)(v_{i−1} − vᵢ)²`.
pub fn energy_dissipation(model: &FluidModel, state: &ParticleState) -> Result<f64> {
    let length = model.length();
    state.check_domain(length)?;
    let nf = state.n as f64;
    let d = state.spacings(length);
    let mut acc = 0.0;
    for i in 1..=state.n {
        let dvel = state.velocity(i - 1) - state.velocity(i);
        acc += model.cap_k_prime_unchecked(nf * d[i - 1]) * dvel * dvel;
    }
    Ok(-model.mass() * nf * acc)
}

/// Exact rate of change of `Wₙ`:
/// `−mn Σ (Φ'(nΔᵢ) − Φ'(nΔᵢ₊₁))(K(nΔᵢ) − K(nΔᵢ₊₁))`.
pub fn modified_energy_dissipation(model: &FluidModel, state: &ParticleState) -> Result<f64> {
    let length = model.length();
    state.check_domain(length)?;
    let nf = state.n as f64;
    let d = state.spacings(length);
    let mut acc = 0.0;
    for k in 0..state.n - 1 {
        let (a, b) = (nf * d[k], nf * d[k + 1]);
        acc += (model.phi_prime_unchecked(a) - model.phi_prime_unchecked(b)) * (model.cap_k(a)? - model.cap_k(b)?);
    }
    Ok(-model.mass() * nf * acc)
}

/// `n Σ_{i=1}^{n−1} (K(nΔᵢ) − K(nΔᵢ₊₁))²`, bounded by `(2/m)(√Wₙ + √Eₙ)²`.
pub fn k_variation(model: &FluidModel, state: &ParticleState) -> Result<f64> {
    let length = model.length();
    state.check_domain(length)?;
    let nf = state.n as f64;
    let d = state.spacings(length);
    let mut acc = 0.0;
    for k in 0..state.n - 1 {
        let jump = model.cap_k(nf * d[k])? - model.cap_k(nf * d[k + 1])?;
        acc += jump * jump;
    }
    Ok(nf * acc)
}

/// Spacing bounds `a = m/F⁻¹(S)`, `b = m/F⁻¹(−S)` with `S = √W̄ + √Ē`.
///
/// Fails with [`Error::Inadmissible`] when `S` reaches either limit of `F`.
pub fn spacing_bounds(model: &FluidModel, e_bar: f64, w_bar: f64) -> Result<SpacingBounds> {
    if !(e_bar >= 0.0 && w_bar >= 0.0 && e_bar.is_finite() && w_bar.is_finite()) {
        return Err(Error::InvalidParameter { name: "energies", reason: "must be finite and non-negative".into() });
    }
    let budget = fmath::sqrt(w_bar) + fmath::sqrt(e_bar);
    let limits = model.f_envelope_limits()?;
    if budget >= limits.high {
        return Err(Error::Inadmissible { side: crate::error::Side::High, lhs: budget, limit: limits.high });
    }
    if budget >= limits.low {
        return Err(Error::Inadmissible { side: crate::error::Side::Low, lhs: budget, limit: limits.low });
    }
    let m = model.mass();
    let a = m / model.f_inverse(budget)?;
    let b = m / model.f_inverse(-budget)?;
    Ok(SpacingBounds { a, b, budget })
}
