//! Jüttner (relativistic Maxwellian) equilibria on a momentum grid.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::momentum_grid::MomentumGrid;
use crate::special_fn::{self, ClosureFns};

/// Minkowski metric diag(1, −1, −1, −1).
pub fn minkowski() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0))
}

/// (n, U, β) of J = n/M(β)·exp(−β U^μ q_μ), with U⁰ = √(1+|U|²).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JuttnerParams {
    pub n: f64,
    pub velocity: [f64; 3],
    pub beta: f64,
}

impl JuttnerParams {
    pub fn new(n: f64, velocity: [f64; 3], beta: f64) -> Self {
        JuttnerParams { n, velocity, beta }
    }

    /// Density `n` at rest with inverse temperature `beta`.
    pub fn at_rest(n: f64, beta: f64) -> Self {
        Self::new(n, [0.0; 3], beta)
    }

    pub fn u0(&self) -> f64 {
        let u = self.velocity;
        (1.0 + u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt()
    }

    pub fn four_velocity(&self) -> [f64; 4] {
        let u = self.velocity;
        [self.u0(), u[0], u[1], u[2]]
    }

    /// U^μ q_μ at node k.
    #[inline]
    pub fn contraction(&self, grid: &MomentumGrid, k: usize) -> f64 {
        let q = grid.nodes()[k];
        let u = self.velocity;
        self.u0() * grid.q0()[k] - (u[0] * q[0] + u[1] * q[1] + u[2] * q[2])
    }
}

/// J(n, U, β) at every node. Values that underflow are exactly zero.
pub fn evaluate_juttner(params: &JuttnerParams, grid: &MomentumGrid) -> Result<Vec<f64>> {
    let prefactor = params.n / special_fn::m_of_beta(params.beta)?;
    let u0 = params.u0();
    let u = params.velocity;
    let beta = params.beta;
    Ok(grid
        .nodes()
        .iter()
        .zip(grid.q0())
        .map(|(q, &q0)| {
            let uq = u0 * q0 - (u[0] * q[0] + u[1] * q[1] + u[2] * q[2]);
            prefactor * (-beta * uq).exp()
        })
        .collect())
}

/// J⁰ = e^{−β₀q⁰}/M(β₀).
pub fn global_maxwellian(beta0: f64, grid: &MomentumGrid) -> Result<Vec<f64>> {
    evaluate_juttner(&JuttnerParams::at_rest(1.0, beta0), grid)
}

/// Lorentz transformation taking U^μ to the rest frame (1, 0, 0, 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoostMatrix {
    pub lambda: Matrix4<f64>,
}

impl BoostMatrix {
    pub fn apply(&self, v: [f64; 4]) -> [f64; 4] {
        let r = self.lambda * Vector4::from(v);
        [r[0], r[1], r[2], r[3]]
    }
}

/// Boost matrix for spatial velocity `u`; the identity when |u| < 1e-14.
pub fn lorentz_boost(u: [f64; 3]) -> BoostMatrix {
    let norm2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    if norm2.sqrt() < 1e-14 {
        return BoostMatrix {
            lambda: Matrix4::identity(),
        };
    }
    let u0 = (1.0 + norm2).sqrt();
    let c = (u0 - 1.0) / norm2;
    let mut lambda = Matrix4::zeros();
    lambda[(0, 0)] = u0;
    for i in 0..3 {
        lambda[(0, i + 1)] = -u[i];
        lambda[(i + 1, 0)] = -u[i];
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            lambda[(i + 1, j + 1)] = delta + c * u[i] * u[j];
        }
    }
    BoostMatrix { lambda }
}

/// First derivatives of J with respect to its parameters, treating U⁰ as an
/// independent variable and using e = ẽ(β) in place of β.
#[derive(Clone, Debug)]
pub struct JuttnerDerivs {
    /// ∂J/∂n = J/n
    pub dn: Vec<f64>,
    /// ∂J/∂U⁰ = −β q⁰ J
    pub du0: Vec<f64>,
    /// ∇_U J = β q J
    pub du: [Vec<f64>; 3],
    /// ∂J/∂e = −(1/ẽ′(β))·(M′/M + U^μ q_μ)·J with M′/M = −ẽ(β)
    pub de: Vec<f64>,
}

pub fn juttner_param_derivs(params: &JuttnerParams, grid: &MomentumGrid) -> Result<JuttnerDerivs> {
    let j = evaluate_juttner(params, grid)?;
    let closure = ClosureFns::at(params.beta)?;
    let beta = params.beta;
    let n = grid.len();
    let mut d = JuttnerDerivs {
        dn: Vec::with_capacity(n),
        du0: Vec::with_capacity(n),
        du: [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)],
        de: Vec::with_capacity(n),
    };
    for k in 0..n {
        let q = grid.nodes()[k];
        let jk = j[k];
        d.dn.push(jk / params.n);
        d.du0.push(-beta * grid.q0()[k] * jk);
        for i in 0..3 {
            d.du[i].push(beta * q[i] * jk);
        }
        let uq = params.contraction(grid, k);
        d.de.push(-(uq - closure.e_tilde) / closure.e_tilde_prime * jk);
    }
    Ok(d)
}
