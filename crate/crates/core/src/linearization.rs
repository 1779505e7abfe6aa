//! Perturbation variables around the global Maxwellian J⁰.
//!
//! With F = J⁰ + f√J⁰ the relaxation operator splits into a linear part
//! L(f) = P(f) − f, where P projects onto the five collision invariants
//! weighted by √J⁰, and a nonlinear remainder Γ(f).

use nalgebra::{Matrix5, SymmetricEigen};

use crate::error::{Error, Result};
use crate::macroscopics::{self, collision_frequency, ClosureMode};
use crate::maxwellian::global_maxwellian;
use crate::momentum_grid::MomentumGrid;
use crate::spectral::PeriodicLattice;
use crate::special_fn::ClosureFns;

/// Orthonormal basis of the null space of L.
///
/// `analytic` holds e₁ = √J⁰, e₂,₃,₄ = √(β₀/h̃)·q√J⁰ and
/// e₅ = √(−1/ẽ′)·(q⁰ − e₀)√J⁰, which are orthonormal in the continuum. The
/// projection uses `orthonormal`, their symmetric (Löwdin) orthonormalization
/// in the grid inner product, so that P is an exact discrete projector.
#[derive(Clone, Debug)]
pub struct KernelBasis {
    beta0: f64,
    j0: Vec<f64>,
    sqrt_j0: Vec<f64>,
    analytic: [Vec<f64>; 5],
    orthonormal: [Vec<f64>; 5],
    gram: Matrix5<f64>,
}

impl KernelBasis {
    pub fn new(beta0: f64, grid: &MomentumGrid) -> Result<Self> {
        let j0 = global_maxwellian(beta0, grid)?;
        let closure = ClosureFns::at(beta0)?;
        if !(closure.e_tilde_prime < 0.0) {
            return Err(Error::domain(format!(
                "e_tilde'(beta0) = {} is not negative",
                closure.e_tilde_prime
            )));
        }
        let sqrt_j0: Vec<f64> = j0.iter().map(|v| v.sqrt()).collect();
        let e0 = closure.e_tilde;
        let c_mom = (beta0 / closure.h_tilde).sqrt();
        let c_energy = (-1.0 / closure.e_tilde_prime).sqrt();

        let analytic: [Vec<f64>; 5] = [
            sqrt_j0.clone(),
            (0..grid.len()).map(|k| c_mom * grid.nodes()[k][0] * sqrt_j0[k]).collect(),
            (0..grid.len()).map(|k| c_mom * grid.nodes()[k][1] * sqrt_j0[k]).collect(),
            (0..grid.len()).map(|k| c_mom * grid.nodes()[k][2] * sqrt_j0[k]).collect(),
            (0..grid.len()).map(|k| c_energy * (grid.q0()[k] - e0) * sqrt_j0[k]).collect(),
        ];

        let gram = Matrix5::from_fn(|i, j| grid.inner(&analytic[i], &analytic[j]));
        let eig = SymmetricEigen::new(gram);
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidState("kernel basis is degenerate on this grid".to_string()));
        }
        let inv_sqrt = eig.eigenvectors
            * Matrix5::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
            * eig.eigenvectors.transpose();
        let orthonormal: [Vec<f64>; 5] = std::array::from_fn(|i| {
            (0..grid.len())
                .map(|k| (0..5).map(|j| analytic[j][k] * inv_sqrt[(j, i)]).sum())
                .collect()
        });

        Ok(KernelBasis {
            beta0,
            j0,
            sqrt_j0,
            analytic,
            orthonormal,
            gram,
        })
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn j0(&self) -> &[f64] {
        &self.j0
    }

    pub fn sqrt_j0(&self) -> &[f64] {
        &self.sqrt_j0
    }

    pub fn analytic(&self) -> &[Vec<f64>; 5] {
        &self.analytic
    }

    pub fn orthonormal(&self) -> &[Vec<f64>; 5] {
        &self.orthonormal
    }

    /// ⟨eᵢ, eⱼ⟩ of the analytic basis on the grid.
    pub fn gram(&self) -> &Matrix5<f64> {
        &self.gram
    }

    /// f = (F − J⁰)/√J⁰.
    pub fn decompose(&self, f_full: &[f64]) -> Vec<f64> {
        f_full
            .iter()
            .zip(&self.j0)
            .zip(&self.sqrt_j0)
            .map(|((x, j), s)| (x - j) / s)
            .collect()
    }

    /// F = J⁰ + f√J⁰.
    pub fn recompose(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(&self.j0)
            .zip(&self.sqrt_j0)
            .map(|((x, j), s)| j + x * s)
            .collect()
    }

    /// ⟨f, êᵢ⟩ for the orthonormalized basis.
    pub fn coefficients(&self, f: &[f64], grid: &MomentumGrid) -> [f64; 5] {
        std::array::from_fn(|i| grid.inner(f, &self.orthonormal[i]))
    }

    /// P(f) = Σᵢ ⟨f, êᵢ⟩ êᵢ.
    pub fn project(&self, f: &[f64], grid: &MomentumGrid) -> Vec<f64> {
        let c = self.coefficients(f, grid);
        (0..f.len())
            .map(|k| (0..5).map(|i| c[i] * self.orthonormal[i][k]).sum())
            .collect()
    }

    /// L(f) = P(f) − f.
    pub fn linearized_l(&self, f: &[f64], grid: &MomentumGrid) -> Vec<f64> {
        let mut p = self.project(f, grid);
        for (pk, fk) in p.iter_mut().zip(f) {
            *pk -= fk;
        }
        p
    }
}

/// Γ(f) = (U_μq^μ/q⁰)(J(F) − F)/√J⁰ − L(f), the exact nonlinear remainder.
pub fn gamma_residual(
    f_full: &[f64],
    basis: &KernelBasis,
    grid: &MomentumGrid,
    mode: ClosureMode,
) -> Result<Vec<f64>> {
    let rhs = relaxation_rhs(f_full, grid, mode)?;
    let f = basis.decompose(f_full);
    let l = basis.linearized_l(&f, grid);
    Ok((0..grid.len()).map(|k| rhs[k] / basis.sqrt_j0[k] - l[k]).collect())
}

/// (U_μq^μ/q⁰)(J(F) − F) at every node.
pub fn relaxation_rhs(f_full: &[f64], grid: &MomentumGrid, mode: ClosureMode) -> Result<Vec<f64>> {
    let a = macroscopics::aw_attractor(f_full, grid, mode)?;
    Ok((0..grid.len())
        .map(|k| collision_frequency(&a.params, grid, k) * (a.field[k] - f_full[k]))
        .collect())
}

/// Ψ, Ψ₁ and the per-node Φ, Φ₁ of a perturbation.
#[derive(Clone, Debug)]
pub struct PerturbationQuantities {
    pub psi: f64,
    pub psi1: f64,
    pub phi: Vec<f64>,
    pub phi1: Vec<f64>,
}

pub fn psi_phi(f: &[f64], basis: &KernelBasis, grid: &MomentumGrid) -> Result<PerturbationQuantities> {
    let g: Vec<f64> = f.iter().zip(&basis.sqrt_j0).map(|(a, b)| a * b).collect();
    let s0 = grid.moment(&g, |_, _| 1.0, false);
    let s: [f64; 3] = std::array::from_fn(|i| grid.moment(&g, |q, _| q[i], true));
    let psi1 = s0 * s0 - s.iter().map(|x| x * x).sum::<f64>();
    let psi = 2.0 * s0 + psi1;
    if !(1.0 + psi > 0.0) {
        return Err(Error::Regime(format!("1 + Psi = {:.3e} is not positive", 1.0 + psi)));
    }

    let moments = macroscopics::compute_moments(&basis.recompose(f), grid);
    let (_, u) = macroscopics::eckart_fields(&moments)?;
    let mut phi = Vec::with_capacity(grid.len());
    let mut phi1 = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let q = grid.nodes()[k];
        let q0 = grid.q0()[k];
        let uq = u[0] * q0 - (u[1] * q[0] + u[2] * q[1] + u[3] * q[2]);
        let p = uq - q0;
        phi.push(p);
        phi1.push(p + q[0] * s[0] + q[1] * s[1] + q[2] * s[2]);
    }
    Ok(PerturbationQuantities { psi, psi1, phi, phi1 })
}

/// √(1+Ψ) − 1 − Ψ/2 written without cancellation: −Ψ²/(2(2+Ψ+2√(1+Ψ))).
pub fn sqrt_remainder(psi: f64) -> f64 {
    -psi * psi / (2.0 * (2.0 + psi + 2.0 * (1.0 + psi).sqrt()))
}

/// Γ₁(f) = (Ψ₁/2 − Ψ²/(2(2+Ψ+2√(1+Ψ))))·√J⁰, the quadratic part of (n − 1)√J⁰.
pub fn gamma1_term(f: &[f64], basis: &KernelBasis, grid: &MomentumGrid) -> Result<Vec<f64>> {
    let pq = psi_phi(f, basis, grid)?;
    let c = 0.5 * pq.psi1 + sqrt_remainder(pq.psi);
    Ok(basis.sqrt_j0.iter().map(|s| c * s).collect())
}

/// Fourth-order first derivative along one momentum axis of a single-cell field.
///
/// Central differences in the uniform parameter ξ (one-sided at the two
/// outermost nodes), divided by dq/dξ.
pub fn momentum_derivative(values: &[f64], axis: usize, grid: &MomentumGrid) -> Vec<f64> {
    let n = grid.n_axis();
    let h = grid.xi_step();
    let stride = match axis {
        0 => n * n,
        1 => n,
        _ => 1,
    };
    let mut out = vec![0.0; values.len()];
    for k in 0..values.len() {
        let i = (k / stride) % n;
        let at = |o: isize| values[(k as isize + o * stride as isize) as usize];
        let d = if i >= 2 && i + 2 < n {
            at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)
        } else if i == 0 {
            -25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)
        } else if i == 1 {
            -3.0 * at(-1) - 10.0 * at(0) + 18.0 * at(1) - 6.0 * at(2) + at(3)
        } else if i == n - 2 {
            3.0 * at(1) + 10.0 * at(0) - 18.0 * at(-1) + 6.0 * at(-2) - at(-3)
        } else {
            25.0 * at(0) - 48.0 * at(-1) + 36.0 * at(-2) - 16.0 * at(-3) + 3.0 * at(-4)
        };
        out[k] = d / (12.0 * h * grid.axis_jacobian()[i]);
    }
    out
}

/// E(f) = Σ_{|α|+|β| ≤ max_order} ‖∂^α_x ∂^β_q f‖² over x and q.
///
/// `f` is stored cell-major: f[c·N + k]. Spatial derivatives are spectral on
/// the periodic lattice; momentum derivatives use [`momentum_derivative`].
/// Time derivatives are not included.
pub fn energy_functional(
    f: &[f64],
    lattice: &PeriodicLattice,
    grid: &MomentumGrid,
    max_order: u32,
) -> f64 {
    let nodes = grid.len();
    let cells = lattice.len();
    assert_eq!(f.len(), nodes * cells, "field does not match lattice × grid");

    let norm2 = |g: &[f64]| -> f64 {
        g.chunks(nodes).map(|cell| grid.inner(cell, cell)).sum::<f64>() * lattice.dx()
    };

    let mut total = 0.0;
    let mut spatial = f.to_vec();
    for a in 0..=max_order {
        if a > 0 {
            spatial_derivative(&mut spatial, lattice, nodes);
        }
        for b in momentum_multi_indices(max_order - a) {
            let mut g = spatial.clone();
            for (axis, &count) in b.iter().enumerate() {
                for _ in 0..count {
                    for cell in g.chunks_mut(nodes) {
                        let d = momentum_derivative(cell, axis, grid);
                        cell.copy_from_slice(&d);
                    }
                }
            }
            total += norm2(&g);
        }
    }
    total
}

/// All multi-indices [β₁, β₂, β₃] with |β| ≤ order.
fn momentum_multi_indices(order: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for b1 in 0..=order {
        for b2 in 0..=order - b1 {
            for b3 in 0..=order - b1 - b2 {
                out.push([b1, b2, b3]);
            }
        }
    }
    out
}

fn spatial_derivative(f: &mut [f64], lattice: &PeriodicLattice, nodes: usize) {
    let cells = lattice.len();
    let mut column = vec![0.0; cells];
    let mut buf = lattice.scratch();
    for k in 0..nodes {
        for c in 0..cells {
            column[c] = f[c * nodes + k];
        }
        lattice.derivative(&mut column, 1, &mut buf);
        for c in 0..cells {
            f[c * nodes + k] = column[c];
        }
    }
}
