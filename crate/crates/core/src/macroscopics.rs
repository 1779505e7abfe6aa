//! Macroscopic fields of a discrete distribution and the Anderson–Witting
//! attractor J(F).
//!
//! The chain is: moments N^μ, T^μν → Eckart density and velocity → heat flux,
//! energy, pressure and enthalpy in the Landau–Lifshitz decomposition →
//! temperature from ẽ(β) = e. The attractor is the Jüttner distribution with
//! the resulting (n, U, β).

use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxwellian::{evaluate_juttner, JuttnerParams};
use crate::momentum_grid::MomentumGrid;
use crate::special_fn::{self, ClosureFns};

const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Particle four-flow N^μ and energy-momentum tensor T^μν.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub flow: [f64; 4],
    pub stress: [[f64; 4]; 4],
}

impl Moments {
    /// T^μ_μ = ∫ F dq/q⁰.
    pub fn trace(&self) -> f64 {
        (0..4).map(|m| METRIC[m] * self.stress[m][m]).sum()
    }
}

/// N^μ = Σ w q^μ F/q⁰ and T^μν = Σ w q^μ q^ν F/q⁰.
///
/// Mirror nodes are summed as pairs (even part s, odd part d), so every odd
/// moment of a q-even field is exactly zero.
pub fn compute_moments(f: &[f64], grid: &MomentumGrid) -> Moments {
    assert_eq!(f.len(), grid.len(), "field does not match grid");
    let n = grid.len();
    let mut flow = [0.0; 4];
    let mut t00 = 0.0;
    let mut t0i = [0.0; 3];
    let mut tij = [[0.0; 3]; 3];
    for k in 0..n / 2 {
        let m = n - 1 - k;
        let q = grid.nodes()[k];
        let q0 = grid.q0()[k];
        let w = grid.weights()[k];
        let s = w * (f[k] + f[m]) / q0;
        let d = w * (f[k] - f[m]) / q0;
        flow[0] += s * q0;
        t00 += s * q0 * q0;
        for i in 0..3 {
            flow[i + 1] += d * q[i];
            t0i[i] += d * q0 * q[i];
            for j in i..3 {
                tij[i][j] += s * q[i] * q[j];
            }
        }
    }
    let mut stress = [[0.0; 4]; 4];
    stress[0][0] = t00;
    for i in 0..3 {
        stress[0][i + 1] = t0i[i];
        stress[i + 1][0] = t0i[i];
        for j in i..3 {
            stress[i + 1][j + 1] = tij[i][j];
            stress[j + 1][i + 1] = tij[i][j];
        }
    }
    Moments { flow, stress }
}

/// Eckart density n = √(N^μ N_μ) and four-velocity u = N/n.
pub fn eckart_fields(m: &Moments) -> Result<(f64, [f64; 4])> {
    let norm2: f64 = (0..4).map(|i| METRIC[i] * m.flow[i] * m.flow[i]).sum();
    if !(norm2 > 0.0) || !(m.flow[0] > 0.0) {
        return Err(Error::InvalidState(format!(
            "particle four-flow is not future timelike (N^0 = {:.3e}, N.N = {norm2:.3e})",
            m.flow[0]
        )));
    }
    let n = norm2.sqrt();
    let spatial = [m.flow[1] / n, m.flow[2] / n, m.flow[3] / n];
    // u⁰ from the normalization keeps u^μ u_μ = 1 to round-off.
    let u0 = (1.0 + spatial.iter().map(|x| x * x).sum::<f64>()).sqrt();
    Ok((n, [u0, spatial[0], spatial[1], spatial[2]]))
}

/// Landau–Lifshitz quantities derived from T^μν and the Eckart frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandauLifshitz {
    pub heat_flux: [f64; 4],
    pub e: f64,
    pub p: f64,
    pub h: f64,
    /// U^μ with U⁰ recomputed as √(1+|U|²).
    pub velocity: [f64; 4],
    /// |u⁰ + 𝐪⁰/(nh) − U⁰|: how far the recomputed U⁰ is from the raw sum.
    pub u0_discrepancy: f64,
}

pub fn landau_lifshitz_fields(m: &Moments, n: f64, u: [f64; 4]) -> Result<LandauLifshitz> {
    let lower = |v: [f64; 4]| [v[0], -v[1], -v[2], -v[3]];
    let u_low = lower(u);
    // a^μ = T^μν u_ν,  b = u_μ u_ν T^μν
    let mut a = [0.0; 4];
    for mu in 0..4 {
        a[mu] = (0..4).map(|nu| m.stress[mu][nu] * u_low[nu]).sum();
    }
    let b: f64 = (0..4).map(|mu| u_low[mu] * a[mu]).sum();

    let mut heat_flux = [0.0; 4];
    for mu in 0..4 {
        heat_flux[mu] = a[mu] - u[mu] * b;
    }
    let e = b / n;
    let p = (b - m.trace()) / 3.0;
    let h = e + p / n;
    if !(h > 0.0) {
        return Err(Error::InvalidState(format!("non-positive enthalpy h = {h:.3e}")));
    }

    let nh = n * h;
    let spatial = [
        u[1] + heat_flux[1] / nh,
        u[2] + heat_flux[2] / nh,
        u[3] + heat_flux[3] / nh,
    ];
    let u0 = (1.0 + spatial.iter().map(|x| x * x).sum::<f64>()).sqrt();
    Ok(LandauLifshitz {
        heat_flux,
        e,
        p,
        h,
        velocity: [u0, spatial[0], spatial[1], spatial[2]],
        u0_discrepancy: (u[0] + heat_flux[0] / nh - u0).abs(),
    })
}

/// All macroscopic fields of a distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacroState {
    pub n: f64,
    pub u: [f64; 4],
    pub heat_flux: [f64; 4],
    pub e: f64,
    pub p: f64,
    pub h: f64,
    pub velocity: [f64; 4],
    pub beta: f64,
}

impl MacroState {
    pub fn params(&self) -> JuttnerParams {
        JuttnerParams::new(self.n, [self.velocity[1], self.velocity[2], self.velocity[3]], self.beta)
    }
}

pub fn macro_state(f: &[f64], grid: &MomentumGrid) -> Result<MacroState> {
    let m = compute_moments(f, grid);
    let (n, u) = eckart_fields(&m)?;
    let ll = landau_lifshitz_fields(&m, n, u)?;
    let beta = special_fn::invert_e_tilde(ll.e)?;
    Ok(MacroState {
        n,
        u,
        heat_flux: ll.heat_flux,
        e: ll.e,
        p: ll.p,
        h: ll.h,
        velocity: ll.velocity,
        beta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureMode {
    /// Parameters from the continuum formulas.
    Formula,
    /// Parameters refined so the discrete cancellation identities hold.
    #[default]
    Matched,
}

/// Node weights in the discrete cancellation identities
/// Σ_k w_k θ_k (J_k − F_k)(1, q^ν_k) = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weighting {
    /// θ = ν = U_μ q^μ / q⁰: the collision operator's own identities.
    Rate,
    /// θ = (1 − e^{−ν dt})/dt: the identities satisfied by one exact
    /// exponential relaxation step of length dt.
    Step(f64),
}

impl Weighting {
    /// (θ, ∂θ/∂ν) at collision frequency `nu`.
    #[inline]
    fn theta(self, nu: f64) -> (f64, f64) {
        match self {
            Weighting::Rate => (nu, 1.0),
            Weighting::Step(dt) => {
                let decay = (-nu * dt).exp();
                (-(-nu * dt).exp_m1() / dt, decay)
            }
        }
    }
}

/// Collision frequency ν_k = U_μ q^μ / q⁰ at node k.
#[inline]
pub fn collision_frequency(params: &JuttnerParams, grid: &MomentumGrid, k: usize) -> f64 {
    params.contraction(grid, k) / grid.q0()[k]
}

/// The attractor J(F) and how well it satisfies the cancellation identities.
#[derive(Clone, Debug)]
pub struct Attractor {
    pub params: JuttnerParams,
    pub field: Vec<f64>,
    /// max_a |Σ w θ (J − F) ψ_a| over ψ = (1, q⁰, q¹, q², q³).
    pub residual: f64,
    pub iterations: usize,
}

/// Residuals Σ w θ (J − F)(1, q⁰, q¹, q², q³) of the cancellation identities.
pub fn cancellation_residual(
    f: &[f64],
    j: &[f64],
    params: &JuttnerParams,
    grid: &MomentumGrid,
    weighting: Weighting,
) -> [f64; 5] {
    let mut r = [0.0; 5];
    for k in 0..grid.len() {
        let (theta, _) = weighting.theta(collision_frequency(params, grid, k));
        let c = grid.weights()[k] * theta * (j[k] - f[k]);
        let q = grid.nodes()[k];
        r[0] += c;
        r[1] += c * grid.q0()[k];
        r[2] += c * q[0];
        r[3] += c * q[1];
        r[4] += c * q[2];
    }
    r
}

fn max_abs(r: &[f64; 5]) -> f64 {
    r.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub const MATCHED_TOL: f64 = 1e-11;
pub const MATCHED_MAX_ITER: usize = 50;

/// J(F) with parameters from the continuum chain
/// eckart_fields → landau_lifshitz_fields → invert_e_tilde.
pub fn formula_attractor(f: &[f64], grid: &MomentumGrid) -> Result<Attractor> {
    let params = macro_state(f, grid)?.params();
    let field = evaluate_juttner(&params, grid)?;
    let residual = max_abs(&cancellation_residual(f, &field, &params, grid, Weighting::Rate));
    Ok(Attractor {
        params,
        field,
        residual,
        iterations: 0,
    })
}

/// Newton refinement of (n, U¹, U², U³, β) from `initial` until the discrete
/// cancellation identities hold with the given weighting.
///
/// The tolerance is relative to the particle content Σ w F of the cell.
pub fn matched_attractor(
    f: &[f64],
    grid: &MomentumGrid,
    initial: JuttnerParams,
    weighting: Weighting,
) -> Result<Attractor> {
    let mass: f64 = grid.weights().iter().zip(f).map(|(w, x)| w * x).sum();
    let tol = MATCHED_TOL * mass.max(f64::MIN_POSITIVE);
    let mut params = initial;
    let mut best: Option<(f64, JuttnerParams)> = None;
    let mut converged_at = None;

    for iteration in 0..=MATCHED_MAX_ITER {
        let (residual, jacobian) = newton_system(f, grid, &params, weighting)?;
        let res = max_abs(&residual);
        if best.map_or(true, |(r, _)| res < r) {
            best = Some((res, params));
        }
        if res <= tol {
            match converged_at {
                // One extra step past the tolerance, kept only if it helped.
                Some(_) => break,
                None => converged_at = Some(iteration),
            }
        } else if converged_at.is_some() {
            break;
        }
        if iteration == MATCHED_MAX_ITER {
            break;
        }

        let rhs = -Vector5::from(residual);
        let step = Matrix5::from(jacobian).lu().solve(&rhs).ok_or_else(|| {
            Error::Convergence("singular Jacobian in matched closure".to_string())
        })?;
        let mut scale = 1.0;
        loop {
            let n = params.n + scale * step[0];
            let beta = params.beta + scale * step[4];
            if n > 0.0 && beta > 0.0 {
                let v = params.velocity;
                params = JuttnerParams::new(
                    n,
                    [v[0] + scale * step[1], v[1] + scale * step[2], v[2] + scale * step[3]],
                    beta,
                );
                break;
            }
            scale *= 0.5;
            if scale < 1e-8 {
                return Err(Error::Convergence("matched closure left n > 0, β > 0".to_string()));
            }
        }
    }

    let (residual, params) = best.expect("at least one evaluation");
    match converged_at {
        Some(iterations) => Ok(Attractor {
            field: evaluate_juttner(&params, grid)?,
            params,
            residual,
            iterations,
        }),
        None => Err(Error::MatchedClosure {
            iterations: MATCHED_MAX_ITER,
            residual,
            fallback: initial,
        }),
    }
}

/// Residual and Jacobian of the cancellation identities in (n, U¹, U², U³, β).
fn newton_system(
    f: &[f64],
    grid: &MomentumGrid,
    params: &JuttnerParams,
    weighting: Weighting,
) -> Result<([f64; 5], [[f64; 5]; 5])> {
    let closure = ClosureFns::at(params.beta)?;
    let ln_m = special_fn::ln_m_of_beta(params.beta)?;
    let ln_pref = params.n.ln() - ln_m;
    let beta = params.beta;
    let u = params.velocity;
    let u0 = params.u0();

    let mut r = [0.0; 5];
    // Column-major accumulation: jac[col][row].
    let mut jac = [[0.0; 5]; 5];
    for k in 0..grid.len() {
        let q = grid.nodes()[k];
        let q0 = grid.q0()[k];
        let w = grid.weights()[k];
        let uq = u0 * q0 - (u[0] * q[0] + u[1] * q[1] + u[2] * q[2]);
        let jk = (ln_pref - beta * uq).exp();
        let nu = uq / q0;
        let (theta, dtheta) = weighting.theta(nu);
        let diff = jk - f[k];
        let psi = [1.0, q0, q[0], q[1], q[2]];

        let mut cols = [0.0; 5];
        cols[0] = theta * jk / params.n;
        for i in 0..3 {
            let dj = beta * (q[i] - u[i] * q0 / u0) * jk;
            let dnu = u[i] / u0 - q[i] / q0;
            cols[1 + i] = theta * dj + dtheta * dnu * diff;
        }
        cols[4] = theta * (closure.e_tilde - uq) * jk;

        let c = w * theta * diff;
        for a in 0..5 {
            r[a] += c * psi[a];
        }
        for (col, &v) in cols.iter().enumerate() {
            let wv = w * v;
            for a in 0..5 {
                jac[col][a] += wv * psi[a];
            }
        }
    }
    Ok((r, jac))
}

/// J(F) in the requested closure mode, with the collision-rate weighting.
pub fn aw_attractor(f: &[f64], grid: &MomentumGrid, mode: ClosureMode) -> Result<Attractor> {
    let formula = formula_attractor(f, grid)?;
    match mode {
        ClosureMode::Formula => Ok(formula),
        ClosureMode::Matched => matched_attractor(f, grid, formula.params, Weighting::Rate),
    }
}
