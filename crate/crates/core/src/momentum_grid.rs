//! Truncated Cartesian momentum lattice and the moment-integration engine.
//!
//! Nodes are cell centers of a tensor lattice on [−q_max, q_max]³. Along each
//! axis the lattice is uniform either in q itself (`Uniform`) or in ξ with
//! q = a·sinh(ξ) (`Sinh`), which concentrates nodes where the Jüttner weight
//! lives and pushes the remaining ones into the tail. Both kinds are exactly
//! symmetric under q → −q; the mirror of node k is node N−1−k.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special_fn;

/// Default tolerance used when validating grid resolution.
pub const DEFAULT_TOL_GRID: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Uniform,
    Sinh,
}

#[derive(Clone, Debug)]
pub struct MomentumGrid {
    kind: GridKind,
    q_max: f64,
    n_axis: usize,
    scale: f64,
    xi_step: f64,
    axis: Vec<f64>,
    axis_jacobian: Vec<f64>,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    q0: Vec<f64>,
}

/// q_max large enough that the neglected Jüttner tail is below ~1e-12.
pub fn default_q_max(beta0: f64) -> f64 {
    f64::max(10.0, 30.0 / beta0)
}

/// Sinh-map scale: the thermal momentum width for cold gases, 1 otherwise.
pub fn default_sinh_scale(beta0: f64) -> f64 {
    1.0 / beta0.max(1.0).sqrt()
}

fn validate(q_max: f64, n_axis: usize) -> Result<()> {
    if !(q_max > 0.0 && q_max.is_finite()) {
        return Err(Error::config("q_max", format!("must be positive, got {q_max}")));
    }
    if n_axis % 2 != 0 {
        return Err(Error::config("n_axis", "n_axis must be even"));
    }
    if n_axis < 8 {
        return Err(Error::config("n_axis", format!("must be at least 8, got {n_axis}")));
    }
    Ok(())
}

impl MomentumGrid {
    /// Midpoint lattice with uniform weights (2·q_max/n_axis)³.
    pub fn uniform(q_max: f64, n_axis: usize) -> Result<Self> {
        validate(q_max, n_axis)?;
        let h = 2.0 * q_max / n_axis as f64;
        let half: Vec<(f64, f64)> = (0..n_axis / 2).map(|j| ((j as f64 + 0.5) * h, 1.0)).collect();
        Ok(Self::from_half_axis(GridKind::Uniform, q_max, n_axis, 1.0, h, &half))
    }

    /// Cell-centered lattice uniform in ξ, with q = scale·sinh(ξ).
    pub fn sinh(q_max: f64, n_axis: usize, scale: f64) -> Result<Self> {
        validate(q_max, n_axis)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::config("scale", format!("must be positive, got {scale}")));
        }
        let xi_max = (q_max / scale).asinh();
        let h = 2.0 * xi_max / n_axis as f64;
        let half: Vec<(f64, f64)> = (0..n_axis / 2)
            .map(|j| {
                let xi = (j as f64 + 0.5) * h;
                (scale * xi.sinh(), scale * xi.cosh())
            })
            .collect();
        Ok(Self::from_half_axis(GridKind::Sinh, q_max, n_axis, scale, h, &half))
    }

    /// The default grid for a global Maxwellian at `beta0`.
    pub fn for_beta(beta0: f64, n_axis: usize) -> Result<Self> {
        Self::sinh(default_q_max(beta0), n_axis, default_sinh_scale(beta0))
    }

    pub fn build(kind: GridKind, q_max: f64, n_axis: usize, scale: f64) -> Result<Self> {
        match kind {
            GridKind::Uniform => Self::uniform(q_max, n_axis),
            GridKind::Sinh => Self::sinh(q_max, n_axis, scale),
        }
    }

    /// `half` lists (q, dq/dξ) for the positive half-axis, innermost first.
    fn from_half_axis(
        kind: GridKind,
        q_max: f64,
        n_axis: usize,
        scale: f64,
        xi_step: f64,
        half: &[(f64, f64)],
    ) -> Self {
        let m = n_axis / 2;
        let mut axis = vec![0.0; n_axis];
        let mut axis_jacobian = vec![0.0; n_axis];
        for (j, &(q, jac)) in half.iter().enumerate() {
            axis[m + j] = q;
            axis[m - 1 - j] = -q;
            axis_jacobian[m + j] = jac;
            axis_jacobian[m - 1 - j] = jac;
        }
        let axis_weight: Vec<f64> = axis_jacobian.iter().map(|j| j * xi_step).collect();

        let total = n_axis * n_axis * n_axis;
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut q0 = Vec::with_capacity(total);
        for i in 0..n_axis {
            for j in 0..n_axis {
                for l in 0..n_axis {
                    let q = [axis[i], axis[j], axis[l]];
                    nodes.push(q);
                    weights.push(axis_weight[i] * axis_weight[j] * axis_weight[l]);
                    q0.push((1.0 + q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt());
                }
            }
        }

        MomentumGrid {
            kind,
            q_max,
            n_axis,
            scale,
            xi_step,
            axis,
            axis_jacobian,
            nodes,
            weights,
            q0,
        }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn n_axis(&self) -> usize {
        self.n_axis
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn q0(&self) -> &[f64] {
        &self.q0
    }

    /// Axis coordinates, shared by all three directions.
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    /// dq/dξ at each axis coordinate (1 for the uniform lattice).
    pub fn axis_jacobian(&self) -> &[f64] {
        &self.axis_jacobian
    }

    /// Spacing of the uniform parameter ξ along each axis.
    pub fn xi_step(&self) -> f64 {
        self.xi_step
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn mirror(&self, k: usize) -> usize {
        self.nodes.len() - 1 - k
    }

    /// Linear index of the node with axis indices (i, j, l).
    #[inline]
    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.n_axis + j) * self.n_axis + l
    }

    /// q̂ = q/q⁰ at node k.
    #[inline]
    pub fn velocity(&self, k: usize) -> [f64; 3] {
        let q = self.nodes[k];
        let q0 = self.q0[k];
        [q[0] / q0, q[1] / q0, q[2] / q0]
    }

    /// Σ_k w_k · values_k · phi(q_k, q⁰_k), divided by q⁰_k when `over_q0` is set.
    ///
    /// Mirror nodes are added together before the outer sum, so a q-odd
    /// integrand of a q-even field cancels to exactly zero.
    pub fn moment(&self, values: &[f64], phi: impl Fn(&[f64; 3], f64) -> f64, over_q0: bool) -> f64 {
        assert_eq!(values.len(), self.len(), "field does not match grid");
        let term = |k: usize| {
            let q0 = self.q0[k];
            let v = values[k] * phi(&self.nodes[k], q0);
            if over_q0 {
                v / q0
            } else {
                v
            }
        };
        let n = self.len();
        (0..n / 2)
            .map(|k| self.weights[k] * (term(k) + term(n - 1 - k)))
            .sum()
    }

    /// Weighted inner product ⟨a, b⟩ = Σ w a b, paired like [`moment`](Self::moment).
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.len();
        (0..n / 2)
            .map(|k| {
                let m = n - 1 - k;
                self.weights[k] * (a[k] * b[k] + a[m] * b[m])
            })
            .sum()
    }

    /// Σ w e^{−β q⁰} / M(β) − 1: the normalization defect of the Jüttner weight.
    pub fn normalization_defect(&self, beta: f64) -> Result<f64> {
        let ln_m = special_fn::ln_m_of_beta(beta)?;
        let field: Vec<f64> = self.q0.iter().map(|&q0| (-beta * q0 - ln_m).exp()).collect();
        Ok(self.moment(&field, |_, _| 1.0, false) - 1.0)
    }

    /// Errors when the grid cannot integrate the Jüttner weight at `beta` to `tol`.
    pub fn check_resolution(&self, beta: f64, tol: f64) -> Result<()> {
        let defect = self.normalization_defect(beta)?;
        if defect.abs() > tol {
            return Err(Error::config(
                "n_axis",
                format!(
                    "grid does not resolve the Maxwellian at beta0 = {beta}: normalization defect {defect:.3e} exceeds {tol:.1e}"
                ),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_layout() {
        let g = MomentumGrid::uniform(8.0, 16).unwrap();
        assert_eq!(g.len(), 4096);
        assert!(g.weights().iter().all(|&w| w == 1.0));
        assert!(g.q0().iter().all(|&q0| q0 >= 1.0));
    }

    #[test]
    fn nodes_are_symmetric_under_negation() {
        for g in [MomentumGrid::uniform(8.0, 16).unwrap(), MomentumGrid::sinh(30.0, 12, 1.0).unwrap()] {
            for k in 0..g.len() {
                let m = g.mirror(k);
                let (a, b) = (g.nodes()[k], g.nodes()[m]);
                assert_eq!([a[0], a[1], a[2]], [-b[0], -b[1], -b[2]]);
                assert_eq!(g.weights()[k], g.weights()[m]);
                assert_eq!(g.q0()[k], g.q0()[m]);
            }
        }
    }

    #[test]
    fn sinh_axis_spans_the_box() {
        let g = MomentumGrid::sinh(30.0, 32, 1.0).unwrap();
        let total: f64 = (0..32).map(|i| g.axis_jacobian()[i] * g.xi_step()).sum();
        // Σ cosh(ξ)Δξ is the midpoint rule for 2·sinh(ξ_max) = 60.
        assert!((total - 60.0).abs() < 0.5);
        assert!(g.axis()[31] < 30.0 && g.axis()[31] > 25.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let err = MomentumGrid::uniform(8.0, 15).unwrap_err();
        assert!(err.to_string().contains("n_axis must be even"));
        assert!(MomentumGrid::uniform(8.0, 6).is_err());
        assert!(MomentumGrid::uniform(-1.0, 16).is_err());
        assert!(MomentumGrid::sinh(8.0, 16, 0.0).is_err());
    }

    #[test]
    fn normalization_on_default_grid() {
        let g = MomentumGrid::for_beta(1.0, 32).unwrap();
        assert!(g.normalization_defect(1.0).unwrap().abs() < 1e-10);
        g.check_resolution(1.0, DEFAULT_TOL_GRID).unwrap();
        // The uniform lattice at the same size is far too coarse.
        let u = MomentumGrid::uniform(30.0, 32).unwrap();
        assert!(u.check_resolution(1.0, DEFAULT_TOL_GRID).is_err());
    }

    #[test]
    fn odd_moment_of_even_field_is_exactly_zero() {
        let g = MomentumGrid::for_beta(1.0, 16).unwrap();
        let field: Vec<f64> = g.q0().iter().map(|q0| (-q0).exp() * (1.0 + q0)).collect();
        for i in 0..3 {
            assert_eq!(g.moment(&field, |q, _| q[i], true), 0.0);
            assert_eq!(g.moment(&field, |q, q0| q[i] * q0 * q0, false), 0.0);
        }
    }
}
