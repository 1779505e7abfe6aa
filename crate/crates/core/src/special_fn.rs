//! Modified Bessel functions K₀, K₁, K₂ and the temperature closure built on them.
//!
//! The Bessel functions are evaluated from their integral representations in
//! the variable y = sinh r,
//!
//! ```text
//! K₀(β) = ∫ e^{-β√(1+y²)} / √(1+y²) dy
//! K₁(β) = ∫ e^{-β√(1+y²)} dy
//! K₂(β) = ∫ (2y²+1)/√(1+y²) · e^{-β√(1+y²)} dy
//! ```
//!
//! integrated over y ∈ [0, ∞) with a shared adaptive Gauss–Kronrod partition.
//! Internally every integral carries the factor e^{β} so that ratios such as
//! K₁/K₂ stay finite for large β.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature;

/// Relative accuracy requested from the quadrature.
const BESSEL_REL_TOL: f64 = 1e-13;

/// The integrand is cut where it falls below this fraction of its peak.
const TRUNCATION: f64 = 1e-18;

/// K₀, K₁, K₂ at one β.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselEval {
    pub beta: f64,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    // e^{β}Kᵢ(β); finite where the unscaled values underflow.
    scaled: [f64; 3],
}

impl BesselEval {
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let scaled = scaled_bessel(beta)?;
        let damp = (-beta).exp();
        Ok(BesselEval {
            beta,
            k0: scaled[0] * damp,
            k1: scaled[1] * damp,
            k2: scaled[2] * damp,
            scaled,
        })
    }

    /// K₁(β)/K₂(β), computed from the scaled integrals.
    pub fn ratio(&self) -> f64 {
        self.scaled[1] / self.scaled[2]
    }

    /// e^{β}·Kᵢ(β) for i = 0, 1, 2.
    pub fn scaled(&self) -> [f64; 3] {
        self.scaled
    }
}

/// ẽ, h̃ and ẽ′ at one β.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosureFns {
    pub beta: f64,
    pub e_tilde: f64,
    pub h_tilde: f64,
    pub e_tilde_prime: f64,
}

impl ClosureFns {
    pub fn at(beta: f64) -> Result<Self> {
        Ok(Self::from_bessel(&BesselEval::new(beta)?))
    }

    pub fn from_bessel(b: &BesselEval) -> Self {
        let beta = b.beta;
        let r = b.ratio();
        ClosureFns {
            beta,
            e_tilde: r + 3.0 / beta,
            h_tilde: r + 4.0 / beta,
            e_tilde_prime: 3.0 / beta * r + r * r - 1.0 - 3.0 / (beta * beta),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("beta must be positive and finite, got {beta}")))
    }
}

/// √(1+y²) − 1 without cancellation near y = 0.
#[inline]
fn energy_excess(y: f64) -> f64 {
    let y2 = y * y;
    y2 / ((1.0 + y2).sqrt() + 1.0)
}

/// Smallest y beyond which every scaled integrand is below `TRUNCATION`.
///
/// Each scaled integrand equals 1 or more at its peak (the K₁ integrand is 1
/// at y = 0), so an absolute bound is also a bound relative to the peak.
fn truncation_point(beta: f64) -> f64 {
    let bound = |y: f64| {
        let s = (1.0 + y * y).sqrt();
        let prefactor = ((2.0 * y * y + 1.0) / s).max(1.0);
        prefactor * (-beta * energy_excess(y)).exp()
    };
    let mut hi = 1.0;
    while bound(hi) >= TRUNCATION {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) >= TRUNCATION {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn scaled_bessel(beta: f64) -> Result<[f64; 3]> {
    let y_max = truncation_point(beta);
    let mut breaks = vec![0.0];
    breaks.extend((0..=10).rev().map(|j| y_max / f64::powi(2.0, j)));

    let (values, converged) = quadrature::integrate(
        |y| {
            let s = (1.0 + y * y).sqrt();
            let g = (-beta * energy_excess(y)).exp();
            [g / s, g, (2.0 * y * y + 1.0) / s * g]
        },
        &breaks,
        BESSEL_REL_TOL,
    );
    if !converged {
        return Err(Error::Convergence(format!(
            "Bessel quadrature did not reach tolerance at beta = {beta}"
        )));
    }
    Ok(values)
}

/// Kᵢ(β) for i ∈ {0, 1, 2}.
pub fn bessel_k(order: u32, beta: f64) -> Result<f64> {
    if order > 2 {
        return Err(Error::domain(format!("Bessel order must be 0, 1 or 2, got {order}")));
    }
    let b = BesselEval::new(beta)?;
    Ok(match order {
        0 => b.k0,
        1 => b.k1,
        _ => b.k2,
    })
}

/// M(β) = ∫ e^{-β√(1+|q|²)} dq = (4π/β)·K₂(β).
pub fn m_of_beta(beta: f64) -> Result<f64> {
    Ok(4.0 * PI / beta * BesselEval::new(beta)?.k2)
}

/// ln M(β), finite for every β where M itself underflows.
pub fn ln_m_of_beta(beta: f64) -> Result<f64> {
    let b = BesselEval::new(beta)?;
    Ok((4.0 * PI / beta * b.scaled[2]).ln() - beta)
}

/// ẽ(β) = K₁/K₂ + 3/β, the equilibrium energy per particle.
pub fn e_tilde(beta: f64) -> Result<f64> {
    Ok(ClosureFns::at(beta)?.e_tilde)
}

pub fn e_tilde_prime(beta: f64) -> Result<f64> {
    Ok(ClosureFns::at(beta)?.e_tilde_prime)
}

/// h̃(β) = K₁/K₂ + 4/β.
pub fn h_tilde(beta: f64) -> Result<f64> {
    Ok(ClosureFns::at(beta)?.h_tilde)
}

/// Solves ẽ(β) = e for β.
///
/// The root is bracketed by geometric expansion from [1e-3, 1e3] and then
/// polished with Newton iterations that fall back to bisection whenever an
/// iterate leaves the bracket.
pub fn invert_e_tilde(e: f64) -> Result<f64> {
    if !(e > 1.0) || !e.is_finite() {
        return Err(Error::domain(format!(
            "energy per particle must exceed the rest mass (e > 1), got {e}"
        )));
    }

    let mut lo = 1e-3;
    let mut hi = 1e3;
    while e_tilde(lo)? < e {
        lo /= 10.0;
        if lo < 1e-200 {
            return Err(Error::Convergence(format!("no lower bracket for e = {e}")));
        }
    }
    while e_tilde(hi)? > e {
        hi *= 10.0;
        if hi > 1e16 {
            return Err(Error::Convergence(format!("no upper bracket for e = {e}")));
        }
    }

    // ẽ is decreasing: ẽ(lo) ≥ e ≥ ẽ(hi).
    let mut beta = (lo * hi).sqrt();
    for _ in 0..300 {
        let c = ClosureFns::at(beta)?;
        let residual = c.e_tilde - e;
        if residual == 0.0 {
            return Ok(beta);
        }
        if residual > 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }

        let newton = beta - residual / c.e_tilde_prime;
        let next = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else if hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if (next - beta).abs() <= 1e-14 * beta || (hi - lo) <= 1e-15 * hi {
            return Ok(next);
        }
        beta = next;
    }
    Err(Error::Convergence(format!("invert_e_tilde did not converge for e = {e}")))
}
