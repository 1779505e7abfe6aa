//! Decay of the perturbation energy E_f near the global Maxwellian.
//!
//! The initial perturbation is a single x-mode with a shear profile plus an
//! x-uniform part drawn from the seed:
//!
//! f₀ = a·[cos(2πmx/L)·q_y + c₀ + c·q + c₄q⁰]·√J⁰,  cᵢ uniform in [−1, 1).
//!
//! Before the run the kernel components of the spatial mean are removed, so
//! the total mass, momentum and energy equal those of J⁰. Without that
//! projection (the control) E_f settles at the energy of the removed part.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cli_io::RunConfig;
use crate::error::{Error, Result};
use crate::linearization::energy_functional;
use crate::rng::SplitMix64;
use crate::solver::{self, Diagnostics, Drift, KineticState, Solver};

/// Fraction of the run (at the end) used for the fit.
pub const FIT_FRACTION: f64 = 0.6;
pub const MIN_R2: f64 = 0.99;
/// Allowed relative growth of E_f between records after the transient.
pub const MONOTONE_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// d/dt ln E_f over the final 60% of the run.
    pub rate: f64,
    pub r2: f64,
    pub drift: Drift,
    pub projected: bool,
    pub initial_e_f: f64,
    pub final_e_f: f64,
    /// E_f of the kernel part of the spatial mean, the level a control run
    /// settles at.
    pub kernel_e_f: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

pub struct DecayRun {
    pub report: DecayReport,
    pub records: Vec<Diagnostics>,
}

/// f₀ before projection, cell-major.
pub fn initial_perturbation(config: &RunConfig, solver: &Solver) -> Vec<f64> {
    let grid = solver.grid();
    let lattice = solver.lattice();
    let ic = &config.ic;
    let sqrt_j0 = solver.basis().sqrt_j0();
    let mut rng = SplitMix64::new(ic.seed);
    let c: [f64; 5] = std::array::from_fn(|_| rng.uniform(-1.0, 1.0));
    let k = 2.0 * PI * ic.mode_number as f64 / lattice.length();

    let mean: Vec<f64> = (0..grid.len())
        .map(|n| {
            let q = grid.nodes()[n];
            c[0] + c[1] * q[0] + c[2] * q[1] + c[3] * q[2] + c[4] * grid.q0()[n]
        })
        .collect();
    let mut f = Vec::with_capacity(lattice.len() * grid.len());
    for cell in 0..lattice.len() {
        let wave = (k * lattice.x(cell)).cos();
        f.extend((0..grid.len()).map(|n| ic.amplitude * (wave * grid.nodes()[n][1] + mean[n]) * sqrt_j0[n]));
    }
    f
}

/// Subtracts P(mean_x f) from every cell, returning the removed field.
pub fn project_conserved(f: &mut [f64], solver: &Solver) -> Vec<f64> {
    let nodes = solver.grid().len();
    let cells = f.len() / nodes;
    let mut mean = vec![0.0; nodes];
    for cell in f.chunks(nodes) {
        for (m, v) in mean.iter_mut().zip(cell) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= cells as f64);
    let kernel = solver.basis().project(&mean, solver.grid());
    for cell in f.chunks_mut(nodes) {
        for (v, p) in cell.iter_mut().zip(&kernel) {
            *v -= p;
        }
    }
    kernel
}

pub fn decay_experiment(config: &RunConfig, project: bool) -> Result<DecayRun> {
    let solver = Solver::from_config(config)?;
    let mut f0 = initial_perturbation(config, &solver);
    let kernel = {
        let mut copy = f0.clone();
        let k = project_conserved(&mut copy, &solver);
        if project {
            f0 = copy;
        }
        k
    };
    let kernel_e_f = energy_functional(
        &kernel.repeat(solver.lattice().len()),
        solver.lattice(),
        solver.grid(),
        config.output.max_order,
    );
    let mut state: KineticState = solver.state_from_perturbation(&f0).map_err(|_| {
        Error::config("ic.amplitude", format!("{} makes the initial distribution negative", config.ic.amplitude))
    })?;
    let dt = match config.time.dt {
        Some(dt) => dt,
        None => solver.default_dt(&state)?,
    };
    let (records, summary) = solver::run(&solver, &mut state, dt, config.time.t_end, config.time.output_every, |_| Ok(()))?;

    let fit = solver::fit_log_energy(&records, FIT_FRACTION)
        .ok_or_else(|| Error::InvalidState("too few records to fit ln E_f".to_string()))?;
    let mut failures = Vec::new();
    if !(fit.slope < 0.0) {
        failures.push(format!("fitted rate {:.4e} is not negative", fit.slope));
    }
    if !(fit.r2 >= MIN_R2) {
        failures.push(format!("fit R² {:.6} is below {MIN_R2}", fit.r2));
    }
    let start = (1.0 - FIT_FRACTION) * config.time.t_end;
    for w in records.windows(2).filter(|w| w[0].t >= start - 1e-12) {
        if w[1].e_f > w[0].e_f * (1.0 + MONOTONE_TOL) {
            failures.push(format!("E_f grows from {:.6e} to {:.6e} at t = {}", w[0].e_f, w[1].e_f, w[1].t));
            break;
        }
    }
    let report = DecayReport {
        rate: fit.slope,
        r2: fit.r2,
        drift: summary.drift,
        projected: project,
        initial_e_f: records[0].e_f,
        final_e_f: summary.last.e_f,
        kernel_e_f,
        passed: failures.is_empty(),
        failures,
    };
    Ok(DecayRun { report, records })
}
