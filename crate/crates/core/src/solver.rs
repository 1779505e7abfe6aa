//! Strang-split time integration on a periodic 1D lattice × 3D momentum grid.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli_io::{IcType, RunConfig};
use crate::error::{Error, Result};
use crate::linearization::{energy_functional, KernelBasis};
use crate::macroscopics::{self, collision_frequency, ClosureMode, Weighting};
use crate::maxwellian::{evaluate_juttner, JuttnerParams};
use crate::momentum_grid::MomentumGrid;
use crate::rng::SplitMix64;
use crate::spectral::PeriodicLattice;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportScheme {
    /// Trigonometric interpolation (exact for band-limited data).
    #[default]
    Spectral,
    /// Exact roll plus one minmod TVD step; positivity preserving.
    Upwind2,
}

/// F on (cell × momentum node), stored cell-major: `f[c·N + k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KineticState {
    pub f: Vec<f64>,
    pub t: f64,
    nodes: usize,
}

impl KineticState {
    pub fn new(f: Vec<f64>, nodes: usize) -> Result<Self> {
        if nodes == 0 || f.len() % nodes != 0 {
            return Err(Error::InvalidState(format!(
                "field of length {} is not a whole number of cells of {nodes} nodes",
                f.len()
            )));
        }
        if let Some(i) = f.iter().position(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidState(format!(
                "F is negative or not finite at cell {}, node {}",
                i / nodes,
                i % nodes
            )));
        }
        Ok(KineticState { f, t: 0.0, nodes })
    }

    /// The same field `cell` in every one of `cells` cells.
    pub fn uniform(cell: &[f64], cells: usize) -> Result<Self> {
        Self::new(cell.repeat(cells), cell.len())
    }

    pub fn cells(&self) -> usize {
        self.f.len() / self.nodes
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        &self.f[c * self.nodes..(c + 1) * self.nodes]
    }
}

/// One output record.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    /// Σ Δx Σ w F.
    pub mass: f64,
    /// Σ Δx Σ w F q.
    pub momentum: [f64; 3],
    /// Σ Δx Σ w F q⁰.
    pub energy: f64,
    /// Σ Δx Σ w F ln F, with 0·ln 0 = 0.
    pub h: f64,
    /// Energy functional of f = (F − J⁰)/√J⁰.
    pub e_f: f64,
    /// Largest cancellation-identity residual of the last relaxation step.
    pub closure_residual: f64,
    pub min_f: f64,
}

/// Stepper for a fixed grid, lattice and scheme.
pub struct Solver {
    grid: MomentumGrid,
    lattice: PeriodicLattice,
    basis: KernelBasis,
    closure_mode: ClosureMode,
    transport: TransportScheme,
    max_order: u32,
}

impl Solver {
    pub fn new(
        grid: MomentumGrid,
        lattice: PeriodicLattice,
        beta0: f64,
        closure_mode: ClosureMode,
        transport: TransportScheme,
    ) -> Result<Self> {
        let basis = KernelBasis::new(beta0, &grid)?;
        Ok(Solver {
            grid,
            lattice,
            basis,
            closure_mode,
            transport,
            max_order: 1,
        })
    }

    pub fn with_max_order(mut self, max_order: u32) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn from_config(config: &RunConfig) -> Result<Self> {
        let grid = config.validate_with_grid()?;
        let lattice = PeriodicLattice::new(config.grid.n_x, config.grid.length)?;
        Ok(Solver::new(
            grid,
            lattice,
            config.physics.beta0,
            config.scheme.closure_mode,
            config.scheme.transport,
        )?
        .with_max_order(config.output.max_order))
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn lattice(&self) -> &PeriodicLattice {
        &self.lattice
    }

    pub fn basis(&self) -> &KernelBasis {
        &self.basis
    }

    pub fn closure_mode(&self) -> ClosureMode {
        self.closure_mode
    }

    fn check_shape(&self, state: &KineticState) -> Result<()> {
        if state.nodes != self.grid.len() || state.cells() != self.lattice.len() {
            return Err(Error::InvalidState(format!(
                "state has {} cells of {} nodes, solver expects {} of {}",
                state.cells(),
                state.nodes,
                self.lattice.len(),
                self.grid.len()
            )));
        }
        Ok(())
    }

    /// J(F) of one cell. Matched attractors satisfy the identities of an
    /// exponential step of length dt, so the step conserves exactly.
    fn cell_attractor(&self, cell: &[f64], dt: f64) -> Result<macroscopics::Attractor> {
        match self.closure_mode {
            ClosureMode::Formula => macroscopics::formula_attractor(cell, &self.grid),
            ClosureMode::Matched => {
                let initial = macroscopics::macro_state(cell, &self.grid)?.params();
                macroscopics::matched_attractor(cell, &self.grid, initial, Weighting::Step(dt))
            }
        }
    }

    /// F ← J + e^{−ν dt}(F − J) in every cell. Returns the largest closure residual.
    pub fn relaxation_step(&self, state: &mut KineticState, dt: f64) -> Result<f64> {
        self.check_shape(state)?;
        if !(dt > 0.0) {
            return Err(Error::domain(format!("dt must be positive, got {dt}")));
        }
        let nodes = state.nodes;
        let results: Vec<Result<f64>> = state
            .f
            .par_chunks_mut(nodes)
            .map(|cell| {
                let a = self.cell_attractor(cell, dt)?;
                for (k, fk) in cell.iter_mut().enumerate() {
                    let decay = (-collision_frequency(&a.params, &self.grid, k) * dt).exp();
                    *fk = a.field[k] + decay * (*fk - a.field[k]);
                }
                Ok(a.residual)
            })
            .collect();
        let mut worst = 0.0f64;
        for (c, r) in results.into_iter().enumerate() {
            worst = worst.max(r.map_err(|e| e.in_cell(c))?);
        }
        Ok(worst)
    }

    /// Advects F(·, k) by q̂ₓ(k)·dt for every node k.
    pub fn transport_step(&self, state: &mut KineticState, dt: f64) -> Result<()> {
        self.check_shape(state)?;
        let nodes = state.nodes;
        let cells = state.cells();
        let mut columns = vec![0.0; nodes * cells];
        let f = &state.f;
        columns.par_chunks_mut(cells).enumerate().for_each_init(
            || (self.lattice.scratch(), Vec::new()),
            |(buf, work), (k, col)| {
                for (c, v) in col.iter_mut().enumerate() {
                    *v = f[c * nodes + k];
                }
                let d = self.grid.velocity(k)[0] * dt;
                match self.transport {
                    TransportScheme::Spectral => self.lattice.shift(col, d, buf),
                    TransportScheme::Upwind2 => self.lattice.shift_upwind(col, d, work),
                }
            },
        );
        state.f.par_chunks_mut(nodes).enumerate().for_each(|(c, cell)| {
            for (k, v) in cell.iter_mut().enumerate() {
                *v = columns[k * cells + c];
            }
        });
        Ok(())
    }

    /// Transport(dt/2) ∘ relaxation(dt) ∘ transport(dt/2).
    pub fn strang_step(&self, state: &mut KineticState, dt: f64) -> Result<f64> {
        self.transport_step(state, 0.5 * dt)?;
        let residual = self.relaxation_step(state, dt)?;
        self.transport_step(state, 0.5 * dt)?;
        state.t += dt;
        Ok(residual)
    }

    /// 0.1 / max ν over all cells and nodes, with ν from the formula closure.
    pub fn default_dt(&self, state: &KineticState) -> Result<f64> {
        let per_cell: Vec<Result<f64>> = (0..state.cells())
            .into_par_iter()
            .map(|c| {
                let p = macroscopics::macro_state(state.cell(c), &self.grid)?.params();
                Ok((0..self.grid.len())
                    .map(|k| collision_frequency(&p, &self.grid, k))
                    .fold(0.0, f64::max))
            })
            .collect();
        let mut nu_max = 0.0f64;
        for (c, r) in per_cell.into_iter().enumerate() {
            nu_max = nu_max.max(r.map_err(|e| e.in_cell(c))?);
        }
        Ok(0.1 / nu_max)
    }

    pub fn diagnostics(&self, state: &KineticState, closure_residual: f64) -> Diagnostics {
        let g = &self.grid;
        let per_cell: Vec<[f64; 7]> = state
            .f
            .par_chunks(state.nodes)
            .map(|cell| {
                let flnf: Vec<f64> = cell.iter().map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 }).collect();
                [
                    g.moment(cell, |_, _| 1.0, false),
                    g.moment(cell, |q, _| q[0], false),
                    g.moment(cell, |q, _| q[1], false),
                    g.moment(cell, |q, _| q[2], false),
                    g.moment(cell, |_, q0| q0, false),
                    g.moment(&flnf, |_, _| 1.0, false),
                    cell.iter().copied().fold(f64::INFINITY, f64::min),
                ]
            })
            .collect();
        let dx = self.lattice.dx();
        let mut sums = [0.0; 6];
        let mut min_f = f64::INFINITY;
        for row in &per_cell {
            for i in 0..6 {
                sums[i] += row[i];
            }
            min_f = min_f.min(row[6]);
        }
        Diagnostics {
            t: state.t,
            mass: sums[0] * dx,
            momentum: [sums[1] * dx, sums[2] * dx, sums[3] * dx],
            energy: sums[4] * dx,
            h: sums[5] * dx,
            e_f: self.perturbation_energy(state),
            closure_residual,
            min_f,
        }
    }

    /// f = (F − J⁰)/√J⁰ for the whole state.
    pub fn perturbation(&self, state: &KineticState) -> Vec<f64> {
        state
            .f
            .par_chunks(state.nodes)
            .flat_map_iter(|cell| self.basis.decompose(cell))
            .collect()
    }

    pub fn perturbation_energy(&self, state: &KineticState) -> f64 {
        energy_functional(&self.perturbation(state), &self.lattice, &self.grid, self.max_order)
    }

    /// F = J⁰ + f√J⁰ cell by cell.
    pub fn state_from_perturbation(&self, f: &[f64]) -> Result<KineticState> {
        let full: Vec<f64> = f.chunks(self.grid.len()).flat_map(|c| self.basis.recompose(c)).collect();
        KineticState::new(full, self.grid.len())
    }
}

/// The initial state described by the `ic` section.
pub fn initial_state(config: &RunConfig, solver: &Solver) -> Result<KineticState> {
    let grid = solver.grid();
    let lattice = solver.lattice();
    let beta0 = config.physics.beta0;
    let ic = &config.ic;
    let j0 = solver.basis().j0();
    let cells = lattice.len();
    match ic.kind {
        IcType::Equilibrium => {
            let j = evaluate_juttner(&JuttnerParams::new(ic.density, ic.velocity, beta0), grid)?;
            KineticState::uniform(&j, cells)
        }
        IcType::TwoMaxwellian => {
            let v = ic.velocity;
            let a = evaluate_juttner(&JuttnerParams::new(0.5 * ic.density, v, beta0), grid)?;
            let b = evaluate_juttner(&JuttnerParams::new(0.5 * ic.density, [-v[0], -v[1], -v[2]], beta0), grid)?;
            let cell: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            KineticState::uniform(&cell, cells)
        }
        IcType::Wave => {
            let k = 2.0 * PI * ic.mode_number as f64 / lattice.length();
            let mut f = Vec::with_capacity(cells * grid.len());
            for c in 0..cells {
                let a = ic.amplitude * (k * lattice.x(c)).cos();
                f.extend((0..grid.len()).map(|n| j0[n] * (1.0 + a * grid.nodes()[n][1])));
            }
            KineticState::new(f, grid.len())
        }
        IcType::Random => {
            let mut rng = SplitMix64::new(ic.seed);
            let mut f = Vec::with_capacity(cells * grid.len());
            for _ in 0..cells {
                f.extend(j0.iter().map(|j| j * (1.0 + ic.amplitude * rng.uniform(-1.0, 1.0))));
            }
            KineticState::new(f, grid.len())
        }
    }
}

/// Step count and effective dt so that the run ends exactly at t_end.
pub fn step_plan(t_end: f64, dt: f64) -> (usize, f64) {
    if t_end == 0.0 {
        return (0, dt);
    }
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    (steps, t_end / steps as f64)
}

/// Relative drifts of the conserved totals between two records. Momentum is
/// measured against the energy, since the total momentum may vanish.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
}

impl Drift {
    pub fn between(a: &Diagnostics, b: &Diagnostics) -> Self {
        let dp = (0..3)
            .map(|i| (b.momentum[i] - a.momentum[i]).abs())
            .fold(0.0, f64::max);
        Drift {
            mass: (b.mass - a.mass).abs() / a.mass.abs(),
            momentum: dp / a.energy.abs(),
            energy: (b.energy - a.energy).abs() / a.energy.abs(),
        }
    }

    pub fn max(&self) -> f64 {
        self.mass.max(self.momentum).max(self.energy)
    }

    /// Componentwise maximum.
    pub fn worst(self, other: Drift) -> Drift {
        Drift {
            mass: self.mass.max(other.mass),
            momentum: self.momentum.max(other.momentum),
            energy: self.energy.max(other.energy),
        }
    }
}

/// Least-squares line y = a + b·t and its coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_line(t: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = t.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mt = t.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let stt: f64 = t.iter().map(|x| (x - mt) * (x - mt)).sum();
    let sty: f64 = t.iter().zip(y).map(|(x, v)| (x - mt) * (v - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if stt == 0.0 {
        return None;
    }
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let r2 = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Some(LinearFit { slope, intercept, r2 })
}

/// Fit of ln E_f against t over records with t ≥ (1 − fraction)·t_end.
pub fn fit_log_energy(records: &[Diagnostics], fraction: f64) -> Option<LinearFit> {
    let t_end = records.last()?.t;
    let start = (1.0 - fraction) * t_end;
    let (t, y): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|d| d.t >= start - 1e-12 && d.e_f > 0.0)
        .map(|d| (d.t, d.e_f.ln()))
        .unzip();
    fit_line(&t, &y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub dt: f64,
    pub t_end: f64,
    pub closure_mode: ClosureMode,
    pub transport: TransportScheme,
    pub initial: Diagnostics,
    pub last: Diagnostics,
    /// Largest drift from the initial totals over all records.
    pub drift: Drift,
    pub max_closure_residual: f64,
    pub min_f: f64,
    /// d/dt ln E_f fitted over the final 60% of the run.
    pub decay_rate: Option<f64>,
    pub decay_r2: Option<f64>,
}

pub struct SimulationResult {
    pub records: Vec<Diagnostics>,
    pub summary: RunSummary,
    pub state: KineticState,
}

/// Steps `state` to t_end, passing a record to `sink` at t = 0, every
/// `output_every` steps and at the end. On a step error the state is left at
/// the last completed step.
pub fn run(
    solver: &Solver,
    state: &mut KineticState,
    dt: f64,
    t_end: f64,
    output_every: usize,
    mut sink: impl FnMut(&Diagnostics) -> Result<()>,
) -> Result<(Vec<Diagnostics>, RunSummary)> {
    let (steps, dt) = step_plan(t_end, dt);
    let t0 = state.t;
    let first = solver.diagnostics(state, 0.0);
    sink(&first)?;
    let mut records = vec![first];
    let mut max_residual = 0.0f64;
    let mut last_residual = 0.0;
    for step in 1..=steps {
        let mut next = state.clone();
        let residual = match solver.strang_step(&mut next, dt) {
            Ok(r) => r,
            Err(e) => {
                // Record the last valid state before giving up.
                if (step - 1) % output_every != 0 {
                    sink(&solver.diagnostics(state, last_residual))?;
                }
                return Err(e);
            }
        };
        next.t = t0 + step as f64 * dt;
        *state = next;
        last_residual = residual;
        max_residual = max_residual.max(residual);
        if step % output_every == 0 || step == steps {
            let d = solver.diagnostics(state, residual);
            sink(&d)?;
            records.push(d);
        }
    }
    let last = *records.last().expect("initial record");
    let drift = records
        .iter()
        .map(|d| Drift::between(&first, d))
        .fold(Drift::default(), Drift::worst);
    let fit = fit_log_energy(&records, 0.6);
    let summary = RunSummary {
        steps,
        dt,
        t_end,
        closure_mode: solver.closure_mode,
        transport: solver.transport,
        initial: first,
        last,
        drift,
        max_closure_residual: max_residual,
        min_f: records.iter().map(|d| d.min_f).fold(f64::INFINITY, f64::min),
        decay_rate: fit.map(|f| f.slope),
        decay_r2: fit.map(|f| f.r2),
    };
    Ok((records, summary))
}

/// Builds the solver and initial state from `config` and runs to t_end.
pub fn run_simulation(
    config: &RunConfig,
    sink: impl FnMut(&Diagnostics) -> Result<()>,
) -> Result<SimulationResult> {
    let solver = Solver::from_config(config)?;
    let mut state = initial_state(config, &solver)?;
    let dt = match config.time.dt {
        Some(dt) => dt,
        None => solver.default_dt(&state)?,
    };
    let (records, summary) = run(&solver, &mut state, dt, config.time.t_end, config.time.output_every, sink)?;
    Ok(SimulationResult { records, summary, state })
}
