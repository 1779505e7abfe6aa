//! Property suites run by `awbgk check`. Each suite uses small grids so the
//! whole set finishes in seconds.

use std::path::Path;

use crate::cli_io::{self, RunConfig};
use crate::error::{Error, Result};
use crate::linearization::{self, KernelBasis};
use crate::macroscopics::{self, ClosureMode};
use crate::maxwellian::{self, evaluate_juttner, JuttnerParams};
use crate::momentum_grid::MomentumGrid;
use crate::rng::SplitMix64;
use crate::solver::{KineticState, Solver, TransportScheme};
use crate::special_fn;
use crate::spectral::PeriodicLattice;

pub type Check = fn() -> std::result::Result<(), String>;

pub struct Suite {
    pub name: &'static str,
    pub checks: &'static [(&'static str, Check)],
}

pub struct Outcome {
    pub name: &'static str,
    pub result: std::result::Result<(), String>,
}

pub const SUITES: &[Suite] = &[
    Suite {
        name: "special_fn",
        checks: &[
            ("recurrence", special_recurrence),
            ("log_derivative_of_m", special_log_derivative),
            ("closure_monotone_and_invertible", special_inversion),
        ],
    },
    Suite {
        name: "momentum_grid",
        checks: &[
            ("odd_moments_vanish", grid_odd_moments),
            ("normalization", grid_normalization),
            ("odd_n_axis_rejected", grid_rejects_odd),
        ],
    },
    Suite {
        name: "maxwellian",
        checks: &[("boost", maxwellian_boost), ("positivity", maxwellian_positive)],
    },
    Suite {
        name: "macroscopics",
        checks: &[
            ("equilibrium_recovered", macro_equilibrium),
            ("matched_fixed_point", macro_matched_fixed_point),
        ],
    },
    Suite {
        name: "linearization",
        checks: &[
            ("gram", lin_gram),
            ("dissipativity", lin_dissipativity),
            ("gamma_quadratic", lin_gamma_quadratic),
        ],
    },
    Suite {
        name: "solver",
        checks: &[
            ("equilibrium_stationary", solver_equilibrium),
            ("h_theorem", solver_h_theorem),
            ("transport_period", solver_transport_period),
        ],
    },
    Suite {
        name: "cli_io",
        checks: &[("config_validation", io_config), ("rng_reference", io_rng)],
    },
];

/// All suites, or the one named `module`.
pub fn select(module: Option<&str>) -> Result<Vec<&'static Suite>> {
    match module {
        None => Ok(SUITES.iter().collect()),
        Some(name) => SUITES
            .iter()
            .find(|s| s.name == name)
            .map(|s| vec![s])
            .ok_or_else(|| {
                let names: Vec<&str> = SUITES.iter().map(|s| s.name).collect();
                Error::Config {
                    key: "module".into(),
                    reason: format!("unknown module `{name}`; expected one of {}", names.join(", ")),
                }
            }),
    }
}

pub fn run_suite(suite: &Suite) -> Vec<Outcome> {
    suite
        .checks
        .iter()
        .map(|&(name, check)| Outcome { name, result: check() })
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn log_betas(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| (0.05f64.ln() + i as f64 / (n - 1) as f64 * (1000f64).ln()).exp())
}

fn special_recurrence() -> std::result::Result<(), String> {
    for beta in log_betas(50) {
        let k0 = special_fn::bessel_k(0, beta).map_err(err)?;
        let k1 = special_fn::bessel_k(1, beta).map_err(err)?;
        let k2 = special_fn::bessel_k(2, beta).map_err(err)?;
        let rel = (k2 - 2.0 * k1 / beta - k0).abs() / k2;
        ensure(rel < 1e-10, || format!("K2 recurrence off by {rel:.2e} at beta = {beta}"))?;
    }
    Ok(())
}

fn special_log_derivative() -> std::result::Result<(), String> {
    for beta in log_betas(20) {
        let h = 1e-5 * beta;
        let d = (special_fn::ln_m_of_beta(beta + h).map_err(err)? - special_fn::ln_m_of_beta(beta - h).map_err(err)?)
            / (2.0 * h);
        let e = special_fn::e_tilde(beta).map_err(err)?;
        ensure(((d + e) / e).abs() < 1e-6, || format!("M'/M + e_tilde = {:.2e} at beta = {beta}", d + e))?;
    }
    Ok(())
}

fn special_inversion() -> std::result::Result<(), String> {
    let mut prev = f64::INFINITY;
    for beta in log_betas(50) {
        let e = special_fn::e_tilde(beta).map_err(err)?;
        ensure(e > 1.0 && e < prev, || format!("e_tilde not decreasing above 1 at beta = {beta}"))?;
        prev = e;
        let back = special_fn::invert_e_tilde(e).map_err(err)?;
        ensure(((back - beta) / beta).abs() < 1e-10, || format!("round trip {beta} -> {back}"))?;
    }
    Ok(())
}

fn grid_odd_moments() -> std::result::Result<(), String> {
    let g = MomentumGrid::for_beta(1.0, 16).map_err(err)?;
    let j0 = maxwellian::global_maxwellian(1.0, &g).map_err(err)?;
    for i in 0..3 {
        let m = g.moment(&j0, |q, _| q[i], false);
        ensure(m == 0.0, || format!("odd moment {i} = {m:e}"))?;
    }
    Ok(())
}

fn grid_normalization() -> std::result::Result<(), String> {
    let g = MomentumGrid::for_beta(1.0, 32).map_err(err)?;
    let d = g.normalization_defect(1.0).map_err(err)?;
    ensure(d.abs() < 1e-6, || format!("normalization defect {d:e}"))
}

fn grid_rejects_odd() -> std::result::Result<(), String> {
    ensure(MomentumGrid::for_beta(1.0, 15).is_err(), || "n_axis = 15 accepted".into())
}

fn maxwellian_boost() -> std::result::Result<(), String> {
    let mut rng = SplitMix64::new(11);
    let eta = maxwellian::minkowski();
    for _ in 0..100 {
        let u = [rng.uniform(-2.8, 2.8), rng.uniform(-2.8, 2.8), rng.uniform(-2.8, 2.8)];
        let p = JuttnerParams::new(1.0, u, 1.0);
        let b = maxwellian::lorentz_boost(u);
        let r = b.apply(p.four_velocity());
        let off = (r[0] - 1.0).abs().max(r[1].abs()).max(r[2].abs()).max(r[3].abs());
        let metric = (b.lambda.transpose() * eta * b.lambda - eta).abs().max();
        ensure(off < 1e-12 && metric < 1e-12, || format!("boost error {off:.2e}, metric {metric:.2e}"))?;
    }
    Ok(())
}

fn maxwellian_positive() -> std::result::Result<(), String> {
    let g = MomentumGrid::for_beta(1.0, 16).map_err(err)?;
    let j = evaluate_juttner(&JuttnerParams::new(1.0, [0.5, -0.3, 0.2], 2.0), &g).map_err(err)?;
    ensure(j.iter().all(|&v| v > 0.0), || "Juttner has a non-positive value".into())
}

fn macro_equilibrium() -> std::result::Result<(), String> {
    let g = MomentumGrid::for_beta(1.0, 24).map_err(err)?;
    let p = JuttnerParams::new(1.3, [0.2, 0.0, -0.1], 1.0);
    let j = evaluate_juttner(&p, &g).map_err(err)?;
    let s = macroscopics::macro_state(&j, &g).map_err(err)?;
    let dv = (0..3).map(|i| (s.velocity[i + 1] - p.velocity[i]).abs()).fold(0.0, f64::max);
    ensure(
        (s.n - p.n).abs() < 1e-6 && (s.beta - p.beta).abs() < 1e-6 && dv < 1e-6,
        || format!("recovered n = {}, beta = {}, velocity error {dv:.2e}", s.n, s.beta),
    )
}

fn macro_matched_fixed_point() -> std::result::Result<(), String> {
    let g = MomentumGrid::for_beta(1.0, 16).map_err(err)?;
    let j = evaluate_juttner(&JuttnerParams::new(1.0, [0.1, 0.0, 0.0], 1.0), &g).map_err(err)?;
    let a = macroscopics::aw_attractor(&j, &g, ClosureMode::Matched).map_err(err)?;
    let worst = a.field.iter().zip(&j).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    ensure(worst < 1e-12, || format!("J(J) differs from J by {worst:.2e}"))
}

fn lin_basis() -> std::result::Result<(MomentumGrid, KernelBasis), String> {
    let g = MomentumGrid::for_beta(1.0, 24).map_err(err)?;
    let b = KernelBasis::new(1.0, &g).map_err(err)?;
    Ok((g, b))
}

fn random_perturbation(g: &MomentumGrid, b: &KernelBasis, rng: &mut SplitMix64) -> Vec<f64> {
    let c: [f64; 6] = std::array::from_fn(|_| rng.uniform(-1.0, 1.0));
    (0..g.len())
        .map(|k| {
            let q = g.nodes()[k];
            let poly = c[0] + c[1] * q[0] + c[2] * q[1] * q[1] + c[3] * q[2] + c[4] * g.q0()[k] + c[5] * q[0] * q[1];
            (poly + 0.1 * rng.uniform(-1.0, 1.0)) * b.sqrt_j0()[k]
        })
        .collect()
}

fn lin_gram() -> std::result::Result<(), String> {
    let (_, b) = lin_basis()?;
    let dev = (b.gram() - nalgebra::Matrix5::identity()).abs().max();
    ensure(dev < 5e-6, || format!("Gram deviation {dev:.2e}"))
}

fn lin_dissipativity() -> std::result::Result<(), String> {
    let (g, b) = lin_basis()?;
    let mut rng = SplitMix64::new(5);
    for _ in 0..20 {
        let f = random_perturbation(&g, &b, &mut rng);
        let l = b.linearized_l(&f, &g);
        let lhs = g.inner(&l, &f);
        let rhs = -g.inner(&l, &l);
        ensure((lhs - rhs).abs() < 1e-10, || format!("<Lf,f> = {lhs:e}, -|(I-P)f|^2 = {rhs:e}"))?;
    }
    Ok(())
}

fn lin_gamma_quadratic() -> std::result::Result<(), String> {
    let (g, b) = lin_basis()?;
    let mut rng = SplitMix64::new(9);
    let f = random_perturbation(&g, &b, &mut rng);
    let mut ratios = Vec::new();
    for eps in [1e-2, 5e-3, 2.5e-3] {
        let scaled: Vec<f64> = f.iter().map(|v| eps * v).collect();
        let gamma = linearization::gamma_residual(&b.recompose(&scaled), &b, &g, ClosureMode::Matched).map_err(err)?;
        ratios.push(g.inner(&gamma, &gamma).sqrt() / (eps * eps));
    }
    let spread = ratios.iter().fold(0.0f64, |m, r| m.max((r / ratios[0] - 1.0).abs()));
    ensure(spread < 0.15, || format!("|Gamma|/eps^2 = {ratios:?}"))
}

fn small_solver(n_x: usize) -> std::result::Result<Solver, String> {
    let g = MomentumGrid::for_beta(1.0, 16).map_err(err)?;
    let lat = PeriodicLattice::new(n_x, 1.0).map_err(err)?;
    Solver::new(g, lat, 1.0, ClosureMode::Matched, TransportScheme::Spectral).map_err(err)
}

fn solver_equilibrium() -> std::result::Result<(), String> {
    let s = small_solver(4)?;
    let j = evaluate_juttner(&JuttnerParams::new(1.0, [0.1, 0.0, 0.0], 1.0), s.grid()).map_err(err)?;
    let mut state = KineticState::uniform(&j, 4).map_err(err)?;
    for _ in 0..10 {
        let before = state.f.clone();
        s.strang_step(&mut state, 0.1).map_err(err)?;
        let worst = state.f.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(worst < 1e-11, || format!("equilibrium moved by {worst:.2e}"))?;
    }
    Ok(())
}

fn solver_h_theorem() -> std::result::Result<(), String> {
    let s = small_solver(2)?;
    let a = evaluate_juttner(&JuttnerParams::new(0.5, [0.6, 0.0, 0.0], 1.0), s.grid()).map_err(err)?;
    let b = evaluate_juttner(&JuttnerParams::new(0.5, [-0.6, 0.0, 0.0], 1.0), s.grid()).map_err(err)?;
    let cell: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let mut state = KineticState::uniform(&cell, 2).map_err(err)?;
    let mut h = s.diagnostics(&state, 0.0).h;
    for _ in 0..20 {
        s.relaxation_step(&mut state, 0.2).map_err(err)?;
        let next = s.diagnostics(&state, 0.0).h;
        ensure(next <= h + 1e-12, || format!("H increased from {h} to {next}"))?;
        h = next;
    }
    Ok(())
}

fn solver_transport_period() -> std::result::Result<(), String> {
    let s = small_solver(8)?;
    let n = s.grid().len();
    let mut rng = SplitMix64::new(2);
    let f: Vec<f64> = (0..8 * n).map(|i| s.basis().j0()[i % n] * (1.0 + 0.01 * rng.uniform(-1.0, 1.0))).collect();
    let mut state = KineticState::new(f.clone(), n).map_err(err)?;
    // A node with q̂ₓ·dt = L for one of the nodes is arbitrary; a full period
    // for every node at once is dt = L/q̂ₓ per column, so test one column.
    let k = s.grid().index(s.grid().n_axis() - 1, 3, 5);
    let dt = s.lattice().length() / s.grid().velocity(k)[0];
    s.transport_step(&mut state, dt).map_err(err)?;
    for c in 0..8 {
        let d = (state.f[c * n + k] - f[c * n + k]).abs();
        ensure(d < 1e-12 * f[c * n + k].max(1e-300) + 1e-300, || format!("full-period shift error {d:e}"))?;
    }
    Ok(())
}

fn io_config() -> std::result::Result<(), String> {
    let p = Path::new("check.json");
    let c = cli_io::parse_config(r#"{"physics": {"beta0": 1.0}}"#, p).map_err(err)?;
    ensure(c == RunConfig::with_beta0(1.0), || "defaults not filled".into())?;
    let odd = cli_io::parse_config(r#"{"physics": {"beta0": 1.0}, "grid": {"n_axis": 15}}"#, p);
    ensure(
        matches!(&odd, Err(e) if e.to_string().contains("n_axis must be even")),
        || "n_axis = 15 not rejected".into(),
    )?;
    let typo = cli_io::parse_config(r#"{"physics": {"betaO": 1.0}}"#, p);
    ensure(
        matches!(&typo, Err(e) if e.to_string().contains("betaO")),
        || "unknown key not named".into(),
    )
}

fn io_rng() -> std::result::Result<(), String> {
    let v = SplitMix64::new(1234567).next_u64();
    ensure(v == 6457827717110365317, || format!("first output {v}"))
}
