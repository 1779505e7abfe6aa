use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use awbgk::checks;
use awbgk::cli_io::{self, DiagnosticsWriter};
use awbgk::decay;
use awbgk::solver;
use awbgk::special_fn::{self, BesselEval, ClosureFns};
use awbgk::Error;

#[derive(Parser)]
#[command(name = "awbgk", version, about = "Anderson-Witting relativistic BGK solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate K0, K1, K2, M and the closure functions on log-spaced beta.
    #[command(allow_negative_numbers = true)]
    Bessel {
        #[arg(long, default_value_t = 0.05)]
        beta_min: f64,
        #[arg(long, default_value_t = 50.0)]
        beta_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Write to this file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the property suites.
    Check {
        /// Only this module's suite.
        #[arg(long)]
        module: Option<String>,
    },
    /// Run a simulation and write diagnostics.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output.directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the decay experiment and write decay.csv and decay_summary.json.
    Decay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Skip the conserved-moment projection of the initial perturbation.
        #[arg(long)]
        control: bool,
    },
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_CHECKS: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_VALIDATION);
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Bessel {
            beta_min,
            beta_max,
            points,
            output,
        } => bessel(beta_min, beta_max, points, output.as_deref()),
        Command::Check { module } => return check(module.as_deref()),
        Command::Simulate { config, output } => simulate(&config, output.as_deref()),
        Command::Decay {
            config,
            output,
            control,
        } => run_decay(&config, output.as_deref(), control),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("AW_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("AW_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn bessel(beta_min: f64, beta_max: f64, points: usize, output: Option<&Path>) -> awbgk::Result<u8> {
    if !(beta_min > 0.0 && beta_min.is_finite()) {
        return Err(Error::Config {
            key: "beta-min".into(),
            reason: format!("must be positive, got {beta_min}"),
        });
    }
    if !(beta_max >= beta_min && beta_max.is_finite()) {
        return Err(Error::Config {
            key: "beta-max".into(),
            reason: format!("must be at least beta-min, got {beta_max}"),
        });
    }
    if points == 0 || (points == 1 && beta_max != beta_min) {
        return Err(Error::Config {
            key: "points".into(),
            reason: "need at least 2 points for a range, 1 for a single beta".into(),
        });
    }
    let header = ["beta", "K0", "K1", "K2", "M", "e_tilde", "h_tilde", "e_tilde_prime"];
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let beta = if points == 1 {
            beta_min
        } else {
            let s = i as f64 / (points - 1) as f64;
            (beta_min.ln() + s * (beta_max.ln() - beta_min.ln())).exp()
        };
        let b = BesselEval::new(beta)?;
        let c = ClosureFns::from_bessel(&b);
        rows.push(vec![beta, b.k0, b.k1, b.k2, special_fn::m_of_beta(beta)?, c.e_tilde, c.h_tilde, c.e_tilde_prime]);
    }
    match output {
        Some(path) => cli_io::write_csv(path, &header, &rows)?,
        None => {
            let mut out = io::stdout().lock();
            writeln!(out, "{}", header.join(","))?;
            for row in &rows {
                let cells: Vec<String> = row.iter().map(|v| cli_io::format_float(*v)).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
    }
    Ok(0)
}

fn check(module: Option<&str>) -> ExitCode {
    let suites = match checks::select(module) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let mut failed = 0;
    for suite in suites {
        for outcome in checks::run_suite(suite) {
            match &outcome.result {
                Ok(()) => println!("PASS {}::{}", suite.name, outcome.name),
                Err(msg) => {
                    failed += 1;
                    println!("FAIL {}::{}: {msg}", suite.name, outcome.name);
                }
            }
        }
    }
    if failed > 0 {
        println!("{failed} check(s) failed");
        ExitCode::from(EXIT_CHECKS)
    } else {
        ExitCode::SUCCESS
    }
}

fn output_dir(config: &cli_io::RunConfig, output: Option<&Path>) -> PathBuf {
    output.map(Path::to_path_buf).unwrap_or_else(|| config.output.directory.clone())
}

fn simulate(config_path: &Path, output: Option<&Path>) -> awbgk::Result<u8> {
    let (config, text) = cli_io::load_config(config_path)?;
    let dir = output_dir(&config, output);
    cli_io::write_echo(&dir, &text)?;
    let start = Instant::now();
    let mut writer = DiagnosticsWriter::create(&dir.join("diagnostics.csv"))?;
    let result = solver::run_simulation(&config, |d| writer.write(d))?;
    cli_io::write_json(&dir.join("summary.json"), &result.summary)?;
    log::info!(
        "{} steps to t = {} in {:.2} s; max drift {:.3e}",
        result.summary.steps,
        result.summary.t_end,
        start.elapsed().as_secs_f64(),
        result.summary.drift.max()
    );
    Ok(0)
}

fn run_decay(config_path: &Path, output: Option<&Path>, control: bool) -> awbgk::Result<u8> {
    let (config, text) = cli_io::load_config(config_path)?;
    let dir = output_dir(&config, output);
    cli_io::write_echo(&dir, &text)?;
    let start = Instant::now();
    let run = decay::decay_experiment(&config, !control)?;
    let rows: Vec<Vec<f64>> = run.records.iter().map(|d| vec![d.t, d.e_f]).collect();
    cli_io::write_csv(&dir.join("decay.csv"), &["t", "E_f"], &rows)?;
    cli_io::write_json(&dir.join("decay_summary.json"), &run.report)?;
    log::info!(
        "rate {:.6e}, R² {:.6}, in {:.2} s",
        run.report.rate,
        run.report.r2,
        start.elapsed().as_secs_f64()
    );
    if control || run.report.passed {
        Ok(0)
    } else {
        for f in &run.report.failures {
            eprintln!("decay check failed: {f}");
        }
        Ok(EXIT_RUNTIME)
    }
}
