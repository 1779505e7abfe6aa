//! Run configuration, validation and deterministic CSV/JSON output.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::macroscopics::ClosureMode;
use crate::momentum_grid::{self, GridKind, MomentumGrid, DEFAULT_TOL_GRID};
use crate::solver::{Diagnostics, TransportScheme};
use crate::special_fn;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub ic: IcConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub beta0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_kind")]
    pub kind: GridKind,
    /// Defaults to max(10, 30/beta0).
    #[serde(default)]
    pub q_max: Option<f64>,
    #[serde(default = "default_n_axis")]
    pub n_axis: usize,
    /// Sinh-map scale; defaults to 1/sqrt(max(1, beta0)).
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default = "default_n_x")]
    pub n_x: usize,
    #[serde(rename = "L", default = "default_length")]
    pub length: f64,
    #[serde(default = "default_tol_grid")]
    pub tol_grid: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Defaults to 0.1/max ν of the initial state.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_output_every")]
    pub output_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    #[serde(default)]
    pub closure_mode: ClosureMode,
    #[serde(default)]
    pub transport: TransportScheme,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcType {
    /// Uniform J(density, velocity, beta0).
    Equilibrium,
    /// F = J⁰(1 + a·cos(2πmx/L)·q_y).
    Wave,
    /// Uniform ½J(1, velocity, beta0) + ½J(1, −velocity, beta0).
    TwoMaxwellian,
    /// F = J⁰(1 + a·r) with r uniform in [−1, 1) per node and cell.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcConfig {
    #[serde(rename = "type", default = "default_ic_type")]
    pub kind: IcType,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_mode_number")]
    pub mode_number: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default)]
    pub velocity: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Highest total derivative order in E_f.
    #[serde(default = "default_max_order")]
    pub max_order: u32,
}

fn default_kind() -> GridKind {
    GridKind::Sinh
}
fn default_n_axis() -> usize {
    32
}
fn default_n_x() -> usize {
    64
}
fn default_length() -> f64 {
    10.0
}
fn default_tol_grid() -> f64 {
    DEFAULT_TOL_GRID
}
fn default_t_end() -> f64 {
    20.0
}
fn default_output_every() -> usize {
    10
}
fn default_ic_type() -> IcType {
    IcType::Wave
}
fn default_amplitude() -> f64 {
    1e-3
}
fn default_mode_number() -> u32 {
    1
}
fn default_density() -> f64 {
    1.0
}
fn default_directory() -> PathBuf {
    PathBuf::from("out")
}
fn default_max_order() -> u32 {
    1
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            kind: default_kind(),
            q_max: None,
            n_axis: default_n_axis(),
            scale: None,
            n_x: default_n_x(),
            length: default_length(),
            tol_grid: default_tol_grid(),
        }
    }
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            dt: None,
            t_end: default_t_end(),
            output_every: default_output_every(),
        }
    }
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            closure_mode: ClosureMode::default(),
            transport: TransportScheme::default(),
        }
    }
}

impl Default for IcConfig {
    fn default() -> Self {
        IcConfig {
            kind: default_ic_type(),
            amplitude: default_amplitude(),
            mode_number: default_mode_number(),
            seed: 0,
            density: default_density(),
            velocity: [0.0; 3],
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            max_order: default_max_order(),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Defaults for everything except beta0.
    pub fn with_beta0(beta0: f64) -> Self {
        RunConfig {
            physics: PhysicsConfig { beta0 },
            grid: GridConfig::default(),
            time: TimeConfig::default(),
            scheme: SchemeConfig::default(),
            ic: IcConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn q_max(&self) -> f64 {
        self.grid
            .q_max
            .unwrap_or_else(|| momentum_grid::default_q_max(self.physics.beta0))
    }

    pub fn scale(&self) -> f64 {
        self.grid
            .scale
            .unwrap_or_else(|| momentum_grid::default_sinh_scale(self.physics.beta0))
    }

    pub fn build_grid(&self) -> Result<MomentumGrid> {
        MomentumGrid::build(self.grid.kind, self.q_max(), self.grid.n_axis, self.scale())
    }

    /// Checks every constraint that does not need a built grid.
    pub fn validate(&self) -> Result<()> {
        positive("physics.beta0", self.physics.beta0)?;
        special_fn::ClosureFns::at(self.physics.beta0)
            .map_err(|e| Error::config("physics.beta0", e.to_string()))?;
        positive("grid.q_max", self.q_max())?;
        positive("grid.scale", self.scale())?;
        if self.grid.n_axis % 2 != 0 {
            return Err(Error::config("grid.n_axis", "n_axis must be even"));
        }
        if self.grid.n_axis < 8 {
            return Err(Error::config("grid.n_axis", format!("must be at least 8, got {}", self.grid.n_axis)));
        }
        if self.grid.n_x < 2 || self.grid.n_x % 2 != 0 {
            return Err(Error::config("grid.n_x", format!("must be an even number >= 2, got {}", self.grid.n_x)));
        }
        positive("grid.L", self.grid.length)?;
        positive("grid.tol_grid", self.grid.tol_grid)?;
        if let Some(dt) = self.time.dt {
            positive("time.dt", dt)?;
        }
        if !(self.time.t_end >= 0.0 && self.time.t_end.is_finite()) {
            return Err(Error::config("time.t_end", format!("must be non-negative, got {}", self.time.t_end)));
        }
        if self.time.output_every == 0 {
            return Err(Error::config("time.output_every", "must be at least 1"));
        }
        if self.output.max_order > 2 {
            return Err(Error::config("output.max_order", format!("must be at most 2, got {}", self.output.max_order)));
        }
        positive("ic.density", self.ic.density)?;
        if !self.ic.velocity.iter().all(|v| v.is_finite()) {
            return Err(Error::config("ic.velocity", "must be finite"));
        }
        if !(self.ic.amplitude >= 0.0 && self.ic.amplitude.is_finite()) {
            return Err(Error::config("ic.amplitude", format!("must be non-negative, got {}", self.ic.amplitude)));
        }
        if self.ic.mode_number == 0 && self.ic.kind == IcType::Wave {
            return Err(Error::config("ic.mode_number", "must be at least 1"));
        }
        if 2 * self.ic.mode_number as usize > self.grid.n_x {
            return Err(Error::config(
                "ic.mode_number",
                format!("mode {} is not resolved by n_x = {}", self.ic.mode_number, self.grid.n_x),
            ));
        }
        // 1 + a·s(q) must stay non-negative on the grid.
        let reach = match self.ic.kind {
            IcType::Wave => self.q_max(),
            IcType::Random => 1.0,
            _ => 0.0,
        };
        if self.ic.amplitude * reach >= 1.0 {
            return Err(Error::config(
                "ic.amplitude",
                format!("{} makes the initial distribution negative", self.ic.amplitude),
            ));
        }
        Ok(())
    }

    /// Full validation, including the grid's resolution of J⁰.
    pub fn validate_with_grid(&self) -> Result<MomentumGrid> {
        self.validate()?;
        let grid = self.build_grid()?;
        grid.check_resolution(self.physics.beta0, self.grid.tol_grid)
            .map_err(|e| match e {
                Error::Config { reason, .. } => Error::config("grid.n_axis", reason),
                other => other,
            })?;
        Ok(grid)
    }
}

/// Parses and validates a configuration file. Returns the raw text as well so
/// it can be echoed verbatim.
pub fn load_config(path: &Path) -> Result<(RunConfig, String)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
    let config = parse_config(&text, path)?;
    Ok((config, text))
}

pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        // serde_json appends " at line L column C"; keep only the message.
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message,
        }
    })?;
    config.validate()?;
    Ok(config)
}

/// Writes `config.echo.json` (the file exactly as read) into `dir`.
pub fn write_echo(dir: &Path, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.echo.json"), text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub const DIAGNOSTICS_HEADER: &str =
    "t,mass,momentum_x,momentum_y,momentum_z,energy,H,E_f,closure_residual,min_F";

/// Streams diagnostics rows; each row is flushed when written.
pub struct DiagnosticsWriter<W: Write> {
    out: W,
}

impl DiagnosticsWriter<BufWriter<fs::File>> {
    pub fn create(path: &Path) -> Result<Self> {
        Self::new(BufWriter::new(fs::File::create(path)?))
    }
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{DIAGNOSTICS_HEADER}")?;
        out.flush()?;
        Ok(DiagnosticsWriter { out })
    }

    pub fn write(&mut self, d: &Diagnostics) -> Result<()> {
        let fields = [
            d.t,
            d.mass,
            d.momentum[0],
            d.momentum[1],
            d.momentum[2],
            d.energy,
            d.h,
            d.e_f,
            d.closure_residual,
            d.min_f,
        ];
        let row: Vec<String> = fields.iter().map(|v| format_float(*v)).collect();
        writeln!(self.out, "{}", row.join(","))?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Shortest round-trip representation in scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:e}")
}

/// Writes rows of floats under a header.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}
