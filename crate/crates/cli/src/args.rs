//! Command-line definitions and the small value grammars they accept.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use modwave_core::chain::ChainSpec;
use modwave_core::continuum::ProfileShape;
use modwave_core::integrators::StepConfig;
use modwave_core::simulate::InitialCondition;

use crate::error::{CliError, CliResult};

/// Sample count used when a range omits one.
pub const DEFAULT_COUNT: usize = 101;

#[derive(Debug, Parser)]
#[command(name = "modwave", version, about = "Waves in progressively modulated spring-mass chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace chart of the Mathieu oscillator over a (delta, epsilon) grid.
    MathieuChart(MathieuArgs),
    /// Floquet multipliers and stability of a chain or of one Bloch cell.
    Monodromy(MonodromyArgs),
    /// Dispersion diagram from Floquet-Bloch modes.
    Dispersion(DispersionArgs),
    /// Time-domain simulation with space-time field output.
    Simulate(SimulateArgs),
    /// Continuum analysis: fictitious bands, group velocities, critical speed.
    Continuum(ContinuumArgs),
    /// Regenerate a figure bundle with baked parameters.
    Reproduce(ReproduceArgs),
}

/// `lo:hi` or `lo:hi:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeArg {
    pub lo: f64,
    pub hi: f64,
    pub count: Option<usize>,
}

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 2 && parts.len() != 3 {
            return Err(format!("expected lo:hi[:count], got '{s}'"));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{t}' is not a finite number in range '{s}'"))
        };
        let lo = num(parts[0])?;
        let hi = num(parts[1])?;
        if hi < lo {
            return Err(format!("range '{s}' has hi < lo"));
        }
        let count = match parts.get(2) {
            Some(c) => {
                let n: usize = c
                    .trim()
                    .parse()
                    .map_err(|_| format!("'{c}' is not a sample count in range '{s}'"))?;
                if n < 2 {
                    return Err(format!("range '{s}' needs at least 2 samples"));
                }
                Some(n)
            }
            None => None,
        };
        Ok(RangeArg { lo, hi, count })
    }
}

impl RangeArg {
    /// Sample count from the range itself or a separate flag, never both.
    pub fn resolve_count(&self, flag: Option<usize>, flag_name: &str) -> CliResult<usize> {
        match (self.count, flag) {
            (Some(_), Some(_)) => Err(CliError::usage(format!(
                "sample count given both in the range and by {flag_name}"
            ))),
            (Some(n), None) | (None, Some(n)) => Ok(n),
            (None, None) => Ok(DEFAULT_COUNT),
        }
    }

    pub fn samples(&self, count: usize) -> Vec<f64> {
        modwave_core::mathieu::linspace(self.lo, self.hi, count)
    }
}

/// A duration, either absolute or in modulation periods (`40T`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeArg {
    Absolute(f64),
    Periods(f64),
}

impl FromStr for TimeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (body, periods) = match t.strip_suffix('T') {
            Some(b) => (b, true),
            None => (t, false),
        };
        let v: f64 = if periods && body.is_empty() {
            1.0
        } else {
            body.parse().map_err(|_| format!("expected a time like 250 or 40T, got '{s}'"))?
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(format!("time must be positive, got '{s}'"));
        }
        Ok(if periods { TimeArg::Periods(v) } else { TimeArg::Absolute(v) })
    }
}

impl TimeArg {
    pub fn seconds(&self, period: f64) -> f64 {
        match *self {
            TimeArg::Absolute(t) => t,
            TimeArg::Periods(n) => n * period,
        }
    }
}

/// `dirac:SITE`, `random:SEED` or `gaussian:CENTER:WIDTH[:Q]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcArg(pub InitialCondition);

impl FromStr for IcArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("expected dirac:SITE, random:SEED or gaussian:CENTER:WIDTH[:Q], got '{s}'");
        let float = |t: &str| t.parse::<f64>().map_err(|_| bad());
        let ic = match parts.as_slice() {
            ["dirac", site] => InitialCondition::Dirac {
                site: site.parse().map_err(|_| bad())?,
            },
            ["random" | "random_normal", seed] => InitialCondition::RandomNormal {
                seed: seed.parse().map_err(|_| bad())?,
            },
            ["gaussian", center, width] => InitialCondition::Gaussian {
                center: float(center)?,
                width: float(width)?,
                carrier_q: None,
            },
            ["gaussian", center, width, q] => InitialCondition::Gaussian {
                center: float(center)?,
                width: float(width)?,
                carrier_q: Some(float(q)?),
            },
            _ => return Err(bad()),
        };
        Ok(IcArg(ic))
    }
}

/// Chain parameters from `--spec` with per-field overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// JSON file with a chain spec {z, cells, k0, m0, dk, dm, nu}.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Masses per unit cell.
    #[arg(long)]
    pub z: Option<usize>,
    /// Number of unit cells.
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long)]
    pub m0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dk: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dm: Option<f64>,
    /// Modulation frequency.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "speed")]
    pub nu: Option<f64>,
    /// Modulation speed in sites per unit time (sets nu = c 2 pi / Z).
    #[arg(long = "c", id = "speed", allow_hyphen_values = true)]
    pub speed: Option<f64>,
    /// Spring phase lag in sites.
    #[arg(long, allow_hyphen_values = true)]
    pub spring_offset: Option<f64>,
}

impl SpecArgs {
    pub fn resolve(&self) -> CliResult<ChainSpec> {
        let mut spec = match &self.spec {
            Some(path) => read_json::<ChainSpec>(path)?,
            None => ChainSpec::default(),
        };
        if let Some(v) = self.z {
            spec.z = v;
        }
        if let Some(v) = self.cells {
            spec.cells = v;
        }
        if let Some(v) = self.k0 {
            spec.k0 = v;
        }
        if let Some(v) = self.m0 {
            spec.m0 = v;
        }
        if let Some(v) = self.dk {
            spec.dk = v;
        }
        if let Some(v) = self.dm {
            spec.dm = v;
        }
        if let Some(v) = self.nu {
            spec.nu = v;
        }
        if let Some(v) = self.spring_offset {
            spec.spring_offset = v;
        }
        if let Some(c) = self.speed {
            if spec.z == 0 {
                spec.validate()?;
            }
            spec.nu = c * spec.xi();
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args)]
pub struct StepArgs {
    /// Integration steps per characteristic time.
    #[arg(long, default_value_t = StepConfig::default().steps_per_char_time)]
    pub steps: usize,
    /// Cap on fixed-point iterations per implicit step.
    #[arg(long, default_value_t = StepConfig::default().fixed_point_max_iters)]
    pub fp_max_iters: usize,
    /// Relative residual tolerance of the implicit stage solve.
    #[arg(long, default_value_t = StepConfig::default().fixed_point_tol)]
    pub fp_tol: f64,
}

impl StepArgs {
    pub fn resolve(&self) -> CliResult<StepConfig> {
        let cfg = StepConfig {
            steps_per_char_time: self.steps,
            fixed_point_max_iters: self.fp_max_iters,
            fixed_point_tol: self.fp_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct MathieuArgs {
    #[arg(long, default_value = "0:8")]
    pub delta: RangeArg,
    #[arg(long, default_value = "0:6")]
    pub epsilon: RangeArg,
    /// Grid points along delta.
    #[arg(long)]
    pub nd: Option<usize>,
    /// Grid points along epsilon.
    #[arg(long)]
    pub ne: Option<usize>,
    /// Contour level; contours are traced at +level and -level.
    #[arg(long, default_value_t = modwave_core::mathieu::TRANSITION_LEVEL)]
    pub level: f64,
    #[command(flatten)]
    pub step: StepArgs,
    /// Grid CSV (delta,epsilon,trace).
    #[arg(long)]
    pub out: PathBuf,
    /// Contour polylines as JSON.
    #[arg(long)]
    pub contours: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Factored,
    Direct,
}

#[derive(Debug, Args)]
pub struct MonodromyArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub step: StepArgs,
    /// How the full-period monodromy is obtained.
    #[arg(long, value_enum, default_value = "factored")]
    pub method: MethodArg,
    /// Analyse one Bloch cell instead of the whole chain.
    #[arg(long)]
    pub cell: bool,
    /// Bloch index l of the cell, Q = exp(2 pi i l / cells).
    #[arg(long = "Q-index", id = "q_index", requires = "cell")]
    pub q_index: Option<usize>,
    /// Unit-circle tolerance for the stability verdict.
    #[arg(long, default_value_t = modwave_core::monodromy::UNIT_CIRCLE_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DispersionArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub step: StepArgs,
    /// Keep harmonics with weight at least this fraction of the strongest.
    #[arg(long, default_value_t = 1e-3)]
    pub threshold: f64,
    /// Samples per reduced period in the harmonic decomposition.
    #[arg(long, default_value_t = 64)]
    pub samples_per_tau: usize,
    /// Largest harmonic index kept.
    #[arg(long)]
    pub window: Option<usize>,
    /// Band structure of the profile frozen at t = 0 instead.
    #[arg(long)]
    pub frozen: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Gl6,
    SymplecticEuler,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub step: StepArgs,
    /// Initial displacement: dirac:SITE, random:SEED or gaussian:CENTER:WIDTH[:Q].
    #[arg(long)]
    pub ic: IcArg,
    /// Run length, absolute or in modulation periods (40T).
    #[arg(long)]
    pub t_end: TimeArg,
    #[arg(long, value_enum, default_value = "gl6")]
    pub scheme: SchemeArg,
    /// Samples per modulation period.
    #[arg(long, conflicts_with = "stride")]
    pub samples_per_period: Option<usize>,
    /// Sample every this many integration steps.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Field CSV (t,n,abs_u,energy).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Directionality metrics as JSON (localized initial conditions only).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Also fit the two ray speeds into the metrics.
    #[arg(long, requires = "metrics")]
    pub rays: bool,
}

/// Continuum profile from `--profile` with sinusoid overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct ProfileArgs {
    /// JSON profile {L, k0, dk, rho0, drho} or {L, samples: [[x, k, rho], ...]}.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Cell length.
    #[arg(long = "L", id = "length")]
    pub length: Option<f64>,
    #[arg(long = "k0", id = "pk0")]
    pub k0: Option<f64>,
    #[arg(long = "dk", id = "pdk", allow_hyphen_values = true)]
    pub dk: Option<f64>,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub drho: Option<f64>,
}

impl ProfileArgs {
    pub fn resolve(&self) -> CliResult<ProfileShape> {
        let base = match &self.profile {
            Some(path) => read_json::<ProfileShape>(path)?,
            None => ProfileShape::Sinusoid {
                length: 1.0,
                k0: 1.0,
                dk: 0.0,
                rho0: 1.0,
                drho: 0.0,
            },
        };
        let any_sinusoid_flag =
            self.k0.is_some() || self.dk.is_some() || self.rho0.is_some() || self.drho.is_some();
        match base {
            ProfileShape::Sinusoid {
                length,
                k0,
                dk,
                rho0,
                drho,
            } => Ok(ProfileShape::Sinusoid {
                length: self.length.unwrap_or(length),
                k0: self.k0.unwrap_or(k0),
                dk: self.dk.unwrap_or(dk),
                rho0: self.rho0.unwrap_or(rho0),
                drho: self.drho.unwrap_or(drho),
            }),
            ProfileShape::Sampled { length, samples } => {
                if any_sinusoid_flag {
                    return Err(CliError::usage(
                        "sinusoid flags (--k0, --dk, --rho0, --drho) conflict with a sampled profile",
                    ));
                }
                if self.length.is_some_and(|l| l != length) {
                    return Err(CliError::usage("--L conflicts with the sampled profile's cell length"));
                }
                Ok(ProfileShape::Sampled { length, samples })
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct ContinuumArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[command(flatten)]
    pub step: StepArgs,
    /// Modulation speed.
    #[arg(long = "c", allow_hyphen_values = true)]
    pub c: f64,
    /// Fictitious frequencies for the band CSV (default spans two bands).
    #[arg(long)]
    pub omega: Option<RangeArg>,
    /// Band CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Include the critical modulation speed in the report.
    #[arg(long)]
    pub critical: bool,
    /// Include group velocities and Willis ratios in the report.
    #[arg(long)]
    pub group_velocities: bool,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
